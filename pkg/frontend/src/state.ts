// UI view state: latest-wins frame slot, recording mirrored from the
// server (the server is the source of truth), outcome gating for input.

import { FrameError, ServerFrame, StateFrame, parseFrame } from "./protocol.js";

export interface ViewState {
  latest: StateFrame | null;
  recording: boolean; // as acknowledged by the server
  recordingRequested: boolean;
  outcome: string | null;
  connection: "connecting" | "open" | "closed";
  lastError: string | null;
  worlds: string[];
  limits: { v_max: number; w_max: number };
  framesDropped: number;
  framesSeen: number;
}

export function initialView(): ViewState {
  return {
    latest: null,
    recording: false,
    recordingRequested: false,
    outcome: null,
    connection: "connecting",
    lastError: null,
    worlds: [],
    limits: { v_max: 0, w_max: 0 },
    framesDropped: 0,
    framesSeen: 0,
  };
}

/** Consume one raw server message; the view keeps only the latest state
 * frame (no queue growth). Malformed frames set the error banner but keep
 * the connection alive. */
export function consumeMessage(view: ViewState, raw: string): void {
  let frame: ServerFrame;
  try {
    frame = parseFrame(raw);
  } catch (e) {
    view.lastError = e instanceof FrameError ? e.message : String(e);
    return;
  }
  switch (frame.type) {
    case "hello":
      view.limits = frame.limits;
      view.worlds = frame.worlds;
      view.connection = "open";
      return;
    case "worlds":
      view.worlds = frame.ids;
      return;
    case "error":
      view.lastError = frame.message;
      return;
    case "state":
      if (view.latest !== null) view.framesDropped += 1;
      view.framesSeen += 1;
      view.latest = frame;
      view.recording = frame.recording; // server acknowledgment only
      view.outcome = frame.outcome;
      return;
  }
}

/** Take the latest frame for rendering, leaving the slot empty. */
export function takeLatest(view: ViewState): StateFrame | null {
  const f = view.latest;
  view.latest = null;
  return f;
}

/** Input is disabled once an outcome banner is up, until a reset. */
export function inputEnabled(view: ViewState): boolean {
  return view.connection === "open" && view.outcome === null;
}
