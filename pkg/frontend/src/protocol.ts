// Wire protocol shared with the simulation bridge (JSON text frames).

export interface Limits {
  v_max: number;
  w_max: number;
}

export interface Verdict {
  safe: boolean;
  class: string;
  roi: number[][];
}

export interface StateFrame {
  type: "state";
  t: number;
  pose: [number, number, number];
  scan: number[];
  goal: [number, number] | null;
  path: number[][];
  verdict: Verdict | null;
  recording: boolean;
  outcome: string | null;
  world: string;
}

export interface HelloFrame {
  type: "hello";
  limits: Limits;
  worlds: string[];
  control_rate: number;
}

export interface WorldsFrame {
  type: "worlds";
  ids: string[];
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame = StateFrame | HelloFrame | WorldsFrame | ErrorFrame;

export class FrameError extends Error {}

function isNumberArray(x: unknown, len?: number): x is number[] {
  return (
    Array.isArray(x) &&
    (len === undefined || x.length === len) &&
    x.every((v) => typeof v === "number" && isFinite(v))
  );
}

/** Parse and validate one server frame; throws FrameError on garbage. */
export function parseFrame(raw: string): ServerFrame {
  let obj: any;
  try {
    obj = JSON.parse(raw);
  } catch (e) {
    throw new FrameError(`not JSON: ${e}`);
  }
  switch (obj?.type) {
    case "hello":
      if (typeof obj.limits?.v_max !== "number" || typeof obj.limits?.w_max !== "number") {
        throw new FrameError("hello frame missing limits");
      }
      return obj as HelloFrame;
    case "worlds":
      if (!Array.isArray(obj.ids)) throw new FrameError("worlds frame missing ids");
      return obj as WorldsFrame;
    case "error":
      return obj as ErrorFrame;
    case "state": {
      if (!isNumberArray(obj.pose, 3)) throw new FrameError("state frame: bad pose");
      if (!isNumberArray(obj.scan)) throw new FrameError("state frame: bad scan");
      if (typeof obj.t !== "number") throw new FrameError("state frame: bad t");
      if (typeof obj.recording !== "boolean") throw new FrameError("state frame: bad recording");
      return obj as StateFrame;
    }
    default:
      throw new FrameError(`unknown frame type ${obj?.type}`);
  }
}

export function commandMessage(v: number, w: number): string {
  return JSON.stringify({ type: "cmd", v, w });
}

export function recordMessage(on: boolean): string {
  return JSON.stringify({ type: "record", on });
}

export function resetMessage(world?: string): string {
  return JSON.stringify(world ? { type: "reset", world } : { type: "reset" });
}
