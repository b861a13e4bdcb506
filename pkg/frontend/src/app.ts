// Browser wiring: WebSocket client, input sampling at 20 Hz, rendering of
// the latest state frame per animation tick.

import { fitCamera } from "./camera.js";
import { emptyInput, inputToCommand, pollGamepad } from "./input.js";
import { commandMessage, recordMessage, resetMessage } from "./protocol.js";
import { Ctx2D, renderErrorBanner, renderFrame, renderWorld, WorldGrid } from "./render.js";
import { consumeMessage, initialView, inputEnabled, takeLatest } from "./state.js";

const COMMAND_HZ = 20;
const WORLD_METERS = 4.5; // 30 cells at 0.15 m; fit camera target

export function startApp(canvas: HTMLCanvasElement, serverUrl: string): void {
  const ctx = canvas.getContext("2d") as unknown as Ctx2D;
  const view = initialView();
  const input = emptyInput();
  let world: WorldGrid | null = null;

  const ws = new WebSocket(serverUrl);
  ws.onopen = () => {
    view.connection = "open";
  };
  ws.onclose = () => {
    view.connection = "closed";
  };
  ws.onmessage = (ev) => consumeMessage(view, String(ev.data));

  window.addEventListener("keydown", (ev) => {
    if (ev.key === "r" || ev.key === "R") {
      ws.send(resetMessage());
      return;
    }
    if (ev.key === " ") {
      view.recordingRequested = !view.recordingRequested;
      ws.send(recordMessage(view.recordingRequested));
      return;
    }
    input.keys.add(ev.key);
  });
  window.addEventListener("keyup", (ev) => input.keys.delete(ev.key));

  setInterval(() => {
    if (ws.readyState !== WebSocket.OPEN) return;
    pollGamepad(input, navigator.getGamepads ? Array.from(navigator.getGamepads()) : []);
    const cmd = inputEnabled(view)
      ? inputToCommand(input, view.limits)
      : { v: 0, w: 0 };
    ws.send(commandMessage(cmd.v, cmd.w));
  }, 1000 / COMMAND_HZ);

  const draw = () => {
    const cam = fitCamera(WORLD_METERS, WORLD_METERS, canvas.width, canvas.height);
    const frame = takeLatest(view);
    if (frame) {
      if (world) renderWorld(ctx, cam, world, canvas.width);
      else {
        ctx.fillStyle = "#11151c";
        ctx.fillRect(0, 0, canvas.width, canvas.height);
      }
      renderFrame(ctx, cam, frame);
    }
    if (view.lastError) renderErrorBanner(ctx, view.lastError);
    requestAnimationFrame(draw);
  };
  requestAnimationFrame(draw);
}

declare global {
  interface Window {
    licsStart: typeof startApp;
  }
}
if (typeof window !== "undefined") {
  window.licsStart = startApp;
}
