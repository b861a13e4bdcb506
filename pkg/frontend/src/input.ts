// Keyboard / gamepad state mapped to a velocity command within the server
// limits. Left-turn keys and positive stick deflection map to positive w,
// matching the simulator's counterclockwise convention.

import type { Limits } from "./protocol.js";

export interface InputState {
  keys: Set<string>;
  // left stick y in [-1, 1] (forward positive), right stick x in [-1, 1]
  // (right positive, which turns clockwise => negative w)
  stickForward: number;
  stickTurn: number;
  gamepadConnected: boolean;
}

export function emptyInput(): InputState {
  return { keys: new Set(), stickForward: 0, stickTurn: 0, gamepadConnected: false };
}

const DEADZONE = 0.08;

function applyDeadzone(x: number): number {
  return Math.abs(x) < DEADZONE ? 0 : x;
}

function clamp(x: number, lo: number, hi: number): number {
  return Math.min(Math.max(x, lo), hi);
}

export function inputToCommand(input: InputState, limits: Limits): { v: number; w: number } {
  let forward = 0;
  let turn = 0;
  if (input.gamepadConnected) {
    forward = applyDeadzone(input.stickForward);
    turn = -applyDeadzone(input.stickTurn); // stick right steers clockwise
  }
  if (forward === 0 && turn === 0) {
    // keyboard fallback
    if (input.keys.has("ArrowUp") || input.keys.has("w")) forward += 1;
    if (input.keys.has("ArrowDown") || input.keys.has("s")) forward -= 1;
    if (input.keys.has("ArrowLeft") || input.keys.has("a")) turn += 1;
    if (input.keys.has("ArrowRight") || input.keys.has("d")) turn -= 1;
  }
  return {
    v: clamp(forward, -1, 1) * limits.v_max,
    w: clamp(turn, -1, 1) * limits.w_max,
  };
}

/** Sample the first connected browser gamepad into the input state. */
export function pollGamepad(input: InputState, pads: (Gamepad | null)[]): void {
  const pad = pads.find((p) => p !== null);
  if (!pad) {
    input.gamepadConnected = false;
    input.stickForward = 0;
    input.stickTurn = 0;
    return;
  }
  input.gamepadConnected = true;
  input.stickForward = -(pad.axes[1] ?? 0); // stick up is negative in the API
  input.stickTurn = pad.axes[2] ?? pad.axes[0] ?? 0;
}
