"""WebSocket teleoperation bridge: streams live simulation state frames and
executes the latest client velocity command, with optional recording of
human demonstrations in the demonstration dataset format.

Wire protocol (JSON text frames):
  server -> client
    {"type":"hello","limits":{...},"worlds":[...]}
    {"type":"state","t",..,"pose":[x,y,th],"scan":[...],"goal":[gx,gy],
     "path":[[x,y],..],"verdict":{"safe":..,"roi":[[x,y],..],"class":..},
     "recording":bool,"outcome":null|"success"|"collision"|"timeout"}
    {"type":"worlds","ids":[...]} in answer to list_worlds
    {"type":"error","message":...}
  client -> server
    {"type":"cmd","v":f,"w":f}
    {"type":"record","on":bool}
    {"type":"reset","world":"id"}
    {"type":"list_worlds"}
"""
from __future__ import annotations

import asyncio
import json
import math
import os
import time

import numpy as np

from .demo import DemoRecord, SCHEMA_VERSION, _record_line
from .errors import PortInUse
from .expert import Action
from .loop import RUNNING, SUCCESS, NavigationSession, SessionConfig
from .safety import SafetyConfig, check_action, scan_to_points
from .simulator import resample_scan
from .worldgen import World

DEADMAN_S = 0.5
STREAM_BEAMS = 180


class TeleopServer:
    def __init__(
        self,
        worlds: list[World],
        cfg: SessionConfig = SessionConfig(),
        record_dir: str | None = None,
        seed: int = 0,
    ):
        if not worlds:
            raise ValueError("teleop needs at least one world")
        self.worlds = {w.id: w for w in worlds}
        self.order = [w.id for w in worlds]
        self.cfg = cfg
        self.safety_cfg = SafetyConfig(footprint=cfg.footprint, a_max=cfg.limits.a_max)
        self.record_dir = record_dir
        self.seed = seed
        self.clients: set = set()
        self.cmd = (0.0, 0.0)
        self.cmd_stamp = 0.0
        self.recording = False
        self.episode_index = 0
        self.episode_buffer: list[DemoRecord] = []
        self.saved_episodes: list[dict] = []
        self.session: NavigationSession | None = None
        self.world_id = self.order[0]
        self.outcome: str | None = None
        self._reset(self.world_id)

    # -- session control ---------------------------------------------------

    def _reset(self, world_id: str) -> None:
        world = self.worlds[world_id]
        self.world_id = world_id
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(self.seed, self.episode_index, 0xDE1E))
        )
        self.session = NavigationSession(world, self.cfg, rng)
        self.outcome = None
        self.episode_buffer = []
        self.episode_index += 1

    def _effective_cmd(self, now: float) -> tuple[float, float]:
        if now - self.cmd_stamp > DEADMAN_S:
            return (0.0, 0.0)
        return self.cmd

    def step(self, now: float) -> dict:
        """Advance one control tick with the latest command; returns the
        state frame to broadcast."""
        session = self.session
        if session.running:
            v, w = self._effective_cmd(now)
            obs = session.observe()
            if self.recording:
                # a human command is its own optimum; noise sigma is zero
                self.episode_buffer.append(DemoRecord(
                    t=session.state.t,
                    scan=obs.scan.ranges.copy(),
                    goal_unit=obs.local_goal.unit,
                    optimal=Action(v, w),
                    executed=Action(v, w),
                    world_id=self.world_id,
                    episode_id=f"human:{self.episode_index}",
                ))
            points = scan_to_points(obs.scan, self.cfg.lidar)
            verdict = check_action(points, v, w, self.safety_cfg)
            session.apply(v, w)
            if not session.running:
                self.outcome = session.status
                if self.recording and session.status == SUCCESS:
                    self._persist_episode()
            return self._frame(obs.scan.ranges, verdict)
        return self._frame(None, None)

    def _frame(self, ranges, verdict) -> dict:
        session = self.session
        x, y, th = session.state.pose
        if ranges is not None:
            scan = resample_scan(
                type("S", (), {"ranges": ranges, "max_range": self.cfg.lidar.max_range})(),
                STREAM_BEAMS,
            ).ranges
            scan_list = [round(float(r), 4) for r in scan]
        else:
            scan_list = []
        goal = None
        path = []
        if session.path is not None:
            path = [[float(px), float(py)] for px, py in session.path.points[::2]]
        lg = session.local_goal()
        c, s = math.cos(th), math.sin(th)
        goal = [x + c * lg.point[0] - s * lg.point[1],
                y + s * lg.point[0] + c * lg.point[1]]
        verdict_obj = None
        if verdict is not None:
            roi_world = []
            for rx, ry in verdict.roi_polygon:
                roi_world.append([x + c * rx - s * ry, y + s * rx + c * ry])
            verdict_obj = {
                "safe": bool(verdict.safe),
                "class": verdict.motion_class,
                "roi": roi_world,
            }
        return {
            "type": "state",
            "t": session.state.t,
            "pose": [x, y, th],
            "scan": scan_list,
            "goal": goal,
            "path": path,
            "verdict": verdict_obj,
            "recording": self.recording,
            "outcome": self.outcome,
            "world": self.world_id,
        }

    # -- recording ----------------------------------------------------------

    def _persist_episode(self) -> None:
        if not self.record_dir or not self.episode_buffer:
            return
        os.makedirs(self.record_dir, exist_ok=True)
        records_path = os.path.join(self.record_dir, "records.ndjson")
        with open(records_path, "a", encoding="utf-8") as f:
            for r in self.episode_buffer:
                f.write(_record_line(r))
        self.saved_episodes.append({
            "world_id": self.world_id,
            "episode_id": self.episode_buffer[0].episode_id,
            "records": len(self.episode_buffer),
            "duration": self.session.elapsed,
            "outcome": SUCCESS,
        })
        self._write_manifest()
        self.episode_buffer = []

    def _write_manifest(self) -> None:
        cfg = self.cfg
        manifest = {
            "schema": SCHEMA_VERSION,
            "scan_beams": cfg.lidar.beam_count,
            "sigma": 0.0,  # human episodes carry their own noise
            "source": "human",
            "limits": {
                "v_max": cfg.limits.v_max,
                "w_max": cfg.limits.w_max,
                "a_max": cfg.limits.a_max,
                "alpha_max": cfg.limits.alpha_max,
            },
            "lidar": {
                "beam_count": cfg.lidar.beam_count,
                "angle_min": cfg.lidar.angle_min,
                "angle_max": cfg.lidar.angle_max,
                "max_range": cfg.lidar.max_range,
            },
            "worlds": sorted({e["world_id"] for e in self.saved_episodes}),
            "episodes": self.saved_episodes,
            "skipped": [],
            "records_file": "records.ndjson",
        }
        with open(os.path.join(self.record_dir, "manifest.json"), "w",
                  encoding="utf-8") as f:
            json.dump(manifest, f, indent=1)
            f.write("\n")

    # -- protocol -------------------------------------------------------------

    def handle_message(self, raw: str) -> dict | None:
        """Apply one client message; returns an optional direct reply."""
        msg = json.loads(raw)
        kind = msg.get("type")
        if kind == "cmd":
            self.cmd = (float(msg["v"]), float(msg["w"]))
            self.cmd_stamp = time.monotonic()
            return None
        if kind == "record":
            want = bool(msg["on"])
            if want and not self.recording:
                self.recording = True
                self.episode_buffer = []
            elif not want:
                self.recording = False
                self.episode_buffer = []
            return None
        if kind == "reset":
            world_id = msg.get("world") or self.world_id
            if world_id not in self.worlds:
                return {"type": "error", "message": f"unknown world {world_id!r}"}
            self._reset(world_id)
            self.cmd = (0.0, 0.0)
            return None
        if kind == "list_worlds":
            return {"type": "worlds", "ids": self.order}
        raise ValueError(f"unknown message type {kind!r}")

    def hello(self) -> dict:
        return {
            "type": "hello",
            "limits": {
                "v_max": self.cfg.limits.v_max,
                "w_max": self.cfg.limits.w_max,
            },
            "worlds": self.order,
            "control_rate": self.cfg.control_rate,
        }


async def _client_handler(server: TeleopServer, websocket) -> None:
    server.clients.add(websocket)
    try:
        await websocket.send(json.dumps(server.hello()))
        async for raw in websocket:
            try:
                reply = server.handle_message(raw)
            except (ValueError, KeyError, json.JSONDecodeError) as exc:
                await websocket.send(json.dumps({"type": "error", "message": str(exc)}))
                break
            if reply is not None:
                await websocket.send(json.dumps(reply))
    finally:
        server.clients.discard(websocket)


async def _sim_loop(server: TeleopServer) -> None:
    tick = 1.0 / server.cfg.control_rate
    loop = asyncio.get_running_loop()
    next_t = loop.time()
    while True:
        frame = server.step(time.monotonic())
        if server.clients:
            payload = json.dumps(frame)
            await asyncio.gather(
                *(ws.send(payload) for ws in list(server.clients)),
                return_exceptions=True,
            )
        next_t += tick
        await asyncio.sleep(max(0.0, next_t - loop.time()))


async def serve_teleop_async(
    worlds: list[World],
    port: int,
    record_dir: str | None = None,
    seed: int = 0,
    cfg: SessionConfig = SessionConfig(),
    ready: asyncio.Event | None = None,
):
    import websockets

    server = TeleopServer(worlds, cfg=cfg, record_dir=record_dir, seed=seed)
    try:
        ws_server = await websockets.serve(
            lambda ws: _client_handler(server, ws), "127.0.0.1", port)
    except OSError as exc:
        raise PortInUse(f"port {port} unavailable: {exc}") from exc
    if ready is not None:
        ready.set()
    sim = asyncio.create_task(_sim_loop(server))
    try:
        await asyncio.Future()  # run until cancelled
    finally:
        sim.cancel()
        ws_server.close()
        await ws_server.wait_closed()


def serve_teleop(worlds: list[World], port: int = 8765,
                 record_dir: str | None = None, seed: int = 0) -> None:
    try:
        asyncio.run(serve_teleop_async(worlds, port, record_dir, seed))
    except KeyboardInterrupt:
        pass
