"""Interactive guidance sessions: a virtual robot steered by text commands.

The engine owns session state: an arena with scattered markers, a robot
pose, and a client-chosen target marker used only for goal checking. Each
command is sampled in the robot's start frame and composed into the world
frame at the current pose. Trajectory generation never sees the target;
the goal check runs afterwards, mirroring a driver who does not know where
the leader wants to go.

The HTTP layer is a thin JSON facade over the engine: sessions are
independent and may run concurrently; requests to one session serialize on
its lock.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import __version__
from .config import ARENA_HALF_EXTENT_M, GOAL_RADIUS_M
from .geometry import Pose2, Trajectory, transform_trajectory
from .policy import PolicyParameters, sample
from .text import EmptyCommandError

log = logging.getLogger(__name__)


class UnknownSessionError(KeyError):
    pass


class SessionStateError(RuntimeError):
    """Command issued to a session that is no longer active."""


class SamplingFailedError(RuntimeError):
    pass


@dataclass
class ArenaConfig:
    half_extent: float = ARENA_HALF_EXTENT_M
    n_markers: int = 6
    n_obstacles: int = 3

    def __post_init__(self):
        if self.n_markers < 5:
            raise ValueError("need at least 5 markers")


@dataclass
class TranscriptEntry:
    command: str
    trajectory: np.ndarray  # world-frame (h, 3)
    pose_after: Pose2
    timestamp: float
    wall_clamped: bool


@dataclass
class Session:
    id: str
    seed: int
    arena: ArenaConfig
    markers: np.ndarray  # (n, 2)
    obstacles: np.ndarray  # (m, 3) rows of (x, y, radius), display-only
    robot_pose: Pose2
    target_marker: int
    status: str = "active"  # active | reached | abandoned
    step_count: int = 0
    started_at: float = field(default_factory=time.time)
    transcript: list[TranscriptEntry] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def target_xy(self) -> np.ndarray:
        return self.markers[self.target_marker]

    def distance_to_target(self) -> float:
        t = self.target_xy()
        return float(np.hypot(self.robot_pose.x - t[0], self.robot_pose.y - t[1]))

    def to_dict(self, include_transcript: bool = True) -> dict:
        out = {
            "id": self.id,
            "seed": self.seed,
            "arena": {
                "half_extent": self.arena.half_extent,
                "markers": self.markers.tolist(),
                "obstacles": self.obstacles.tolist(),
            },
            "robot_pose": [self.robot_pose.x, self.robot_pose.y, self.robot_pose.theta],
            "target_marker": self.target_marker,
            "status": self.status,
            "step_count": self.step_count,
            "started_at": self.started_at,
        }
        if include_transcript:
            out["transcript"] = [
                {
                    "command": t.command,
                    "trajectory": t.trajectory.tolist(),
                    "pose": [t.pose_after.x, t.pose_after.y, t.pose_after.theta],
                    "timestamp": t.timestamp,
                    "wall_clamped": t.wall_clamped,
                }
                for t in self.transcript
            ]
        return out


class GuidanceEngine:
    """Session store plus the command -> trajectory -> new pose loop."""

    def __init__(self, policy: PolicyParameters, goal_radius: float = GOAL_RADIUS_M,
                 arena: ArenaConfig | None = None, checkpoint_hash: str = "in-memory"):
        self.policy = policy
        self.schedule = policy.make_schedule()
        self.goal_radius = goal_radius
        self.arena = arena or ArenaConfig()
        self.checkpoint_hash = checkpoint_hash
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._seed_rng = np.random.default_rng()

    def create_session(self, target_marker: int, seed: int | None = None) -> Session:
        """Seeded random layout; the target index comes from the client."""
        if seed is None:
            seed = int(self._seed_rng.integers(0, 2**31 - 1))
        cfg = self.arena
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xA2E7A)))
        he = cfg.half_extent
        margin = 0.5
        robot = Pose2(
            float(rng.uniform(-he + margin, he - margin)),
            float(rng.uniform(-he + margin, he - margin)),
            float(rng.uniform(-np.pi, np.pi)),
        )
        markers = rng.uniform(-he + margin, he - margin, size=(cfg.n_markers, 2))
        obstacles = np.column_stack([
            rng.uniform(-he + 1.0, he - 1.0, size=(cfg.n_obstacles, 2)),
            rng.uniform(0.3, 0.8, size=cfg.n_obstacles),
        ])
        if not 0 <= int(target_marker) < cfg.n_markers:
            raise ValueError(f"target_marker must be in [0, {cfg.n_markers})")
        session = Session(
            id=uuid.uuid4().hex[:12],
            seed=int(seed),
            arena=cfg,
            markers=markers,
            obstacles=obstacles,
            robot_pose=robot,
            target_marker=int(target_marker),
        )
        with self._lock:
            self._sessions[session.id] = session
        return session

    def _get(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSessionError(session_id) from None

    def _generate(self, text: str, base_pose: Pose2, sub_seed) -> Trajectory:
        """Sample a start-frame trajectory and compose it at the base pose.

        Deliberately takes no session object: trajectory generation cannot
        read the target.
        """
        rng = np.random.default_rng(sub_seed)
        try:
            local = sample(self.policy, self.schedule, text, rng)
        except EmptyCommandError:
            raise
        except Exception as e:  # pragma: no cover - diagnostics path
            raise SamplingFailedError(f"sampling failed: {e}") from e
        return transform_trajectory(local, base_pose)

    def apply_command(self, session_id: str, text: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            if session.status != "active":
                raise SessionStateError(f"session is {session.status}")
            if not text or not text.strip():
                raise EmptyCommandError("empty command")
            sub_seed = np.random.SeedSequence((session.seed, 0xC0FFEE, session.step_count))
            world = self._generate(text, session.robot_pose, sub_seed)

            he = session.arena.half_extent
            end = world.active[-1].copy()
            clamped = bool(abs(end[0]) > he or abs(end[1]) > he)
            end[0] = float(np.clip(end[0], -he, he))
            end[1] = float(np.clip(end[1], -he, he))
            session.robot_pose = Pose2(end[0], end[1], end[2])
            session.step_count += 1
            if session.distance_to_target() < self.goal_radius:
                session.status = "reached"
            entry = TranscriptEntry(
                command=text,
                trajectory=world.active.copy(),
                pose_after=session.robot_pose,
                timestamp=time.time(),
                wall_clamped=clamped,
            )
            session.transcript.append(entry)
            return {
                "trajectory": world.active.tolist(),
                "pose": [session.robot_pose.x, session.robot_pose.y, session.robot_pose.theta],
                "status": session.status,
                "step_count": session.step_count,
                "wall_clamped": clamped,
            }

    def session_state(self, session_id: str) -> dict:
        return self._get(session_id).to_dict()

    def abandon(self, session_id: str):
        session = self._get(session_id)
        with session.lock:
            if session.status == "active":
                session.status = "abandoned"

    def report(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            if session.transcript:
                elapsed = session.transcript[-1].timestamp - session.started_at
            else:
                elapsed = 0.0
            return {
                "final_error_m": session.distance_to_target(),
                "num_steps": session.step_count,
                "elapsed_s": elapsed,
                "status": session.status,
            }

    def health(self) -> dict:
        return {
            "status": "ok",
            "version": __version__,
            "checkpoint_hash": self.checkpoint_hash,
        }


# ---------------------------------------------------------------------------
# HTTP facade


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def engine(self) -> GuidanceEngine:
        return self.server.engine  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # route through logging, not stderr
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, code: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, message: str):
        self._send(code, {"error": message})

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError:
            raise ValueError("request body is not valid JSON")

    def do_OPTIONS(self):  # CORS preflight for the browser client
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        started = time.perf_counter()
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        try:
            if parts == ["health"]:
                self._send(200, self.engine.health())
            elif len(parts) == 2 and parts[0] == "session":
                self._send(200, self.engine.session_state(parts[1]))
            elif len(parts) == 3 and parts[0] == "session" and parts[2] == "report":
                self._send(200, self.engine.report(parts[1]))
            else:
                self._error(404, f"no such route: {self.path}")
        except UnknownSessionError as e:
            self._error(404, f"unknown session {e}")
        finally:
            log.info("GET %s (%.1f ms)", self.path, 1e3 * (time.perf_counter() - started))

    def do_POST(self):
        started = time.perf_counter()
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        try:
            body = self._read_json()
            if parts == ["session"]:
                if "target_marker" not in body:
                    self._error(400, "target_marker is required")
                    return
                session = self.engine.create_session(
                    target_marker=int(body["target_marker"]),
                    seed=body.get("seed"),
                )
                self._send(200, session.to_dict())
            elif len(parts) == 3 and parts[0] == "session" and parts[2] == "command":
                result = self.engine.apply_command(parts[1], body.get("text", ""))
                self._send(200, result)
            else:
                self._error(404, f"no such route: {self.path}")
        except UnknownSessionError as e:
            self._error(404, f"unknown session {e}")
        except EmptyCommandError:
            self._error(400, "empty command")
        except SessionStateError as e:
            self._error(409, str(e))
        except (ValueError, TypeError) as e:
            self._error(400, str(e))
        except SamplingFailedError as e:
            self._error(500, str(e))
        finally:
            log.info("POST %s (%.1f ms)", self.path, 1e3 * (time.perf_counter() - started))


def make_server(engine: GuidanceEngine, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _Handler)
    server.engine = engine  # type: ignore[attr-defined]
    return server
