"""Subprocess-backed subject speaking line-delimited JSON.

Each message is one JSON object per line. The harness writes to the child's
stdin and reads one reply line from its stdout per message:

    {"type": "reset", "test": <name>, "robot": {...}}   -> {"ok": true}
    {"type": "step", "t": .., "robot_pose": {x, y, yaw},
     "current_waypoint": {x, y, yaw}, "is_goal": bool,
     "visible_obstacles": [{"box": {...}} | {"circle": {...}}, ...]}
                                                          -> {"vx": .., "vy": .., "wyaw": ..}

Angles are radians. A reply carrying ``"error"`` marks the subject as failed.
"""

from __future__ import annotations

import json
import shlex
import subprocess

from navtestgen.safety import VelocityCommand
from navtestgen.scenario import robot_to_dict, shape_to_dict
from navtestgen.subjects.base import SensorSnapshot, Subject, SubjectError


def _pose(p) -> dict:
    return {"x": p.x, "y": p.y, "yaw": p.yaw}


def snapshot_to_message(s: SensorSnapshot) -> dict:
    return {
        "type": "step",
        "t": s.t,
        "robot_pose": _pose(s.robot_pose),
        "current_waypoint": _pose(s.current_waypoint),
        "is_goal": s.is_goal,
        "visible_obstacles": [shape_to_dict(o) for o in s.visible_obstacles],
    }


class ExternalSubject(Subject):
    kind = "external"

    def __init__(self, cmd: str | list[str], timeout: float = 10.0):
        super().__init__(cmd=cmd, timeout=timeout)
        self.argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        if not self.argv:
            raise ValueError("external subject needs a command")
        self.timeout = timeout
        self.proc: subprocess.Popen | None = None

    def _start(self):
        try:
            self.proc = subprocess.Popen(self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                         text=True, bufsize=1)
        except OSError as e:
            raise SubjectError(f"cannot start {self.argv[0]!r}: {e}") from e

    def _call(self, message: dict) -> dict:
        if self.proc is None or self.proc.poll() is not None:
            self._start()
        try:
            self.proc.stdin.write(json.dumps(message) + "\n")
            self.proc.stdin.flush()
            line = self.proc.stdout.readline()
        except (BrokenPipeError, OSError) as e:
            raise SubjectError(f"external subject pipe failed: {e}") from e
        if not line:
            raise SubjectError(f"external subject exited (code {self.proc.poll()})")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as e:
            raise SubjectError(f"invalid reply {line.strip()!r}") from e
        if not isinstance(reply, dict) or "error" in reply:
            raise SubjectError(f"external subject reported {reply!r}")
        return reply

    def reset(self, test) -> None:
        reply = self._call({"type": "reset", "test": test.name, "robot": robot_to_dict(test.robot)})
        if reply.get("ok") is not True:
            raise SubjectError(f"reset not acknowledged: {reply!r}")

    def plan_step(self, snapshot: SensorSnapshot, config) -> VelocityCommand:
        reply = self._call(snapshot_to_message(snapshot))
        try:
            return VelocityCommand(float(reply["vx"]), float(reply["vy"]), float(reply["wyaw"]))
        except (KeyError, TypeError, ValueError) as e:
            raise SubjectError(f"malformed command {reply!r}") from e

    def close(self) -> None:
        if self.proc is not None:
            try:
                self.proc.stdin.close()
                self.proc.wait(timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired):
                self.proc.kill()
                self.proc.wait()
            self.proc = None
