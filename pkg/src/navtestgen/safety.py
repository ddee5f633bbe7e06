"""Kinematic step and the predictive collision-safety layer."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from navtestgen.geometry import FootprintDistance, Pose2D, normalize_angle

DT = 0.05


@dataclass(frozen=True)
class VelocityCommand:
    """Body-frame velocity: forward ``vx``, lateral ``vy`` (m/s), yaw rate ``wyaw`` (rad/s)."""

    vx: float = 0.0
    vy: float = 0.0
    wyaw: float = 0.0

    def is_zero(self) -> bool:
        return self.vx == 0.0 and self.vy == 0.0 and self.wyaw == 0.0


ZERO_COMMAND = VelocityCommand()


def clamp_command(cmd: VelocityCommand, nominal_speed: float, max_yaw_rate: float) -> VelocityCommand:
    vx, vy, w = float(cmd.vx), float(cmd.vy), float(cmd.wyaw)
    if not (math.isfinite(vx) and math.isfinite(vy) and math.isfinite(w)):
        raise ValueError(f"non-finite command {cmd}")
    speed = math.hypot(vx, vy)
    if speed > nominal_speed:
        k = nominal_speed / speed
        vx, vy = vx * k, vy * k
    w = min(max(w, -max_yaw_rate), max_yaw_rate)
    return VelocityCommand(vx, vy, w)


def integrate(x: float, y: float, yaw: float, vx: float, vy: float, w: float, dt: float):
    """One Euler step: rotate body velocity by the current yaw, then turn."""
    c, s = math.cos(yaw), math.sin(yaw)
    return (x + (vx * c - vy * s) * dt, y + (vx * s + vy * c) * dt, normalize_angle(yaw + w * dt))


@dataclass(frozen=True)
class SafetyLayerState:
    lookahead: float = 1.0
    margin: float = 0.05

    def __post_init__(self):
        if not self.lookahead > 0:
            raise ValueError("lookahead must be positive")
        if not self.margin >= 0:
            raise ValueError("margin must be non-negative")


class SafetyDecision(enum.Enum):
    PROCEED = "Proceed"
    HALT = "Halt"


def _as_distance(obstacles, footprint) -> FootprintDistance:
    if isinstance(obstacles, FootprintDistance):
        return obstacles
    return FootprintDistance(list(obstacles), footprint[0], footprint[1])


def safety_check(pose: Pose2D, cmd: VelocityCommand, obstacles, state: SafetyLayerState,
                 footprint: tuple[float, float], dt: float = DT) -> SafetyDecision:
    """Halt iff holding ``cmd`` for ``state.lookahead`` seconds brings the footprint
    within ``state.margin`` of an obstacle.

    The motion is propagated with the simulator's own step, sampled every ``dt``.
    ``obstacles`` is a sequence of shapes or a prepared FootprintDistance.
    """
    if cmd.is_zero():
        return SafetyDecision.PROCEED
    fd = _as_distance(obstacles, footprint)
    if not len(fd):
        return SafetyDecision.PROCEED
    steps = max(1, int(round(state.lookahead / dt)))
    x, y, yaw = pose.x, pose.y, pose.yaw
    # Any footprint point moves at most this far over the horizon.
    reach = steps * dt * (math.hypot(cmd.vx, cmd.vy) + abs(cmd.wyaw) * fd.radius) + 1e-9
    near = fd.near(x, y, yaw, state.margin + reach)
    if near is None:
        return SafetyDecision.PROCEED
    margin = state.margin
    for _ in range(steps):
        x, y, yaw = integrate(x, y, yaw, cmd.vx, cmd.vy, cmd.wyaw, dt)
        if near.min(x, y, yaw) <= margin:
            return SafetyDecision.HALT
    return SafetyDecision.PROCEED
