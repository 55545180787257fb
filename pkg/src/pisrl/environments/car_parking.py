"""Stochastic car parking.

A constant-speed car steered by a single command in [-1, 1] must be driven
from a fixed start pose into a garage while avoiding the walls of the
driving area and a rectangular obstacle. Kinematics::

    heading' = heading + v*tau/(l/2) * tan(phi_max * a)
    x'       = x + v*tau*cos(heading')
    y'       = y + v*tau*sin(heading')
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .base import StepOutcome

Rect = tuple  # (x_min, x_max, y_min, y_max)


@dataclass
class CarParkingParams:
    l: float = 4.0
    v: float = 1.0
    phi_max: float = 0.78
    tau: float = 0.5
    car_width: float | None = None  # defaults to l / 2
    start: tuple = (4.0, 4.0, 0.26)
    goal: tuple = (22.5, 13.5)
    area: Rect = (0.0, 25.0, 0.0, 18.0)
    garage: Rect = (20.0, 25.0, 11.5, 15.5)
    obstacle: Rect = (11.0, 15.0, 6.0, 12.0)
    action_noise_std: float = 0.1
    reward_noise_std: float = 0.1
    max_steps: int = 200
    step_reward: float = -0.1
    crash_reward: float = -1.0
    park_reward: float = 10.0

    def __post_init__(self):
        for name in ("l", "v", "phi_max", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.car_width is None:
            self.car_width = self.l / 2
        if self.action_noise_std < 0 or self.reward_noise_std < 0:
            raise ValueError("noise standard deviations must be non-negative")
        for name in ("area", "garage", "obstacle"):
            r = tuple(float(x) for x in getattr(self, name))
            if len(r) != 4 or r[0] >= r[1] or r[2] >= r[3]:
                raise ValueError(f"{name} must be (x_min, x_max, y_min, y_max)")
            setattr(self, name, r)
        self.start = tuple(float(x) for x in self.start)
        self.goal = tuple(float(x) for x in self.goal)


def car_corners(x, y, heading, length, width):
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = length / 2, width / 2
    return [
        (x + c * dx - s * dy, y + s * dx + c * dy)
        for dx, dy in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))
    ]


def _inside(corners, rect):
    x0, x1, y0, y1 = rect
    return all(x0 <= px <= x1 and y0 <= py <= y1 for px, py in corners)


def _overlaps(corners, heading, rect):
    """Separating-axis test between the car and an axis-aligned rectangle."""
    x0, x1, y0, y1 = rect
    xs = [p[0] for p in corners]
    ys = [p[1] for p in corners]
    if max(xs) < x0 or min(xs) > x1 or max(ys) < y0 or min(ys) > y1:
        return False
    box = ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
    for ax, ay in ((math.cos(heading), math.sin(heading)), (-math.sin(heading), math.cos(heading))):
        car_proj = [px * ax + py * ay for px, py in corners]
        box_proj = [px * ax + py * ay for px, py in box]
        if max(car_proj) < min(box_proj) or min(car_proj) > max(box_proj):
            return False
    return True


def parking_reward(x, y, params: CarParkingParams) -> float:
    gx0, gx1, gy0, gy1 = params.garage
    reach = math.hypot((gx1 - gx0) / 2, (gy1 - gy0) / 2)
    zeta = min(math.hypot(x - params.goal[0], y - params.goal[1]) / reach, 1.0)
    return params.park_reward * (1.0 - zeta)


def car_step(state, action, params: CarParkingParams, rng=None) -> StepOutcome:
    """Advance the car one time step.

    Gaussian actuator noise is added to the command (then saturated to
    [-1, 1]) and Gaussian noise to the reward. ``rng`` may be ``None`` when
    both noise levels are zero.
    """
    x, y, heading = (float(v) for v in state)
    a = float(np.asarray(action, dtype=float).ravel()[0])
    a = min(max(a, -1.0), 1.0)
    if params.action_noise_std > 0:
        a = min(max(a + rng.normal(0.0, params.action_noise_std), -1.0), 1.0)

    step = params.v * params.tau
    heading = heading + step / (params.l / 2) * math.tan(params.phi_max * a)
    x = x + step * math.cos(heading)
    y = y + step * math.sin(heading)

    corners = car_corners(x, y, heading, params.l, params.car_width)
    terminal = failure = False
    if _inside(corners, params.garage):
        reward = parking_reward(x, y, params)
        terminal = True
    elif not _inside(corners, params.area) or _overlaps(corners, heading, params.obstacle):
        reward = params.crash_reward
        terminal = failure = True
    else:
        reward = params.step_reward
    if params.reward_noise_std > 0:
        reward += rng.normal(0.0, params.reward_noise_std)
    return StepOutcome(np.array([x, y, heading]), reward, terminal, failure)


class CarParking:
    """Episodic wrapper around :func:`car_step`; timeouts end without failure."""

    state_dim = 3
    action_dim = 1
    action_low = np.array([-1.0])
    action_high = np.array([1.0])

    def __init__(self, params: CarParkingParams | None = None):
        self.params = params or CarParkingParams()
        self.max_steps = self.params.max_steps
        self.state = None
        self.t = 0
        self._rng = None

    def reset(self, rng=None) -> np.ndarray:
        self._rng = rng
        self.t = 0
        self.state = np.array(self.params.start, dtype=float)
        return self.state.copy()

    def step(self, action) -> StepOutcome:
        if self.state is None:
            raise RuntimeError("reset() must be called before step()")
        out = car_step(self.state, action, self.params, self._rng)
        self.t += 1
        self.state = out.next_state
        if not out.terminal and self.t >= self.max_steps:
            out = StepOutcome(out.next_state, out.reward, True, False)
        return out


@dataclass
class WaypointTeacher:
    """Pure-pursuit follower of a fixed polyline.

    The default route passes above the obstacle with a wide margin, which
    is safe but longer than necessary. The steering law depends only on the
    current pose, so the teacher is defined everywhere in the state space.
    """

    params: CarParkingParams = field(default_factory=CarParkingParams)
    route: tuple = ((4.0, 4.0), (5.0, 10.0), (8.0, 16.0), (18.0, 16.0), (21.0, 13.5), (40.0, 13.5))
    lookahead: float = 2.0

    def __post_init__(self):
        self._pts = np.asarray(self.route, dtype=float)
        seg = np.diff(self._pts, axis=0)
        self._seg = seg
        self._seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self._cum = np.concatenate([[0.0], np.cumsum(self._seg_len)])

    def _point_at(self, arc):
        arc = min(max(arc, 0.0), self._cum[-1])
        k = min(int(np.searchsorted(self._cum, arc, side="right")) - 1, len(self._seg) - 1)
        frac = (arc - self._cum[k]) / self._seg_len[k]
        return self._pts[k] + frac * self._seg[k]

    def _project(self, p):
        rel = p - self._pts[:-1]
        t = np.clip(np.einsum("ij,ij->i", rel, self._seg) / self._seg_len**2, 0.0, 1.0)
        foot = self._pts[:-1] + t[:, None] * self._seg
        d = np.hypot(*(foot - p).T)
        k = int(np.argmin(d))
        return self._cum[k] + t[k] * self._seg_len[k]

    def __call__(self, state) -> np.ndarray:
        x, y, heading = (float(v) for v in state)
        target = self._point_at(self._project(np.array([x, y])) + self.lookahead)
        desired = math.atan2(target[1] - y, target[0] - x)
        err = math.remainder(desired - heading, 2 * math.pi)
        turn = self.params.v * self.params.tau / (self.params.l / 2)
        a = math.atan(err / turn) / self.params.phi_max
        return np.array([min(max(a, -1.0), 1.0)])
