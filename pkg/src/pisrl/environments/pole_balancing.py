"""Stochastic pole balancing on a cart.

State is ``(phi, phi_dot, x, x_dot)`` with the pole angle in radians; the
action is a horizontal force on the cart. Dynamics are the classic
cart-pole equations integrated with explicit Euler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import StepOutcome


@dataclass
class PoleBalancingParams:
    angle_limit: float = math.radians(12.0)
    track_limit: float = 2.4
    episode_steps: int = 10_000
    action_noise_std: float = 1e-4
    reward_noise_std: float = 1e-4
    force_max: float = 10.0
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    gravity: float = 9.8
    dt: float = 0.02
    reset_jitter: float = 0.05

    def __post_init__(self):
        for name in ("angle_limit", "track_limit", "force_max", "cart_mass", "pole_mass",
                     "half_length", "gravity", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.episode_steps < 1:
            raise ValueError("episode_steps must be positive")
        if self.action_noise_std < 0 or self.reward_noise_std < 0 or self.reset_jitter < 0:
            raise ValueError("noise levels must be non-negative")


def pole_reward(phi, x, params: PoleBalancingParams) -> float:
    angle_term = min(abs(phi) / params.angle_limit, 1.0)
    track_term = min(abs(x) / params.track_limit, 1.0)
    return 1.0 - (angle_term + track_term) / 2


def pole_step(state, action, params: PoleBalancingParams, rng=None) -> StepOutcome:
    """Advance the cart-pole one time step; the reward scores the new state."""
    phi, phi_dot, x, x_dot = (float(v) for v in state)
    fmax = params.force_max
    force = float(np.asarray(action, dtype=float).ravel()[0])
    force = min(max(force, -fmax), fmax)
    if params.action_noise_std > 0:
        force = min(max(force + rng.normal(0.0, params.action_noise_std), -fmax), fmax)

    total = params.cart_mass + params.pole_mass
    pml = params.pole_mass * params.half_length
    sin, cos = math.sin(phi), math.cos(phi)
    tmp = (force + pml * phi_dot * phi_dot * sin) / total
    phi_acc = (params.gravity * sin - cos * tmp) / (
        params.half_length * (4.0 / 3.0 - params.pole_mass * cos * cos / total)
    )
    x_acc = tmp - pml * phi_acc * cos / total

    dt = params.dt
    x = x + dt * x_dot
    x_dot = x_dot + dt * x_acc
    phi = phi + dt * phi_dot
    phi_dot = phi_dot + dt * phi_acc

    failure = abs(phi) > params.angle_limit or abs(x) > params.track_limit
    reward = pole_reward(phi, x, params)
    if params.reward_noise_std > 0:
        reward += rng.normal(0.0, params.reward_noise_std)
    return StepOutcome(np.array([phi, phi_dot, x, x_dot]), reward, failure, failure)


class PoleBalancing:
    state_dim = 4
    action_dim = 1

    def __init__(self, params: PoleBalancingParams | None = None):
        self.params = params or PoleBalancingParams()
        self.max_steps = self.params.episode_steps
        self.action_low = np.array([-self.params.force_max])
        self.action_high = np.array([self.params.force_max])
        self.state = None
        self.t = 0
        self._rng = None

    def reset(self, rng=None) -> np.ndarray:
        self._rng = rng
        self.t = 0
        j = self.params.reset_jitter
        if j > 0:
            self.state = rng.uniform(-j, j, size=4)
        else:
            self.state = np.zeros(4)
        return self.state.copy()

    def step(self, action) -> StepOutcome:
        if self.state is None:
            raise RuntimeError("reset() must be called before step()")
        out = pole_step(self.state, action, self.params, self._rng)
        self.t += 1
        self.state = out.next_state
        if not out.terminal and self.t >= self.max_steps:
            out = StepOutcome(out.next_state, out.reward, True, False)
        return out


class LinearTeacher:
    """Saturated linear state feedback ``force = gains . state``."""

    # detuned from an LQR design: slow on cart position, so the pole is kept
    # upright but the cart wanders off-centre before being brought back
    DEFAULT_GAINS = (30.0, 6.0, 1.0, 2.0)

    def __init__(self, gains=DEFAULT_GAINS, force_max=10.0):
        self.gains = np.asarray(gains, dtype=float)
        self.force_max = float(force_max)

    def __call__(self, state) -> np.ndarray:
        f = float(self.gains @ np.asarray(state, dtype=float))
        return np.array([min(max(f, -self.force_max), self.force_max)])
