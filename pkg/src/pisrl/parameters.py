"""Heuristics for choosing theta, eta, Theta and sigma."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .case_base import distance

# guards floor(d / theta) against quotients like 0.03 / 0.01 = 2.9999999999999996
_FLOOR_RTOL = 1e-9


@dataclass
class Trajectory:
    states: list

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True)
class SigmaSchedule:
    initial: float = 9e-7
    multiplier: float = 10.0
    max_steps: int = 7

    def __post_init__(self):
        if not self.initial > 0 or not self.multiplier > 1:
            raise ValueError("need initial > 0 and multiplier > 1")

    def values(self) -> list[float]:
        return [next_sigma(self, k) for k in range(self.max_steps)]


def _states(traj):
    return traj.states if isinstance(traj, Trajectory) else list(traj)


def estimate_theta(traj) -> float:
    """Mean Euclidean distance between consecutive states of one run."""
    states = _states(traj)
    if len(states) < 2:
        raise ValueError("need at least two states to estimate theta")
    gaps = [distance(a, b) for a, b in zip(states[:-1], states[1:])]
    return math.fsum(gaps) / (len(states) - 1)


def estimate_eta(trajs, theta: float) -> int:
    """Case-base capacity estimate from several runs of the teacher.

    The first trajectory is the reference. At each step index the largest
    distance from the reference state to the other runs' states (among runs
    still going at that index) adds ``floor(dev / theta)`` cases on top of
    one case per reference state.
    """
    trajs = [_states(t) for t in trajs]
    if not trajs or not trajs[0]:
        raise ValueError("need at least one non-empty trajectory")
    if not theta > 0:
        raise ValueError("theta must be positive")
    ref = trajs[0]
    extra = 0
    for i, s_ref in enumerate(ref):
        devs = [distance(s_ref, t[i]) for t in trajs[1:] if len(t) > i]
        if devs:
            q = max(devs) / theta
            extra += math.floor(q + _FLOOR_RTOL * max(1.0, q))
    return len(ref) + extra


def compute_Theta(max_total_reward: float, fraction: float = 0.05) -> float:
    """Acceptance slack: a fraction of the best episode's absolute reward."""
    return fraction * abs(max_total_reward)


def next_sigma(schedule: SigmaSchedule, step: int) -> float:
    if step < 0:
        raise ValueError("step must be non-negative")
    return schedule.initial * schedule.multiplier**step


def collect_trajectories(env, teacher, episodes: int, rng: np.random.Generator, max_steps=None) -> list[Trajectory]:
    """States visited by the teacher over several episodes (start state included)."""
    out = []
    horizon = max_steps or env.max_steps
    for _ in range(episodes):
        s = env.reset(rng)
        states = [s]
        for _ in range(horizon):
            o = env.step(teacher(s))
            s = o.next_state
            states.append(s)
            if o.terminal:
                break
        out.append(Trajectory(states))
    return out
