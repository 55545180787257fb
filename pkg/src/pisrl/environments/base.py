from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np


@dataclass(frozen=True)
class StepOutcome:
    next_state: np.ndarray
    reward: float
    terminal: bool
    failure: bool

    def __post_init__(self):
        if self.failure and not self.terminal:
            raise ValueError("a failure outcome must be terminal")


class Environment(Protocol):
    """Episodic task with continuous states and actions.

    Implementations own their noise generator; it is passed in at
    :meth:`reset` so that every episode is reproducible from a seed.
    """

    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    max_steps: int

    def reset(self, rng: np.random.Generator) -> np.ndarray: ...

    def step(self, action) -> StepOutcome: ...


class Teacher(Protocol):
    def __call__(self, state) -> np.ndarray: ...


def clip_action(action, low, high) -> np.ndarray:
    return np.minimum(np.maximum(np.asarray(action, dtype=float), low), high)
