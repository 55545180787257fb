"""First-visit Monte-Carlo valuation of the cases in a cloned case-base."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .behavior_cloning import EpisodeStats
from .case_base import CaseBase


def discounted_return(rewards, start_index: int, gamma: float) -> float:
    """``sum_{j >= start} gamma**(j - start) * rewards[j]``."""
    if not 0 <= start_index <= len(rewards):
        raise IndexError(f"start index {start_index} outside episode of length {len(rewards)}")
    total = 0.0
    for r in reversed(rewards[start_index:]):
        total = r + gamma * total
    return total


def returns_to_go(rewards, gamma: float) -> np.ndarray:
    """Discounted return from every step of an episode."""
    out = np.empty(len(rewards))
    total = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        total = rewards[t] + gamma * total
        out[t] = total
    return out


@dataclass
class ReturnsAccumulator:
    """Observed first-visit returns, keyed by case insertion number."""

    returns: dict = field(default_factory=lambda: defaultdict(list))

    def add(self, key, value: float):
        self.returns[key].append(value)

    def mean(self, key) -> float:
        obs = self.returns[key]
        return sum(obs) / len(obs)


def mc_evaluate(
    base: CaseBase,
    env,
    teacher,
    gamma: float,
    episodes: int,
    rng: np.random.Generator,
    max_steps: int | None = None,
    accumulator: ReturnsAccumulator | None = None,
) -> list[EpisodeStats]:
    """Set each visited case's value to the mean of its first-visit returns.

    Episodes follow the greedy case-base policy; states with no case within
    ``theta`` are handed to ``teacher`` and contribute no return. Only case
    values change: nothing is inserted, removed or re-actioned, and use
    counts are left alone.
    """
    if len(base) == 0:
        raise ValueError("cannot evaluate an empty case-base")
    if episodes < 1:
        raise ValueError("episodes must be positive")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    acc = accumulator if accumulator is not None else ReturnsAccumulator()
    seqs = base.insert_seqs
    horizon = max_steps or env.max_steps
    stats = []
    for _ in range(episodes):
        s = env.reset(rng)
        rewards = []
        first_visit = {}  # case index -> step of first retrieval
        teacher_steps = 0
        failure = False
        while len(rewards) < horizon:
            hit = base.nearest(s)
            if base.is_known(hit):
                first_visit.setdefault(hit.case_index, len(rewards))
                a = base.actions[hit.case_index]
            else:
                a = np.asarray(teacher(s), dtype=float)
                teacher_steps += 1
            out = env.step(a)
            rewards.append(out.reward)
            s = out.next_state
            if out.terminal:
                failure = out.failure
                break
        g = returns_to_go(rewards, gamma)
        for idx, t in first_visit.items():
            key = int(seqs[idx])
            acc.add(key, float(g[t]))
            base.set_value(idx, acc.mean(key))
        stats.append(EpisodeStats(len(rewards), teacher_steps, float(sum(rewards)), failure, len(base)))
    return stats
