"""First step of the algorithm: clone a teacher policy into a case-base.

The teacher is only consulted in states farther than ``theta`` from every
stored case; each such consultation becomes a new case. Everything else is
executed from the case-base, so the teacher's share of the steps shrinks
as the known region grows.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .case_base import CaseBase

log = logging.getLogger(__name__)


@dataclass
class EpisodeStats:
    steps: int
    teacher_steps: int
    reward: float
    failure: bool
    base_size: int = 0

    @property
    def case_steps(self) -> int:
        return self.steps - self.teacher_steps

    @property
    def teacher_fraction(self) -> float:
        return self.teacher_steps / self.steps if self.steps else 0.0


@dataclass
class CloningReport:
    episodes: list[EpisodeStats] = field(default_factory=list)
    final_base_size: int = 0
    stopped_early: bool = False

    @property
    def episodes_run(self) -> int:
        return len(self.episodes)

    @property
    def failures(self) -> int:
        return sum(e.failure for e in self.episodes)


class CloningAborted(RuntimeError):
    """A cloning episode ended in an error state; partial results attached."""

    def __init__(self, message, base, report):
        super().__init__(message)
        self.base = base
        self.report = report


def teacher_fraction(episodes, window: int) -> float:
    """Share of teacher steps over the last ``window`` episodes."""
    recent = episodes[-window:]
    total = sum(e.steps for e in recent)
    return sum(e.teacher_steps for e in recent) / total if total else 1.0


def clone_behavior(
    env,
    teacher,
    theta: float,
    eta: int,
    rng: np.random.Generator,
    max_episodes: int = 100,
    window: int = 10,
    stop_fraction: float = 0.01,
    max_steps: int | None = None,
    abort_on_failure: bool = True,
) -> tuple[CaseBase, CloningReport]:
    """Build a case-base that mimics ``teacher``.

    Stops once the teacher handled less than ``stop_fraction`` of the steps
    over the last ``window`` episodes, or after ``max_episodes``. After each
    episode the base is cut back to ``eta`` cases by LFU eviction.
    """
    if not theta > 0 or eta < 1:
        raise ValueError("theta must be positive and eta at least 1")
    base = CaseBase(theta, eta, env.state_dim, env.action_dim)
    report = CloningReport()
    horizon = max_steps or env.max_steps
    for _ in range(max_episodes):
        s = env.reset(rng)
        steps = teacher_steps = 0
        total = 0.0
        failure = False
        while steps < horizon:
            hit = base.nearest(s)
            if base.is_known(hit):
                a = base.actions[hit.case_index].copy()
                base.record_use(hit.case_index)
            else:
                a = np.asarray(teacher(s), dtype=float)
                base.insert(s, a, 0.0)
                teacher_steps += 1
            out = env.step(a)
            steps += 1
            total += out.reward
            s = out.next_state
            if out.terminal:
                failure = out.failure
                break
        base.evict_to_capacity()
        report.episodes.append(EpisodeStats(steps, teacher_steps, total, failure, len(base)))
        if failure:
            msg = f"cloning episode {len(report.episodes)} ended in an error state"
            log.warning(msg)
            if abort_on_failure:
                report.final_base_size = len(base)
                raise CloningAborted(msg, base, report)
        if len(report.episodes) >= window and teacher_fraction(report.episodes, window) < stop_fraction:
            report.stopped_early = True
            break
    report.final_base_size = len(base)
    return base, report


def ib1_clone(env, teacher, episodes: int, rng: np.random.Generator, max_steps: int | None = None) -> CaseBase:
    """Store every teacher (state, action) pair from ``episodes`` runs.

    The result never treats a state as unknown (``theta`` is infinite), so
    plain 1-nearest-neighbour retrieval always answers.
    """
    if episodes < 1:
        raise ValueError("episodes must be positive")
    pairs = []
    horizon = max_steps or env.max_steps
    for _ in range(episodes):
        s = env.reset(rng)
        for _ in range(horizon):
            a = np.asarray(teacher(s), dtype=float)
            pairs.append((s, a))
            out = env.step(a)
            s = out.next_state
            if out.terminal:
                break
    base = CaseBase(math.inf, max(len(pairs), 1), env.state_dim, env.action_dim)
    for s, a in pairs:
        base.insert(s, a, 0.0)
    return base


class CaseBasePolicy:
    """Greedy case-base policy, optionally backed by a teacher.

    With a teacher, unknown states are answered by it; without one the
    nearest case answers regardless of distance. Uses are not recorded.
    """

    def __init__(self, base: CaseBase, teacher=None):
        self.base = base
        self.teacher = teacher
        self.teacher_steps = 0

    def __call__(self, state):
        hit = self.base.nearest(state)
        if hit is None or (self.teacher is not None and not self.base.is_known(hit)):
            if self.teacher is None:
                raise LookupError("case-base is empty")
            self.teacher_steps += 1
            return np.asarray(self.teacher(state), dtype=float)
        return self.base.actions[hit.case_index].copy()


def run_episode(env, policy, rng, max_steps: int | None = None) -> EpisodeStats:
    s = env.reset(rng)
    before = getattr(policy, "teacher_steps", 0)
    total = 0.0
    steps = 0
    failure = False
    horizon = max_steps or env.max_steps
    while steps < horizon:
        out = env.step(policy(s))
        steps += 1
        total += out.reward
        s = out.next_state
        if out.terminal:
            failure = out.failure
            break
    teacher_steps = getattr(policy, "teacher_steps", 0) - before
    if not hasattr(policy, "teacher_steps"):
        teacher_steps = steps
    return EpisodeStats(steps, teacher_steps, total, failure)


def evaluate_policy(env, policy, episodes: int, rng, max_steps: int | None = None) -> list[EpisodeStats]:
    """Run ``policy`` for a number of episodes without learning."""
    return [run_episode(env, policy, rng, max_steps) for _ in range(episodes)]
