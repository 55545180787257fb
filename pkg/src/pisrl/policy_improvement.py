"""Second step of the algorithm: safe improvement of a cloned case-base.

Each episode perturbs the actions of known cases with Gaussian noise of
width ``sigma`` and hands unknown states to the teacher. Episodes whose
total reward comes close enough to the best one seen so far are used to
update the base: known cases adopt the explored action when the TD error
is positive, unknown states become new cases, and LFU eviction keeps the
base within capacity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .case_base import CaseBase
from .exploration import perturb_action
from .mc_valuation import returns_to_go
from .parameters import compute_Theta


@dataclass(slots=True)
class EpisodeCaseRecord:
    state: np.ndarray
    action: np.ndarray
    value: float
    known: bool
    base_index: Optional[int]
    step: int
    reward: float = 0.0


@dataclass
class ImprovementState:
    max_total_reward: float = 0.0
    episodes_run: int = 0
    episodes_accepted: int = 0
    failures: int = 0


@dataclass
class UpdateStats:
    replacements: int = 0
    insertions: int = 0
    evictions: int = 0


@dataclass
class ImprovementConfig:
    sigma: float
    episodes: int = 500
    gamma: float = 0.95
    alpha: float = 0.1
    # None: 5% of the best episode's |reward|, recomputed every episode
    Theta: Optional[float] = None
    Theta_fraction: float = 0.05
    # None follows the literal initialisation of the best reward to 0
    initial_max_reward: Optional[float] = None
    max_steps: Optional[int] = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.episodes < 1:
            raise ValueError("episodes must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.Theta is not None and self.Theta < 0:
            raise ValueError("Theta must be non-negative")


@dataclass
class ImprovementEpisode:
    episode: int
    steps: int
    reward: float
    failure: bool
    teacher_steps: int
    accepted: bool
    base_size: int
    replacements: int
    insertions: int
    evictions: int
    max_total_reward: float


def generate_episode(base: CaseBase, env, teacher, sigma: float, rng, max_steps=None, env_rng=None):
    """Run one exploratory episode.

    Returns ``(records, total_reward, failure)``. ``rng`` drives the action
    perturbation; ``env_rng`` (defaulting to ``rng``) is handed to the
    environment for its own noise.
    """
    if len(base) == 0:
        raise ValueError("cannot explore from an empty case-base")
    s = env.reset(rng if env_rng is None else env_rng)
    low, high = env.action_low, env.action_high
    horizon = max_steps or env.max_steps
    records = []
    total = 0.0
    failure = False
    for k in range(horizon):
        hit = base.nearest(s)
        if base.is_known(hit):
            i = hit.case_index
            a = perturb_action(base.actions[i], sigma, rng, low, high)
            base.record_use(i)
            rec = EpisodeCaseRecord(base.states[i].copy(), a, float(base.values[i]), True, i, k)
        else:
            a = np.asarray(teacher(s), dtype=float)
            rec = EpisodeCaseRecord(np.array(s, dtype=float), a, 0.0, False, None, k)
        out = env.step(a)
        rec.reward = out.reward
        total += out.reward
        records.append(rec)
        s = out.next_state
        if out.terminal:
            failure = out.failure
            break
    return records, total, failure


def value_unknowns(records, gamma: float):
    """Give every unknown record the discounted return from its first occurrence."""
    unknown = [r for r in records if not r.known]
    if not unknown:
        return
    g = returns_to_go([r.reward for r in records], gamma)
    first = {}
    for pos, rec in enumerate(records):
        if not rec.known:
            key = rec.state.tobytes()
            first.setdefault(key, pos)
            rec.value = float(g[first[key]])


def accept_episode(total_reward: float, state: ImprovementState, Theta: float) -> bool:
    if Theta < 0:
        raise ValueError("Theta must be non-negative")
    if total_reward > state.max_total_reward - Theta:
        state.max_total_reward = max(state.max_total_reward, total_reward)
        return True
    return False


def td_error(records, i: int, gamma: float) -> float:
    nxt = records[i + 1].value if i + 1 < len(records) else 0.0
    return records[i].reward + gamma * nxt - records[i].value


def apply_updates(base: CaseBase, records, gamma: float, alpha: float, eta: int | None = None) -> UpdateStats:
    """Write an accepted episode back into the case-base.

    Known records replace their case's action only when the TD error
    ``delta`` is positive; the case value becomes the record's value plus
    ``alpha * delta``. Values are taken from the records rather than the
    live base, so a case retrieved many times in one episode still moves by
    a single TD step. Unknown records are inserted with their computed
    return. LFU eviction to ``eta`` (default: the base's capacity) runs last.
    """
    if eta is not None:
        base.capacity = int(eta)
    stats = UpdateStats()
    for i, rec in enumerate(records):
        if rec.known:
            idx = rec.base_index
            if idx is None or idx >= len(base) or not np.array_equal(base.states[idx], rec.state):
                raise RuntimeError(f"record at step {rec.step} does not match a case in the base")
            delta = td_error(records, i, gamma)
            if delta > 0:
                base.replace(idx, rec.action, rec.value + alpha * delta)
                stats.replacements += 1
        else:
            base.insert(rec.state, rec.action, rec.value)
            stats.insertions += 1
    stats.evictions = base.evict_to_capacity()
    return stats


def improve(
    base: CaseBase,
    env,
    teacher,
    config: ImprovementConfig,
    rng: np.random.Generator,
    env_rng: np.random.Generator | None = None,
    on_episode: Callable | None = None,
    state: ImprovementState | None = None,
):
    """Run the improvement loop for ``config.episodes`` episodes.

    ``on_episode(records, accepted, before, base)`` is called after each
    episode, where ``before`` is a copy of the base taken just ahead of the
    update step (so callers can audit exactly what changed).
    Returns ``(base, per-episode metrics)``.
    """
    st = state or ImprovementState(
        max_total_reward=0.0 if config.initial_max_reward is None else config.initial_max_reward
    )
    metrics = []
    for ep in range(config.episodes):
        records, total, failure = generate_episode(
            base, env, teacher, config.sigma, rng, config.max_steps, env_rng
        )
        value_unknowns(records, config.gamma)
        if config.Theta is None:
            Theta = compute_Theta(st.max_total_reward, config.Theta_fraction)
        else:
            Theta = config.Theta
        before = base.copy() if on_episode is not None else None
        accepted = accept_episode(total, st, Theta)
        upd = apply_updates(base, records, config.gamma, config.alpha) if accepted else UpdateStats()
        st.episodes_run += 1
        st.episodes_accepted += accepted
        st.failures += failure
        metrics.append(
            ImprovementEpisode(
                episode=ep,
                steps=len(records),
                reward=total,
                failure=failure,
                teacher_steps=sum(not r.known for r in records),
                accepted=accepted,
                base_size=len(base),
                replacements=upd.replacements,
                insertions=upd.insertions,
                evictions=upd.evictions,
                max_total_reward=st.max_total_reward,
            )
        )
        if on_episode is not None:
            on_episode(records, accepted, before, base)
    return base, metrics
