import math

import numpy as np
from pisrl.environments import StepOutcome

# filled by the acceptance tests, echoed by the terminal summary hook
ACCEPTANCE_LINES = []


class DriftEnv:
    """Small stochastic 2-D task used where the real benchmarks would be slow.

    The state drifts by the action plus noise; reward is the negative
    distance from the origin and leaving the disc of radius ``limit`` fails.
    """

    state_dim = 2
    action_dim = 2
    action_low = np.array([-1.0, -1.0])
    action_high = np.array([1.0, 1.0])

    def __init__(self, noise=0.01, reward_noise=0.01, limit=3.0, max_steps=30, jitter=0.2):
        self.noise, self.reward_noise, self.limit = noise, reward_noise, limit
        self.max_steps, self.jitter = max_steps, jitter
        self.state = None
        self.t = 0

    def reset(self, rng):
        self.rng = rng
        self.t = 0
        self.state = rng.uniform(-self.jitter, self.jitter, size=2) if self.jitter else np.zeros(2)
        return self.state.copy()

    def step(self, action):
        a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
        s = self.state + 0.3 * a + self.rng.normal(0.0, self.noise, size=2) + np.array([0.1, 0.05])
        self.state = s
        self.t += 1
        r = -float(np.hypot(*s)) + self.rng.normal(0.0, self.reward_noise)
        if np.hypot(*s) > self.limit:
            return StepOutcome(s.copy(), r, True, True)
        return StepOutcome(s.copy(), r, self.t >= self.max_steps, False)


def drift_teacher(state):
    return np.clip(-0.8 * np.asarray(state, dtype=float), -1.0, 1.0)


def brute_nearest(states, seqs, query):
    """Plain linear scan: squared distances summed left to right, ties to the older case."""
    best, best_d2, best_seq = None, math.inf, None
    for i, row in enumerate(states):
        d2 = 0.0
        for x, q in zip(row, query):
            diff = float(x) - float(q)
            d2 += diff * diff
        if d2 < best_d2 or (d2 == best_d2 and seqs[i] < best_seq):
            best, best_d2, best_seq = i, d2, seqs[i]
    return best, math.sqrt(best_d2)


def brute_return(rewards, start, gamma):
    return sum(gamma ** (k - start) * rewards[k] for k in range(start, len(rewards)))


def assert_rel(a, b, rtol=1e-9):
    assert math.isclose(a, b, rel_tol=rtol, abs_tol=1e-12), (a, b)


def independent_td(records, i, gamma):
    nxt = records[i + 1].value if i + 1 < len(records) else 0.0
    return records[i].reward + gamma * nxt - records[i].value


class UpdateAuditor:
    """``on_episode`` hook that re-derives every allowed change to the case-base.

    Counts actions that changed without a positive TD error behind them,
    any change at all after a rejected episode, and capacity overruns.
    """

    def __init__(self, gamma, alpha, capacity):
        self.gamma, self.alpha, self.capacity = gamma, alpha, capacity
        self.bad_action_changes = 0
        self.rejected_mutations = 0
        self.bad_values = 0
        self.over_capacity = 0
        self.episodes = 0
        self.replacements_seen = 0

    def __call__(self, records, accepted, before, after):
        self.episodes += 1
        if len(after) > self.capacity:
            self.over_capacity += 1
        if not accepted:
            if after != before or after.mutations != before.mutations:
                self.rejected_mutations += 1
            return
        by_seq = {c.insert_seq: c for c in before}
        expected = {seq: (c.action.copy(), c.value) for seq, c in by_seq.items()}
        for i, rec in enumerate(records):
            if not rec.known:
                continue
            seq = int(before.insert_seqs[rec.base_index])
            delta = independent_td(records, i, self.gamma)
            if delta > 0:
                expected[seq] = (rec.action.copy(), rec.value + self.alpha * delta)
                self.replacements_seen += 1
        for c in after:
            if c.insert_seq in expected:
                action, value = expected[c.insert_seq]
                if not np.array_equal(c.action, action):
                    self.bad_action_changes += 1
                if not math.isclose(c.value, value, rel_tol=1e-12, abs_tol=1e-12):
                    self.bad_values += 1
            elif c.insert_seq < before.next_seq:
                self.bad_action_changes += 1  # an old case reappeared from nowhere

    @property
    def clean(self):
        return not (self.bad_action_changes or self.rejected_mutations or self.bad_values or self.over_capacity)
