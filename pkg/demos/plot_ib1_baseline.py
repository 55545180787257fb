"""
Storing everything: the IB1 baseline
====================================

A plain instance-based learner keeps every demonstrated state. Compared
with threshold-based cloning it needs far more memory for the same
behaviour, and it never notices that a state is unfamiliar.
"""

import numpy as np

from pisrl.behavior_cloning import CaseBasePolicy, clone_behavior, evaluate_policy, ib1_clone
from pisrl.environments import make_pole

env, teacher = make_pole({"episode_steps": "2000"})

ib1 = ib1_clone(env, teacher, episodes=5, rng=np.random.default_rng(0))
thresholded, _ = clone_behavior(env, teacher, theta=0.02, eta=20000, rng=np.random.default_rng(0), max_episodes=5)
print("IB1 cases      ", len(ib1))
print("theta=0.02 cases", len(thresholded))

# %%
# IB1 answers every query from memory (theta is infinite), so there is no
# teacher to fall back on.
for name, policy in (("IB1", CaseBasePolicy(ib1)), ("thresholded", CaseBasePolicy(thresholded, teacher))):
    stats = evaluate_policy(env, policy, 5, np.random.default_rng(1))
    print(f"{name:12s} mean reward {np.mean([s.reward for s in stats]):8.1f}  failures {sum(s.failure for s in stats)}")
