"""
Cloning a teacher into a case-base
==================================

The car must reach the garage without touching the walls or the block in
the middle of the lot. A pure-pursuit teacher drives a safe, roundabout
route; here it is copied into a case-base one unknown state at a time.
"""

import numpy as np

from pisrl.behavior_cloning import CaseBasePolicy, clone_behavior, evaluate_policy
from pisrl.environments import make_car

env, teacher = make_car()
rng = np.random.default_rng(0)

# %%
# Cases are added only where no stored state lies within theta, so the
# teacher answers less and less often as episodes go by.
base, report = clone_behavior(env, teacher, theta=0.1, eta=250, rng=rng)

for k, ep in enumerate(report.episodes[:12]):
    print(f"episode {k:3d}  teacher share {ep.teacher_fraction:6.1%}  cases {ep.base_size}")
print(f"... stopped after {report.episodes_run} episodes with {len(base)} cases")

# %%
# With the teacher kept as a fallback for the rare unknown state, the
# cloned policy scores almost as well as its source.
eval_seed = 42
teacher_stats = evaluate_policy(env, teacher, 50, np.random.default_rng(eval_seed))
clone_stats = evaluate_policy(env, CaseBasePolicy(base, teacher), 50, np.random.default_rng(eval_seed))
print("teacher mean reward", np.mean([s.reward for s in teacher_stats]))
print("clone mean reward  ", np.mean([s.reward for s in clone_stats]))
