"""
Trading risk for reward
=======================

After cloning, the case actions are explored with Gaussian noise of width
sigma. Episodes that come close to the best reward so far are written
back into the case-base. Larger sigma finds better routes faster, and at
some point it starts crashing the car.
"""

import tempfile

from pisrl.harness import ExperimentConfig, sweep

out = tempfile.mkdtemp(prefix="pisrl-sweep-")
cfg = ExperimentConfig(env="car", replicas=3, sigma=[0.0, 9e-4, 9e-2, 0.9], improve_episodes=300, out=out)
table = sweep(cfg.validate())

# %%
# One row per sigma; ``pareto`` marks points no other sigma beats on both
# failures and reward.
print(f"{'sigma':>8} {'failures':>9} {'reward':>8} {'final':>8} pareto")
for row in table:
    print(f"{row['sigma']:8.0e} {row['mean_failures']:9.1f} {row['mean_reward']:8.3f} "
          f"{row['mean_final_reward']:8.3f} {row['pareto']}")
print("per-episode CSVs under", out)
