"""
Choosing theta and eta from demonstrations
==========================================

theta is the mean distance between consecutive states of one teacher run;
eta counts the reference run's states plus the extra cases needed to
cover where other noisy runs stray from it.
"""

import numpy as np

from pisrl.environments import make_car, make_pole
from pisrl.parameters import SigmaSchedule, collect_trajectories, estimate_eta, estimate_theta

for name, make in (("car", make_car), ("pole", make_pole)):
    env, teacher = make()
    trajs = collect_trajectories(env, teacher, 10, np.random.default_rng(0))
    theta = estimate_theta(trajs[0])
    print(f"{name}: theta={theta:.3g}  eta={estimate_eta(trajs, theta)}")

# %%
# The estimate follows the step size. On the pole it is tiny because the
# state barely moves in 20 ms, so in practice theta is set by hand and eta
# recomputed for that theta.
env, teacher = make_pole()
trajs = collect_trajectories(env, teacher, 10, np.random.default_rng(0))
for theta in (0.01, 0.02, 0.05):
    print(f"pole eta at theta={theta}: {estimate_eta(trajs, theta)}")

# %%
# Risk levels are swept on a decade grid.
print(["%.0e" % s for s in SigmaSchedule().values()])
