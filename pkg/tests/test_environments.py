import math

import numpy as np
import pytest

from pisrl.environments import (
    CarParking,
    CarParkingParams,
    LinearTeacher,
    PoleBalancing,
    PoleBalancingParams,
    StepOutcome,
    WaypointTeacher,
    car_step,
    make_car,
    make_pole,
    parking_reward,
    pole_reward,
    pole_step,
)
from pisrl.behavior_cloning import evaluate_policy

QUIET_CAR = CarParkingParams(action_noise_std=0.0, reward_noise_std=0.0)
QUIET_POLE = PoleBalancingParams(action_noise_std=0.0, reward_noise_std=0.0)


def kinematics_oracle(x, y, heading, a, l=4.0, v=1.0, phi_max=0.78, tau=0.5):
    new_heading = heading + (v * tau) / (l / 2) * math.tan(phi_max * a)
    return x + v * tau * math.cos(new_heading), y + v * tau * math.sin(new_heading), new_heading


def test_step_outcome_failure_implies_terminal():
    with pytest.raises(ValueError):
        StepOutcome(np.zeros(2), 0.0, False, True)


# -- car ----------------------------------------------------------------------

@pytest.mark.parametrize(
    "pose, a, expected",
    [
        ((4.0, 4.0, 0.26), 0.0, (4.483195, 4.128540, 0.260000)),
        ((10.0, 9.0, 1.2), 1.0, (10.061584, 9.496193, 1.447315)),
        ((15.0, 3.0, -2.0), -0.5, (14.746385, 2.569095, -2.102764)),
    ],
)
def test_car_worked_steps(pose, a, expected):
    out = car_step(pose, [a], QUIET_CAR)
    assert out.next_state == pytest.approx(expected, abs=1e-6)
    assert out.next_state == pytest.approx(kinematics_oracle(*pose, a), abs=1e-12)


def test_car_step_length_is_constant():
    rng = np.random.default_rng(0)
    for _ in range(200):
        s = (rng.uniform(0, 25), rng.uniform(0, 18), rng.uniform(-math.pi, math.pi))
        nxt = car_step(s, [rng.uniform(-1, 1)], QUIET_CAR).next_state
        assert math.hypot(nxt[0] - s[0], nxt[1] - s[1]) == pytest.approx(0.5, abs=1e-9)


def test_car_action_saturates():
    a = car_step((8, 8, 0), [5.0], QUIET_CAR).next_state
    b = car_step((8, 8, 0), [1.0], QUIET_CAR).next_state
    assert np.array_equal(a, b)


def test_car_wall_crash():
    out = car_step((24.0, 3.0, 0.0), [0.0], QUIET_CAR)
    assert out.failure and out.terminal and out.reward == -1.0


def test_car_obstacle_crash():
    out = car_step((8.5, 9.0, 0.0), [0.0], QUIET_CAR)
    assert out.failure and out.reward == -1.0


def test_car_parks_in_garage():
    out = car_step((21.9, 13.5, 0.0), [0.0], QUIET_CAR)
    assert out.terminal and not out.failure
    assert out.reward == pytest.approx(parking_reward(22.4, 13.5, QUIET_CAR))
    assert 9.0 < out.reward <= 10.0


def test_car_free_step_reward():
    out = car_step((4.0, 4.0, 0.26), [0.0], QUIET_CAR)
    assert not out.terminal and out.reward == -0.1


def test_parking_reward_bounds():
    assert parking_reward(22.5, 13.5, QUIET_CAR) == 10.0
    assert parking_reward(0.0, 0.0, QUIET_CAR) == 0.0


def test_car_timeout_is_not_failure():
    env = CarParking(CarParkingParams(max_steps=3, action_noise_std=0.0, reward_noise_std=0.0))
    env.reset()
    outs = [env.step([0.0]) for _ in range(3)]
    assert [o.terminal for o in outs] == [False, False, True]
    assert not outs[-1].failure


def test_car_noise_reproducible():
    env = CarParking()
    runs = []
    for _ in range(2):
        env.reset(np.random.default_rng(5))
        runs.append([env.step([0.2]).reward for _ in range(5)])
    assert runs[0] == runs[1]


def test_car_params_validate():
    with pytest.raises(ValueError):
        CarParkingParams(garage=(5.0, 1.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        CarParkingParams(tau=0.0)


def test_car_teacher_is_safe_over_100_episodes():
    env, teacher = CarParking(), WaypointTeacher()
    stats = evaluate_policy(env, teacher, 100, np.random.default_rng(1))
    assert sum(s.failure for s in stats) == 0
    # every episode parks rather than timing out
    assert max(s.steps for s in stats) < env.max_steps


# -- pole ---------------------------------------------------------------------

def test_pole_matches_reference_dynamics():
    s = np.array([0.05, -0.1, 0.3, 0.2])
    out = pole_step(s, [4.0], QUIET_POLE)
    phi, dphi, x, dx = s
    total, pml = 1.1, 0.05
    tmp = (4.0 + pml * dphi**2 * math.sin(phi)) / total
    acc = (9.8 * math.sin(phi) - math.cos(phi) * tmp) / (0.5 * (4 / 3 - 0.1 * math.cos(phi) ** 2 / total))
    xacc = tmp - pml * acc * math.cos(phi) / total
    expected = [phi + 0.02 * dphi, dphi + 0.02 * acc, x + 0.02 * dx, dx + 0.02 * xacc]
    assert out.next_state == pytest.approx(expected, abs=1e-12)
    assert out.reward == pytest.approx(pole_reward(expected[0], expected[2], QUIET_POLE))


def test_pole_limits():
    over = pole_step([math.radians(12) + 0.01, 0.0, 0.0, 0.0], [0.0], QUIET_POLE)
    assert over.failure and over.terminal
    off_track = pole_step([0.0, 0.0, 2.41, 0.0], [0.0], QUIET_POLE)
    assert off_track.failure


def test_pole_reward_range():
    assert pole_reward(0.0, 0.0, QUIET_POLE) == 1.0
    assert pole_reward(1.0, 3.0, QUIET_POLE) == 0.0
    assert pole_reward(math.radians(6), 0.0, QUIET_POLE) == pytest.approx(0.75)


def test_pole_teacher_is_safe_over_100_episodes():
    env, teacher = PoleBalancing(), LinearTeacher()
    stats = evaluate_policy(env, teacher, 100, np.random.default_rng(2))
    assert sum(s.failure for s in stats) == 0
    assert all(s.steps == env.max_steps for s in stats)
    # safe but not perfect: reward stays measurably below the 1-per-step ceiling
    mean = np.mean([s.reward for s in stats])
    assert 9000 < mean < 9999


def test_pole_reset_jitter():
    env = PoleBalancing()
    s = env.reset(np.random.default_rng(0))
    assert np.all(np.abs(s) <= 0.05) and np.any(s != 0)
    assert np.array_equal(PoleBalancing(PoleBalancingParams(reset_jitter=0.0)).reset(None), np.zeros(4))


# -- factories ------------------------------------------------------------------

def test_make_car_overrides():
    env, teacher = make_car({"obstacle.x_min": "10", "garage": "19,25,11,16", "teacher.lookahead": "3"})
    assert env.params.obstacle == (10.0, 15.0, 6.0, 12.0)
    assert env.params.garage == (19.0, 25.0, 11.0, 16.0)
    assert teacher.lookahead == 3.0


def test_make_pole_overrides():
    env, teacher = make_pole({"episode_steps": "50", "teacher.gains": "1,2,3,4"})
    assert env.max_steps == 50
    assert teacher.gains.tolist() == [1, 2, 3, 4]


def test_unknown_override_rejected():
    with pytest.raises(KeyError):
        make_car({"wheels": "3"})
    with pytest.raises(KeyError):
        make_car({"obstacle.z": "3"})
