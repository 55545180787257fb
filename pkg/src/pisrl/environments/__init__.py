from __future__ import annotations

import dataclasses

from .base import Environment, StepOutcome, Teacher, clip_action
from .car_parking import CarParking, CarParkingParams, WaypointTeacher, car_step, parking_reward
from .pole_balancing import LinearTeacher, PoleBalancing, PoleBalancingParams, pole_reward, pole_step

_RECT_FIELDS = ("x_min", "x_max", "y_min", "y_max")
_VECTOR_FIELDS = {"start": ("x", "y", "heading"), "goal": ("x", "y")}


def _floats(text):
    return tuple(float(t) for t in str(text).split(","))


def _apply_params(params_cls, overrides, extra_vectors=None):
    """Build a params dataclass from dotted string overrides.

    Scalar fields take a number; rectangle and point fields accept either a
    comma-separated tuple or one component at a time (``obstacle.x_min``).
    """
    defaults = params_cls()
    kwargs = {}
    compound = {}
    names = {f.name for f in dataclasses.fields(params_cls)}
    for key, raw in overrides.items():
        head, _, sub = key.partition(".")
        if head not in names:
            raise KeyError(f"unknown parameter {key!r}")
        current = getattr(defaults, head)
        if sub:
            parts = _RECT_FIELDS if len(current) == 4 else (extra_vectors or _VECTOR_FIELDS)[head]
            if sub not in parts:
                raise KeyError(f"unknown component {key!r}")
            vec = compound.setdefault(head, list(current))
            vec[parts.index(sub)] = float(raw)
        elif isinstance(current, tuple):
            kwargs[head] = _floats(raw)
        elif isinstance(current, int) and not isinstance(current, bool):
            kwargs[head] = int(float(raw))
        else:
            kwargs[head] = float(raw)
    for head, vec in compound.items():
        kwargs[head] = tuple(vec)
    return params_cls(**kwargs)


def make_car(overrides=None):
    overrides = dict(overrides or {})
    teacher_kw = {}
    if "teacher.lookahead" in overrides:
        teacher_kw["lookahead"] = float(overrides.pop("teacher.lookahead"))
    if "teacher.route" in overrides:
        flat = _floats(overrides.pop("teacher.route"))
        teacher_kw["route"] = tuple(zip(flat[0::2], flat[1::2]))
    params = _apply_params(CarParkingParams, overrides)
    return CarParking(params), WaypointTeacher(params, **teacher_kw)


def make_pole(overrides=None):
    overrides = dict(overrides or {})
    gains = overrides.pop("teacher.gains", None)
    params = _apply_params(PoleBalancingParams, overrides)
    teacher = LinearTeacher(force_max=params.force_max) if gains is None else LinearTeacher(_floats(gains), params.force_max)
    return PoleBalancing(params), teacher


ENVIRONMENTS = {"car": make_car, "pole": make_pole}

__all__ = [
    "CarParking",
    "CarParkingParams",
    "ENVIRONMENTS",
    "Environment",
    "LinearTeacher",
    "PoleBalancing",
    "PoleBalancingParams",
    "StepOutcome",
    "Teacher",
    "WaypointTeacher",
    "car_step",
    "clip_action",
    "make_car",
    "make_pole",
    "parking_reward",
    "pole_reward",
    "pole_step",
]
