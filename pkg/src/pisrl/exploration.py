"""Action selection from a case-base: greedy retrieval and Gaussian perturbation."""

from __future__ import annotations

import numpy as np

from .case_base import CaseBase, NearestResult


class NoPolicyError(LookupError):
    """Raised when an action is requested from an empty case-base."""


def greedy_action(base: CaseBase, state) -> tuple[np.ndarray, NearestResult]:
    """Action of the nearest stored case; counts as a use of that case."""
    hit = base.nearest(state)
    if hit is None:
        raise NoPolicyError("case-base is empty")
    base.record_use(hit.case_index)
    return base.actions[hit.case_index].copy(), hit


def perturb_action(action, sigma: float, rng: np.random.Generator, low=None, high=None) -> np.ndarray:
    """Sample ``N(action_i, sigma^2)`` independently per component.

    ``sigma == 0`` draws nothing from ``rng``, so an in-domain action comes
    back unchanged. When ``low``/``high`` are given the result is clamped.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    a = np.array(action, dtype=float)
    if sigma > 0:
        a = a + rng.normal(0.0, sigma, size=a.shape)
    if low is not None:
        a = np.maximum(a, low)
    if high is not None:
        a = np.minimum(a, high)
    return a
