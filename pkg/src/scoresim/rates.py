"""Bad ratios to per-level default probabilities.

Given level proportions p_j, bad ratios g_j (relative to any reference) and an
overall bad rate d, the per-level rate is

    delta_j = d * g_j / sum_l p_l g_l

which is the unique vector that keeps the ratios delta_j / delta_k = g_j / g_k
and satisfies the law of total probability sum_j p_j delta_j = d.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import logit

from .errors import InfeasibleSpecification
from .scenario import AttributeSpec, LevelSpec, ScenarioSpec


def derive_level_bad_rates(levels: Sequence[LevelSpec] | AttributeSpec, d: float) -> np.ndarray:
    """Conditional default probability of every level, aligned with level order.

    Raises ``InfeasibleSpecification`` when a level's rate reaches 1, which
    happens for a large bad ratio on a rare level.
    """
    where = ""
    if isinstance(levels, AttributeSpec):
        where = f"attribute {levels.name!r} "
        levels = levels.levels
    if not 0.0 < d < 1.0:
        raise ValueError(f"overall bad rate {d} not in (0, 1)")
    p = np.array([lv.proportion for lv in levels], dtype=float)
    g = np.array([lv.bad_ratio for lv in levels], dtype=float)
    delta = d * g / np.dot(p, g)
    for lv, rate in zip(levels, delta):
        if rate >= 1.0:
            raise InfeasibleSpecification(
                f"infeasible specification: {where}level {lv.label!r} would have bad rate {rate:.4g} >= 1"
            )
    return delta


def scenario_level_rates(spec: ScenarioSpec) -> dict[str, np.ndarray]:
    d = spec.global_.overall_bad_rate
    return {a.name: derive_level_bad_rates(a, d) for a in spec.attributes}


def two_level_rates(p: float, d: float, gamma: float) -> tuple[float, float]:
    """(d0, d1) for a binary attribute with P(level 1) = p and bad ratio gamma."""
    denom = p * gamma + 1.0 - p
    return d / denom, d * gamma / denom


def two_level_closed_form(p: float, d: float, gamma: float) -> tuple[float, float]:
    """Exact logistic coefficients (intercept, slope) for one binary attribute."""
    d0, d1 = two_level_rates(p, d, gamma)
    if not (0.0 < d0 < 1.0 and 0.0 < d1 < 1.0):
        raise InfeasibleSpecification(
            f"infeasible specification: two-level rates ({d0:.4g}, {d1:.4g}) leave (0, 1)"
        )
    beta0 = float(logit(d0))
    beta1 = float(logit(d1)) - beta0
    return beta0, beta1
