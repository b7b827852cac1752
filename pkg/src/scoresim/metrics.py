"""Stability and discrimination metrics: PSI, risk-bucket PSI, information value."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import AttributeSpec

PROP_FLOOR = 1e-6
COUNT_FLOOR = 0.5
STABLE_BELOW = 0.1
SUBSTANTIAL_ABOVE = 0.25


@dataclass(frozen=True)
class PsiResult:
    value: float
    contributions: np.ndarray
    verdict: str


@dataclass(frozen=True)
class BadRateTable:
    attribute: str
    labels: tuple[str, ...]
    counts: np.ndarray
    proportions: np.ndarray
    bad_rates: np.ndarray  # nan marks an empty level


def verdict(value: float) -> str:
    if value < STABLE_BELOW:
        return "stable"
    if value <= SUBSTANTIAL_ABOVE:
        return "small_change"
    return "substantial_change"


def _floor_props(p: np.ndarray) -> np.ndarray:
    if np.all(p > 0):
        return p
    p = np.maximum(p, PROP_FLOOR)
    return p / p.sum()


def psi(base_props, test_props) -> PsiResult:
    """Population stability index sum (T - B) log(T / B) over levels.

    Zero proportions are floored at 1e-6 and the vector renormalized first.
    """
    b = np.asarray(base_props, dtype=float)
    t = np.asarray(test_props, dtype=float)
    if b.shape != t.shape or b.ndim != 1:
        raise ValueError(f"length mismatch: base {b.shape} vs test {t.shape}")
    b, t = _floor_props(b), _floor_props(t)
    contrib = (t - b) * np.log(t / b)
    value = float(contrib.sum())
    return PsiResult(value, contrib, verdict(value))


def level_proportions(buckets, k: int) -> np.ndarray:
    counts = np.bincount(np.asarray(buckets), minlength=k)
    return counts / counts.sum()


def decile_edges(base_pds) -> np.ndarray:
    """The 10%, ..., 90% empirical quantiles of the base PDs (lower value at ties)."""
    return np.quantile(np.asarray(base_pds, dtype=float), np.arange(1, 10) / 10.0, method="lower")


def assign_risk_buckets(pds, edges) -> np.ndarray:
    """Bucket j holds edges[j-1] < pd <= edges[j]; a PD equal to an edge goes to the lower bucket."""
    return np.searchsorted(np.asarray(edges), np.asarray(pds, dtype=float), side="left")


def risk_bucket_psi(base_pds, test_pds, edges=None) -> PsiResult:
    """PSI over decile risk buckets frozen from the base PDs.

    Base proportions are recounted under the same assignment rule instead of
    being taken as exactly 10%, so a self-comparison gives exactly zero.
    """
    base_pds = np.asarray(base_pds, dtype=float)
    test_pds = np.asarray(test_pds, dtype=float)
    if base_pds.size == 0 or test_pds.size == 0:
        raise ValueError("risk_bucket_psi needs non-empty PD vectors")
    edges = decile_edges(base_pds) if edges is None else np.asarray(edges)
    k = edges.size + 1
    return psi(
        level_proportions(assign_risk_buckets(base_pds, edges), k),
        level_proportions(assign_risk_buckets(test_pds, edges), k),
    )


def information_value(buckets, defaults, k: int) -> float:
    """IV = sum_j (G_j/G - B_j/B) log((G_j/G) / (B_j/B)) over non-empty levels.

    A level with no goods or no bads has the zero count floored at 0.5.
    Empty levels carry no information and are skipped.
    """
    if k < 2:
        raise ValueError("information value needs k >= 2 levels")
    buckets = np.asarray(buckets)
    defaults = np.asarray(defaults)
    n_j = np.bincount(buckets, minlength=k).astype(float)
    bad_j = np.bincount(buckets, weights=defaults, minlength=k).astype(float)
    n, bad = n_j.sum(), bad_j.sum()
    if not 0 < bad < n:
        raise ValueError("information value needs both defaulters and non-defaulters")
    good_j = n_j - bad_j
    keep = n_j > 0
    good_j = np.where(good_j[keep] > 0, good_j[keep], COUNT_FLOOR)
    bad_j = np.where(bad_j[keep] > 0, bad_j[keep], COUNT_FLOOR)
    g = good_j / (n - bad)
    b = bad_j / bad
    return float(np.sum((g - b) * np.log(g / b)))


def bad_rate_table(ds, attr: AttributeSpec) -> BadRateTable:
    """Observed proportion and bad rate of every level of one attribute."""
    buckets = ds.buckets[attr.name]
    counts = np.bincount(buckets, minlength=attr.k)
    bads = np.bincount(buckets, weights=ds.defaults, minlength=attr.k)
    with np.errstate(invalid="ignore", divide="ignore"):
        rates = np.where(counts > 0, bads / np.maximum(counts, 1), np.nan)
    return BadRateTable(attr.name, tuple(attr.labels), counts, counts / counts.sum(), rates)
