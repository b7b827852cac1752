"""Seeded random streams and per-attribute marginal samplers.

Streams
-------
All randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence(entropy=seed, spawn_key=key)``.  The spawn key identifies the
consumer, so any stream can be rebuilt in isolation::

    (role, replication, 0, attribute_index)   attribute values + provisional defaults
    (role, replication, 1, attribute_index)   default-count equalization
    (role, replication, 2)                    combination permutations
    (role, replication, 3)                    final default indicators

``role`` separates independent experiments sharing one seed (0: replication
runs and single datasets, 1: base dataset of a PSI study, 2: PSI test
datasets).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnbucketableValue
from .scenario import AttributeSpec

GENERATOR = "numpy.random.PCG64"
SPLITTING_RULE = (
    "SeedSequence(entropy=seed, spawn_key=(role, replication, purpose[, attribute])); "
    "purpose 0=attribute draw, 1=equalize, 2=combine, 3=final defaults; "
    "role 0=replications, 1=psi base, 2=psi test"
)

ROLE_REPLICATION = 0
ROLE_PSI_BASE = 1
ROLE_PSI_TEST = 2


def make_rng(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=key)))


@dataclass(frozen=True)
class Streams:
    """Factory for the independent substreams of one replication."""

    seed: int
    replication: int = 0
    role: int = ROLE_REPLICATION

    def _key(self, *rest: int) -> tuple[int, ...]:
        return (self.role, self.replication, *rest)

    def attribute(self, index: int) -> np.random.Generator:
        return make_rng(self.seed, self._key(0, index))

    def equalize(self, index: int) -> np.random.Generator:
        return make_rng(self.seed, self._key(1, index))

    def combine(self) -> np.random.Generator:
        return make_rng(self.seed, self._key(2))

    def final(self) -> np.random.Generator:
        return make_rng(self.seed, self._key(3))


@dataclass(frozen=True)
class AttributeDraw:
    raw_values: np.ndarray
    buckets: np.ndarray


def draw_levels(proportions: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    """Level indices by inverse CDF; zero-proportion levels are never returned."""
    cdf = np.cumsum(proportions, dtype=float)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right").astype(np.intp)


def _uniform_within(lo: np.ndarray, hi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(lo.shape[0])
    # lo + (hi - lo) * u can round up to hi; keep the range half-open
    return np.minimum(lo + (hi - lo) * u, np.nextafter(hi, lo))


def sample(attr: AttributeSpec, rng: np.random.Generator, n: int) -> AttributeDraw:
    """Draw ``n`` values of one attribute from its marginal.

    Nominal attributes report the level index as their raw value. Discrete
    ratio attributes (categorical marginal with ranges) report the lower bound
    of the drawn level, so an open "k or more" level contributes k.
    """
    kind = attr.marginal.kind
    params = attr.marginal.params
    if kind == "lognormal_scaled":
        raw = float(params["scale"]) * np.exp(rng.standard_normal(n))
        return AttributeDraw(raw, bucket_of(attr, raw))

    buckets = draw_levels(attr.proportions, rng, n)
    if attr.is_nominal:
        return AttributeDraw(buckets.astype(float), buckets)

    lo, hi = attr.bounds()
    if kind == "categorical":
        raw = lo[buckets]
    elif kind == "bucket_uniform":
        raw = _uniform_within(lo[buckets], hi[buckets], rng)
    elif kind == "bucket_mixture":
        raw = np.empty(n)
        for j, law in enumerate(params["buckets"]):
            idx = np.flatnonzero(buckets == j)
            if idx.size == 0:
                continue
            if law["law"] == "uniform":
                raw[idx] = _uniform_within(np.full(idx.size, lo[j]), np.full(idx.size, hi[j]), rng)
            else:
                raw[idx] = lo[j] + rng.exponential(float(law["mean"]), idx.size)
    else:
        raise ValueError(f"{attr.name}: unknown marginal kind {kind!r}")
    return AttributeDraw(raw, buckets)


def bucket_of(attr: AttributeSpec, raw_values) -> np.ndarray:
    """Level index of each raw value under half-open ``[lo, hi)`` ranges."""
    values = np.asarray(raw_values, dtype=float)
    scalar = values.ndim == 0
    values = np.atleast_1d(values)
    if attr.is_nominal:
        idx = values.astype(np.intp)
        bad = (idx != values) | (idx < 0) | (idx >= attr.k)
    else:
        lo, hi = attr.bounds()
        idx = np.searchsorted(lo, values, side="right") - 1
        safe = np.clip(idx, 0, attr.k - 1)
        bad = (idx < 0) | ~(values < hi[safe])
        idx = safe
    if bad.any():
        v = values[np.flatnonzero(bad)[0]]
        raise UnbucketableValue(f"unbucketable value {v!r} for attribute {attr.name!r}")
    return int(idx[0]) if scalar else idx
