"""Dataset construction: simulate, equalize, combine, fit, resimulate.

One call of :func:`simulate_dataset` runs the whole chain for a scenario and
returns the final dataset together with the fitted scorecard.  The individual
steps are exposed for testing and for custom experiments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from . import __version__
from .glm import FittedModel, fit_logistic
from .rates import derive_level_bad_rates
from .samplers import GENERATOR, SPLITTING_RULE, Streams, sample
from .scenario import AttributeSpec, ScenarioSpec, scenario_hash

# linear predictors are clamped here before the logistic transform
ETA_CLAMP = 1e3
# keeps simulated probabilities strictly inside (0, 1)
PD_BOUNDS = (np.finfo(float).tiny, np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class AttributeColumn:
    raw_values: np.ndarray
    buckets: np.ndarray
    provisional_defaults: np.ndarray

    def __post_init__(self):
        n = self.raw_values.shape[0]
        if self.buckets.shape[0] != n or self.provisional_defaults.shape[0] != n:
            raise ValueError("attribute column vectors must share one length")

    @property
    def n(self) -> int:
        return self.raw_values.shape[0]

    @property
    def default_count(self) -> int:
        return int(self.provisional_defaults.sum())


@dataclass(frozen=True)
class SimulatedDataset:
    names: tuple[str, ...]
    raw_values: Mapping[str, np.ndarray]
    buckets: Mapping[str, np.ndarray]
    defaults: np.ndarray

    @property
    def n(self) -> int:
        return self.defaults.shape[0]

    def with_defaults(self, defaults: np.ndarray) -> "SimulatedDataset":
        return SimulatedDataset(self.names, self.raw_values, self.buckets, np.asarray(defaults, dtype=np.int8))


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    labels: tuple[str, ...]
    # (attribute name, level label or None for a numeric column); intercept -> ("", None)
    column_map: tuple[tuple[str, str | None], ...] = field(default=())

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def simulate_attribute(
    attr: AttributeSpec, rates: np.ndarray, n: int, rng: np.random.Generator
) -> AttributeColumn:
    """Draw attribute values, then a provisional default per row from its level's rate."""
    draw = sample(attr, rng, n)
    rates = np.asarray(rates, dtype=float)
    if rates.shape[0] != attr.k:
        raise ValueError(f"{attr.name}: {rates.shape[0]} rates for {attr.k} levels")
    defaults = (rng.random(n) < rates[draw.buckets]).astype(np.int8)
    return AttributeColumn(draw.raw_values, draw.buckets, defaults)


def equalize_defaults(column: AttributeColumn, target: int, rng: np.random.Generator) -> AttributeColumn:
    """Flip uniformly chosen indicators until exactly ``target`` are 1."""
    if not 0 <= target <= column.n:
        raise ValueError(f"target {target} outside [0, {column.n}]")
    y = column.provisional_defaults
    excess = int(y.sum()) - target
    if excess == 0:
        return column
    y = y.copy()
    if excess > 0:
        y[rng.choice(np.flatnonzero(y == 1), size=excess, replace=False)] = 0
    else:
        y[rng.choice(np.flatnonzero(y == 0), size=-excess, replace=False)] = 1
    return AttributeColumn(column.raw_values, column.buckets, y)


def combine_attributes(
    columns: Sequence[AttributeColumn],
    target: int,
    rng: np.random.Generator,
    names: Sequence[str] | None = None,
) -> SimulatedDataset:
    """Join independently simulated attributes into applicants by default stratum.

    Rows ``0..target-1`` are defaulters and take the shuffled defaulted draws of
    every attribute; the remaining rows take the shuffled non-defaulted draws.
    """
    if not columns:
        raise ValueError("nothing to combine")
    names = tuple(names) if names is not None else tuple(f"a{j}" for j in range(len(columns)))
    n = columns[0].n
    counts = [c.default_count for c in columns]
    if any(c.n != n for c in columns):
        raise ValueError("attribute columns differ in length")
    if any(k != target for k in counts):
        raise ValueError(f"unequal default counts across attributes: {counts} (target {target})")

    raw, buckets = {}, {}
    for name, col in zip(names, columns):
        bad = np.flatnonzero(col.provisional_defaults == 1)
        good = np.flatnonzero(col.provisional_defaults == 0)
        order = np.concatenate([rng.permutation(bad), rng.permutation(good)])
        raw[name] = col.raw_values[order]
        buckets[name] = col.buckets[order]
    defaults = np.zeros(n, dtype=np.int8)
    defaults[:target] = 1
    return SimulatedDataset(names, raw, buckets, defaults)


def build_design_matrix(ds: SimulatedDataset, spec: ScenarioSpec) -> DesignMatrix:
    """Intercept, one raw column per ratio/continuous attribute, k-1 dummies per nominal one."""
    cols = [np.ones(ds.n)]
    labels = ["intercept"]
    cmap: list[tuple[str, str | None]] = [("", None)]
    for attr in spec.attributes:
        if attr.is_nominal:
            b = ds.buckets[attr.name]
            for j in range(1, attr.k):
                cols.append((b == j).astype(float))
                labels.append(f"{attr.name}[{attr.levels[j].label}]")
                cmap.append((attr.name, attr.levels[j].label))
        else:
            cols.append(np.asarray(ds.raw_values[attr.name], dtype=float))
            labels.append(attr.name)
            cmap.append((attr.name, None))
    return DesignMatrix(np.column_stack(cols), tuple(labels), tuple(cmap))


def default_probabilities(X: DesignMatrix | np.ndarray, beta: np.ndarray) -> np.ndarray:
    values = getattr(X, "values", X)
    eta = np.clip(values @ np.asarray(beta, dtype=float), -ETA_CLAMP, ETA_CLAMP)
    return np.clip(expit(eta), *PD_BOUNDS)


def simulate_final_defaults(X: DesignMatrix, beta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Fresh default indicators, Bernoulli(logistic(x'beta)) per row."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape[0] != X.values.shape[1]:
        raise ValueError(f"beta has {beta.shape[0]} entries, design has {X.values.shape[1]} columns")
    pi = default_probabilities(X, beta)
    return (rng.random(pi.shape[0]) < pi).astype(np.int8)


@dataclass(frozen=True)
class PipelineResult:
    dataset: SimulatedDataset
    provisional: SimulatedDataset
    design: DesignMatrix
    model: FittedModel
    level_rates: Mapping[str, np.ndarray]


def simulate_dataset(spec: ScenarioSpec, streams: Streams, n: int | None = None) -> PipelineResult:
    """Run every step for one replication and return the final dataset and scorecard."""
    n = spec.global_.sample_size if n is None else n
    d = spec.global_.overall_bad_rate
    target = int(round(n * d))
    rates, columns = {}, []
    for i, attr in enumerate(spec.attributes):
        rates[attr.name] = derive_level_bad_rates(attr, d)
        col = simulate_attribute(attr, rates[attr.name], n, streams.attribute(i))
        columns.append(equalize_defaults(col, target, streams.equalize(i)))
    provisional = combine_attributes(columns, target, streams.combine(), names=spec.names)
    X = build_design_matrix(provisional, spec)
    model = fit_logistic(X, provisional.defaults)
    final = provisional.with_defaults(simulate_final_defaults(X, model.beta, streams.final()))
    return PipelineResult(final, provisional, X, model, rates)


# ---------------------------------------------------------------------------
# export


def write_dataset_csv(ds: SimulatedDataset, spec: ScenarioSpec, path: str | Path) -> None:
    """One raw-value column and one ``_bucket`` column per attribute, then ``default``."""
    header = []
    for name in ds.names:
        header += [name, f"{name}_bucket"]
    header.append("default")
    nominal = {a.name for a in spec.attributes if a.is_nominal}
    cols = []
    for name in ds.names:
        raw = ds.raw_values[name]
        if name in nominal or np.all(raw == np.round(raw)):
            cols.append(raw.astype(np.int64).astype(str))
        else:
            cols.append(np.char.mod("%.17g", raw))
        cols.append(ds.buckets[name].astype(str))
    cols.append(ds.defaults.astype(str))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(zip(*cols))


def manifest(spec: ScenarioSpec, seed: int, result: PipelineResult, **extra) -> dict:
    m = result.model
    out = {
        "tool": "scoresim",
        "version": __version__,
        "seed": seed,
        "generator": GENERATOR,
        "stream_splitting": SPLITTING_RULE,
        "scenario_sha256": scenario_hash(spec),
        "sample_size": result.dataset.n,
        "target_defaults": int(result.provisional.defaults.sum()),
        "final_defaults": int(result.dataset.defaults.sum()),
        "coefficients": m.coefficients(),
        "fit": {
            "converged": m.converged,
            "iterations": m.iterations,
            "final_gradient_norm": m.final_gradient_norm,
            "log_likelihood": m.log_likelihood,
        },
    }
    out.update(extra)
    return out


def write_manifest(data: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")
