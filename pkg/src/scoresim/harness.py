"""Monte Carlo replication runs, the base-versus-shift PSI study, and report files."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .errors import ReplicationError, ScoresimError
from .glm import predict_pd
from .metrics import (
    SUBSTANTIAL_ABOVE,
    assign_risk_buckets,
    bad_rate_table,
    decile_edges,
    information_value,
    level_proportions,
    psi,
)
from .pipeline import build_design_matrix, simulate_dataset
from .rates import scenario_level_rates
from .samplers import GENERATOR, ROLE_PSI_BASE, ROLE_PSI_TEST, SPLITTING_RULE, Streams
from .scenario import ScenarioSpec, ShiftSpec, apply_shift, scenario_hash

log = logging.getLogger(__name__)

RISK_BUCKETS = "risk_buckets"


class RunningStats:
    """Streaming elementwise mean and unbiased variance (Welford); NaNs are skipped."""

    def __init__(self, shape=()):
        self.count = np.zeros(shape)
        self.mean = np.zeros(shape)
        self._m2 = np.zeros(shape)

    def push(self, x) -> None:
        x = np.asarray(x, dtype=float)
        ok = ~np.isnan(x)
        self.count = self.count + ok
        delta = np.where(ok, x - self.mean, 0.0)
        self.mean = self.mean + np.where(ok, delta / np.maximum(self.count, 1), 0.0)
        self._m2 = self._m2 + np.where(ok, delta * (x - self.mean), 0.0)

    @property
    def sd(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            var = np.where(self.count > 1, self._m2 / np.maximum(self.count - 1, 1), np.nan)
        return np.sqrt(np.maximum(var, 0.0))

    @property
    def empty_mean(self) -> np.ndarray:
        return np.where(self.count > 0, self.mean, np.nan)


@dataclass
class AttributeSummary:
    name: str
    labels: tuple[str, ...]
    specified_proportions: np.ndarray
    specified_bad_rates: np.ndarray
    bad_rates: RunningStats
    proportions: RunningStats
    iv: RunningStats


@dataclass
class ReplicationSummary:
    replications: int
    seed: int
    attributes: dict[str, AttributeSummary]
    overall_bad_rate: RunningStats = field(default_factory=RunningStats)
    non_converged: int = 0


@dataclass
class PsiStudySummary:
    replications: int
    seed: int
    names: tuple[str, ...]
    psi: dict[str, RunningStats]
    below_cutoff: dict[str, int]
    values: dict[str, list[float]] = field(default_factory=dict)
    test_bad_rate: RunningStats = field(default_factory=RunningStats)

    def fraction_below(self, name: str) -> float:
        return self.below_cutoff[name] / self.replications


def _one_replication(spec: ScenarioSpec, seed: int, r: int):
    res = simulate_dataset(spec, Streams(seed, r))
    ds = res.dataset
    per_attr = {}
    for attr in spec.attributes:
        table = bad_rate_table(ds, attr)
        iv = information_value(ds.buckets[attr.name], ds.defaults, attr.k)
        per_attr[attr.name] = (table.bad_rates, table.proportions, iv)
    return per_attr, float(ds.defaults.mean()), res.model.converged


def _guarded(args):
    spec, seed, r, idx = args
    try:
        return _one_replication(spec, seed, r)
    except ScoresimError as exc:
        raise ReplicationError(idx, exc) from exc


def _map(fn, jobs: Iterable, workers: int):
    if workers <= 1:
        return map(fn, jobs)
    pool = ProcessPoolExecutor(max_workers=workers)
    # Executor.map yields in submission order, keeping the reduction deterministic
    return _closing(pool, pool.map(fn, jobs, chunksize=4))


def _closing(pool, it):
    try:
        yield from it
    finally:
        pool.shutdown(cancel_futures=True)


def run_replications(
    spec: ScenarioSpec,
    R: int,
    seed: int,
    *,
    workers: int = 1,
    substreams: Sequence[int] | None = None,
) -> ReplicationSummary:
    """Run the full pipeline R times and aggregate observed bad rates and IVs.

    Replication r uses stream index ``substreams[r]`` (default ``r``).
    """
    if R < 2:
        raise ValueError("need at least 2 replications")
    keys = list(range(R)) if substreams is None else list(substreams)
    if len(keys) != R:
        raise ValueError("substreams must list one stream index per replication")
    spec_rates = scenario_level_rates(spec)
    summary = ReplicationSummary(
        replications=R,
        seed=seed,
        attributes={
            a.name: AttributeSummary(
                a.name, tuple(a.labels), a.proportions, spec_rates[a.name],
                RunningStats(a.k), RunningStats(a.k), RunningStats(),
            )
            for a in spec.attributes
        },
    )
    jobs = [(spec, seed, key, i) for i, key in enumerate(keys)]
    for i, (per_attr, overall, converged) in enumerate(_map(_guarded, jobs, workers)):
        for name, (rates, props, iv) in per_attr.items():
            s = summary.attributes[name]
            s.bad_rates.push(rates)
            s.proportions.push(props)
            s.iv.push(iv)
        summary.overall_bad_rate.push(overall)
        summary.non_converged += not converged
        if (i + 1) % 25 == 0:
            log.info("replication %d/%d done", i + 1, R)
    return summary


def _psi_test_replication(args):
    test_spec, base_spec, base_model, edges, base_props, seed, r = args
    try:
        res = simulate_dataset(test_spec, Streams(seed, r, role=ROLE_PSI_TEST))
    except ScoresimError as exc:
        raise ReplicationError(r, exc) from exc
    ds = res.dataset
    out = {}
    for attr in test_spec.attributes:
        out[attr.name] = psi(base_props[attr.name], level_proportions(ds.buckets[attr.name], attr.k)).value
    test_pds = predict_pd(build_design_matrix(ds, base_spec), base_model)
    test_props = level_proportions(assign_risk_buckets(test_pds, edges), edges.size + 1)
    out[RISK_BUCKETS] = psi(base_props[RISK_BUCKETS], test_props).value
    return out, float(ds.defaults.mean())


def run_psi_study(
    base: ScenarioSpec,
    shift: ShiftSpec,
    R: int,
    seed: int,
    *,
    workers: int = 1,
) -> PsiStudySummary:
    """Compare one frozen base dataset against R datasets simulated from the shifted scenario.

    The base scorecard and its PD decile edges are fixed once.  Every test
    dataset runs the full pipeline on the shifted scenario; its applicants are
    then scored with the frozen base scorecard for the risk-bucket PSI.
    """
    test_spec = apply_shift(shift)
    base_res = simulate_dataset(base, Streams(seed, 0, role=ROLE_PSI_BASE))
    base_pds = predict_pd(base_res.design, base_res.model)
    edges = decile_edges(base_pds)
    base_props = {a.name: level_proportions(base_res.dataset.buckets[a.name], a.k) for a in base.attributes}
    base_props[RISK_BUCKETS] = level_proportions(assign_risk_buckets(base_pds, edges), edges.size + 1)

    names = tuple(base.names) + (RISK_BUCKETS,)
    summary = PsiStudySummary(
        replications=R,
        seed=seed,
        names=names,
        psi={k: RunningStats() for k in names},
        below_cutoff={k: 0 for k in names},
        values={k: [] for k in names},
    )
    jobs = [(test_spec, base, base_res.model, edges, base_props, seed, r) for r in range(R)]
    for out, rate in _map(_psi_test_replication, jobs, workers):
        for name in names:
            v = out[name]
            summary.psi[name].push(v)
            summary.values[name].append(v)
            summary.below_cutoff[name] += v < SUBSTANTIAL_ABOVE
        summary.test_bad_rate.push(rate)
    return summary


# ---------------------------------------------------------------------------
# reports


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def write_replication_reports(summary: ReplicationSummary, spec: ScenarioSpec, out_dir: str | Path) -> list[Path]:
    """Bad-rate table per attribute, an IV table and a JSON summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, s in summary.attributes.items():
        path = out / f"bad_rates_{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["group", "level", "specified_bad_rate", "mean_observed_bad_rate",
                        "sd_observed_bad_rate", "specified_proportion", "mean_observed_proportion"])
            for j, label in enumerate(s.labels):
                w.writerow([j, label, _fmt(s.specified_bad_rates[j]), _fmt(s.bad_rates.empty_mean[j]),
                            _fmt(s.bad_rates.sd[j]), _fmt(s.specified_proportions[j]),
                            _fmt(s.proportions.mean[j])])
        written.append(path)
    path = out / "information_value.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["attribute", "mean_iv", "sd_iv"])
        for name, s in summary.attributes.items():
            w.writerow([name, _fmt(s.iv.mean), _fmt(s.iv.sd)])
    written.append(path)
    path = out / "summary.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({
            "tool": "scoresim",
            "version": __version__,
            "seed": summary.seed,
            "replications": summary.replications,
            "generator": GENERATOR,
            "stream_splitting": SPLITTING_RULE,
            "scenario_sha256": scenario_hash(spec),
            "overall_bad_rate_mean": float(summary.overall_bad_rate.mean),
            "overall_bad_rate_sd": float(summary.overall_bad_rate.sd),
            "non_converged_fits": summary.non_converged,
        }, fh, indent=2)
        fh.write("\n")
    written.append(path)
    return written


def write_psi_report(summary: PsiStudySummary, out_dir: str | Path, base: ScenarioSpec | None = None,
                     shift: ShiftSpec | None = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "psi.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["attribute", "mean_psi", "sd_psi", "fraction_below_0.25"])
        for name in summary.names:
            st = summary.psi[name]
            w.writerow([name, _fmt(st.mean), _fmt(st.sd), _fmt(summary.fraction_below(name))])
    meta = out / "psi_summary.json"
    info = {
        "tool": "scoresim",
        "version": __version__,
        "seed": summary.seed,
        "replications": summary.replications,
        "generator": GENERATOR,
        "stream_splitting": SPLITTING_RULE,
        "test_bad_rate_mean": float(summary.test_bad_rate.mean),
    }
    if base is not None:
        info["base_scenario_sha256"] = scenario_hash(base)
    if shift is not None:
        info["overrides"] = {k: list(v) for k, v in shift.overrides.items()}
    with open(meta, "w", encoding="utf-8") as fh:
        json.dump(info, fh, indent=2)
        fh.write("\n")
    return [path, meta]
