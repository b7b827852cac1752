"""Declarative scenario model: global parameters plus ordered attribute specs.

Everything here is a frozen dataclass; a ``ScenarioSpec`` is built once (usually
from a JSON file), validated, and then shared read-only by the rest of the
package.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import ScenarioError

PROPORTION_TOL = 1e-9
# lognormal_scaled: max absolute gap between stated and sampler-implied level mass
IMPLIED_MASS_TOL = 0.005

SCALES = ("nominal", "ratio", "continuous")
MARGINAL_KINDS = ("categorical", "bucket_uniform", "lognormal_scaled", "bucket_mixture")
MIXTURE_LAWS = ("uniform", "shifted_exponential")


@dataclass(frozen=True)
class GlobalSpec:
    sample_size: int
    overall_bad_rate: float
    seed: int = 0
    replications: int = 100

    @property
    def target_defaults(self) -> int:
        return int(round(self.sample_size * self.overall_bad_rate))


@dataclass(frozen=True)
class LevelSpec:
    label: str
    proportion: float
    bad_ratio: float
    value_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class MarginalSpec:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    scale: str
    marginal: MarginalSpec
    levels: tuple[LevelSpec, ...]

    @property
    def k(self) -> int:
        return len(self.levels)

    @property
    def is_nominal(self) -> bool:
        return self.scale == "nominal"

    @property
    def proportions(self) -> np.ndarray:
        return np.array([lv.proportion for lv in self.levels], dtype=float)

    @property
    def bad_ratios(self) -> np.ndarray:
        return np.array([lv.bad_ratio for lv in self.levels], dtype=float)

    @property
    def labels(self) -> list[str]:
        return [lv.label for lv in self.levels]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper level bounds as arrays (upper may contain ``inf``)."""
        if self.is_nominal:
            raise ScenarioError(f"{self.name}: nominal attributes have no value ranges")
        lo = np.array([lv.value_range[0] for lv in self.levels], dtype=float)
        hi = np.array([lv.value_range[1] for lv in self.levels], dtype=float)
        return lo, hi


@dataclass(frozen=True)
class ScenarioSpec:
    global_: GlobalSpec
    attributes: tuple[AttributeSpec, ...]

    def attribute(self, name: str) -> AttributeSpec:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        raise ScenarioError(f"unknown attribute {name!r}")

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]


@dataclass(frozen=True)
class ShiftSpec:
    base: ScenarioSpec
    overrides: Mapping[str, tuple[float, ...]]


@dataclass
class ValidationResult:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# validation


def lognormal_level_masses(attr: AttributeSpec) -> np.ndarray:
    """Probability mass of each level range under exp(N(0,1)) * scale."""
    scale = float(attr.marginal.params["scale"])
    lo, hi = attr.bounds()
    with np.errstate(divide="ignore"):
        zlo = np.where(lo > 0, np.log(np.maximum(lo, 1e-300) / scale), -np.inf)
        zhi = np.where(hi > 0, np.log(np.maximum(hi, 1e-300) / scale), -np.inf)
    return ndtr(zhi) - ndtr(zlo)


def _validate_global(g: GlobalSpec, out: ValidationResult) -> None:
    if not (0.0 < g.overall_bad_rate < 1.0):
        out.violations.append(f"global: overall_bad_rate {g.overall_bad_rate} not in (0, 1)")
    if g.sample_size < 1:
        out.violations.append(f"global: sample_size {g.sample_size} < 1")
    elif 0.0 < g.overall_bad_rate < 1.0 and g.target_defaults < 1:
        out.violations.append("global: round(sample_size * overall_bad_rate) must be >= 1")
    if g.replications < 1:
        out.violations.append(f"global: replications {g.replications} < 1")
    if not (0 <= g.seed < 2**64):
        out.violations.append(f"global: seed {g.seed} is not a 64-bit unsigned integer")


def _validate_attribute(attr: AttributeSpec, out: ValidationResult) -> None:
    name = attr.name
    bad = out.violations.append
    if attr.scale not in SCALES:
        bad(f"{name}: unknown scale {attr.scale!r}")
        return
    if attr.marginal.kind not in MARGINAL_KINDS:
        bad(f"{name}: unknown marginal kind {attr.marginal.kind!r}")
        return
    if len(attr.levels) < 2:
        bad(f"{name}: needs at least 2 levels, has {len(attr.levels)}")

    for lv in attr.levels:
        if not (0.0 <= lv.proportion <= 1.0):
            bad(f"{name}/{lv.label}: proportion {lv.proportion} not in [0, 1]")
        if not (lv.bad_ratio > 0 and math.isfinite(lv.bad_ratio)):
            bad(f"{name}/{lv.label}: bad_ratio {lv.bad_ratio} must be positive")
    total = sum(lv.proportion for lv in attr.levels)
    if abs(total - 1.0) > PROPORTION_TOL:
        bad(f"{name}: proportions sum to {total:.10g}")

    if attr.is_nominal:
        for lv in attr.levels:
            if lv.value_range is not None:
                bad(f"{name}/{lv.label}: nominal levels carry no value range")
        if attr.marginal.kind != "categorical":
            bad(f"{name}: nominal attributes require a categorical marginal")
        return

    if any(lv.value_range is None for lv in attr.levels):
        for lv in attr.levels:
            if lv.value_range is None:
                bad(f"{name}/{lv.label}: {attr.scale} levels need a value range")
        return
    lo, hi = attr.bounds()
    for j, lv in enumerate(attr.levels):
        if not lo[j] < hi[j]:
            bad(f"{name}/{lv.label}: range lower bound {lo[j]} not below upper bound {hi[j]}")
        if not math.isfinite(lo[j]):
            bad(f"{name}/{lv.label}: range lower bound must be finite")
        if j < len(attr.levels) - 1:
            if not math.isfinite(hi[j]):
                bad(f"{name}/{lv.label}: only the last range may be open above")
            elif hi[j] != lo[j + 1]:
                bad(f"{name}/{lv.label}: ranges must be contiguous and ordered "
                    f"({hi[j]} != {lo[j + 1]})")

    kind, params = attr.marginal.kind, attr.marginal.params
    if kind == "lognormal_scaled":
        scale = params.get("scale")
        if not isinstance(scale, (int, float)) or not scale > 0:
            bad(f"{name}: lognormal_scaled needs scale > 0")
            return
        if lo[0] > 0 or math.isfinite(hi[-1]):
            bad(f"{name}: ranges must cover (0, inf) for a lognormal marginal")
            return
        implied = lognormal_level_masses(attr)
        for lv, m in zip(attr.levels, implied):
            if abs(m - lv.proportion) > IMPLIED_MASS_TOL:
                out.warnings.append(
                    f"{name}/{lv.label}: stated proportion {lv.proportion:.4f} differs from "
                    f"lognormal mass {m:.4f}"
                )
    elif kind == "bucket_uniform":
        for lv, h in zip(attr.levels, hi):
            if not math.isfinite(h) and lv.proportion > 0:
                bad(f"{name}/{lv.label}: bucket_uniform needs a bounded range")
    elif kind == "bucket_mixture":
        buckets = params.get("buckets")
        if not isinstance(buckets, (list, tuple)) or len(buckets) != len(attr.levels):
            bad(f"{name}: bucket_mixture needs one 'buckets' entry per level")
            return
        for lv, h, b in zip(attr.levels, hi, buckets):
            law = b.get("law")
            if law not in MIXTURE_LAWS:
                bad(f"{name}/{lv.label}: unknown within-bucket law {law!r}")
            elif law == "uniform" and not math.isfinite(h) and lv.proportion > 0:
                bad(f"{name}/{lv.label}: uniform law needs a bounded range")
            elif law == "shifted_exponential":
                mean = b.get("mean")
                if not isinstance(mean, (int, float)) or not mean > 0:
                    bad(f"{name}/{lv.label}: shifted_exponential needs mean > 0")
                elif math.isfinite(h):
                    bad(f"{name}/{lv.label}: shifted_exponential only fits an open top range")


def validate(spec: ScenarioSpec) -> ValidationResult:
    """Check every scenario invariant; violations are returned, never raised."""
    out = ValidationResult()
    _validate_global(spec.global_, out)
    if not spec.attributes:
        out.violations.append("scenario: at least one attribute is required")
    seen = set()
    for attr in spec.attributes:
        if attr.name in seen:
            out.violations.append(f"{attr.name}: duplicate attribute name")
        seen.add(attr.name)
        _validate_attribute(attr, out)
    return out


def apply_shift(shift: ShiftSpec) -> ScenarioSpec:
    """Return the base scenario with the overridden proportion vectors swapped in."""
    base = shift.base
    names = set(base.names)
    for name in shift.overrides:
        if name not in names:
            raise ScenarioError(f"shift targets unknown attribute {name!r}")
    attrs = []
    for attr in base.attributes:
        if attr.name not in shift.overrides:
            attrs.append(attr)
            continue
        props = [float(p) for p in shift.overrides[attr.name]]
        if len(props) != attr.k:
            raise ScenarioError(
                f"shift for {attr.name!r} has {len(props)} proportions, attribute has {attr.k} levels"
            )
        if abs(sum(props) - 1.0) > PROPORTION_TOL:
            raise ScenarioError(f"shift for {attr.name!r}: proportions sum to {sum(props):.10g}")
        levels = tuple(replace(lv, proportion=p) for lv, p in zip(attr.levels, props))
        attrs.append(replace(attr, levels=levels))
    return replace(base, attributes=tuple(attrs))


# ---------------------------------------------------------------------------
# JSON (de)serialization


def _level_from_dict(d: Mapping[str, Any]) -> LevelSpec:
    rng = d.get("range")
    value_range = None
    if rng is not None:
        lo, hi = rng
        value_range = (float(lo), math.inf if hi is None else float(hi))
    return LevelSpec(
        label=str(d["label"]),
        proportion=float(d["proportion"]),
        bad_ratio=float(d["bad_ratio"]),
        value_range=value_range,
    )


def _attribute_from_dict(d: Mapping[str, Any]) -> AttributeSpec:
    marginal = dict(d.get("marginal", {"kind": "categorical"}))
    kind = marginal.pop("kind")
    return AttributeSpec(
        name=str(d["name"]),
        scale=str(d["scale"]),
        marginal=MarginalSpec(kind=kind, params=marginal),
        levels=tuple(_level_from_dict(lv) for lv in d["levels"]),
    )


def scenario_from_dict(d: Mapping[str, Any]) -> ScenarioSpec:
    try:
        g = d["global"]
        global_ = GlobalSpec(
            sample_size=int(g["sample_size"]),
            overall_bad_rate=float(g["overall_bad_rate"]),
            seed=int(g.get("seed", 0)),
            replications=int(g.get("replications", 100)),
        )
        attrs = tuple(_attribute_from_dict(a) for a in d["attributes"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario: {exc!r}") from exc
    return ScenarioSpec(global_=global_, attributes=attrs)


def scenario_to_dict(spec: ScenarioSpec) -> dict[str, Any]:
    g = spec.global_
    attrs = []
    for a in spec.attributes:
        levels = []
        for lv in a.levels:
            item: dict[str, Any] = {
                "label": lv.label,
                "proportion": lv.proportion,
                "bad_ratio": lv.bad_ratio,
            }
            if lv.value_range is not None:
                lo, hi = lv.value_range
                item["range"] = [lo, None if math.isinf(hi) else hi]
            levels.append(item)
        attrs.append({
            "name": a.name,
            "scale": a.scale,
            "marginal": {"kind": a.marginal.kind, **a.marginal.params},
            "levels": levels,
        })
    return {
        "global": {
            "sample_size": g.sample_size,
            "overall_bad_rate": g.overall_bad_rate,
            "seed": g.seed,
            "replications": g.replications,
        },
        "attributes": attrs,
    }


def load_scenario(path: str | Path) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(data)


def dump_scenario(spec: ScenarioSpec, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(spec), fh, indent=2)
        fh.write("\n")


def shift_from_dict(d: Mapping[str, Any], base: ScenarioSpec) -> ShiftSpec:
    overrides = d.get("overrides", {})
    if not isinstance(overrides, Mapping):
        raise ScenarioError("shift file: 'overrides' must be an object")
    return ShiftSpec(base=base, overrides={k: tuple(float(p) for p in v) for k, v in overrides.items()})


def load_shift(path: str | Path, base: ScenarioSpec) -> ShiftSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return shift_from_dict(data, base)


def scenario_hash(spec: ScenarioSpec) -> str:
    """SHA-256 over the canonical JSON form (sorted keys, no whitespace)."""
    blob = json.dumps(scenario_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def bundled_path(name: str) -> Path:
    """Path of a scenario file shipped with the package (``paper_base``, ``paper_shift``)."""
    return Path(__file__).parent / "data" / f"{name}.json"


def bundled_base() -> ScenarioSpec:
    return load_scenario(bundled_path("paper_base"))


def bundled_shift(base: ScenarioSpec | None = None) -> ShiftSpec:
    return load_shift(bundled_path("paper_shift"), base if base is not None else bundled_base())


def attribute_from_lists(
    name: str,
    proportions: Sequence[float],
    bad_ratios: Sequence[float],
    labels: Sequence[str] | None = None,
) -> AttributeSpec:
    """Shorthand for a nominal categorical attribute (handy in tests and notebooks)."""
    labels = labels or [str(j) for j in range(len(proportions))]
    return AttributeSpec(
        name=name,
        scale="nominal",
        marginal=MarginalSpec("categorical"),
        levels=tuple(LevelSpec(lb, float(p), float(g)) for lb, p, g in zip(labels, proportions, bad_ratios)),
    )
