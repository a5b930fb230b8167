"""Experiment orchestration: certification sweeps, selection demo, reports.

Everything here is deterministic given the configuration: path sampling seeds
are ``seed_base + trial``, evaluation points come from their own seed, and
files are written atomically with a fixed column order, so re-running a sweep
reproduces every output byte.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BoundViolationError, ValidationError
from .network import RampNetwork, evaluate_batch, load_network
from .sampler import (
    SparseCoverElement,
    empirical_error,
    normalize,
    reconstruct,
    refined_bound,
    sample_paths,
)
from .variation import rescale_canonical, subnetwork_variations

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "random_network",
    "uniform_points",
    "run_certification_sweep",
    "SweepResult",
    "run_penalized_selection",
    "SelectionResult",
    "emit_records_csv",
    "emit_summary_json",
    "records_to_long_rows",
    "SUMMARY_SCHEMA",
    "validate_summary",
]

MC_SLACK = lambda n_seeds: 1.0 + 3.0 / math.sqrt(n_seeds)  # noqa: E731


def random_network(
    dims, seed: int, canonical: bool = True, output_clamp: bool = False
) -> RampNetwork:
    """Random network with iid uniform [0, 1) weights, optionally canonical.

    ``dims`` is the full dimension list (d_0 .. d_L) with d_0 == 1; the
    output weight starts at 1 and canonical rescaling moves it to sqrt(V).
    """
    dims = list(dims)
    rng = np.random.Generator(np.random.Philox(key=seed))
    mats = tuple(
        rng.uniform(0.0, 1.0, size=(dims[i], dims[i + 1])) for i in range(len(dims) - 1)
    )
    net = RampNetwork(w0=1.0, weights=mats, output_clamp=output_clamp)
    return rescale_canonical(net) if canonical else net


def uniform_points(n: int, d_in: int, seed: int) -> np.ndarray:
    """n evaluation points drawn uniformly from the cube [-1, 1]^d_in."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    return rng.uniform(-1.0, 1.0, size=(n, d_in))


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs of one certification sweep."""

    m_grid: tuple[int, ...]
    n_seeds: int = 200
    seed_base: int = 0
    n_points: int = 512
    point_seed: int = 777
    point_law: str = "uniform"
    net_file: str | None = None
    generator: dict | None = None
    dataset: str | None = None
    budget: float | None = None
    out_csv: str | None = None
    out_json: str | None = None

    def __post_init__(self):
        if not self.m_grid:
            raise ValidationError("m_grid must be nonempty")
        if len(set(self.m_grid)) != len(self.m_grid):
            raise ValidationError("m_grid entries must be distinct")
        if self.n_seeds < 1:
            raise ValidationError("n_seeds must be positive")
        if self.point_law not in ("uniform", "dataset"):
            raise ValidationError(f"unknown point_law {self.point_law!r}")
        if self.net_file is None and self.generator is None:
            raise ValidationError("config needs either net_file or generator")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        p = Path(path)
        try:
            payload = json.loads(p.read_text())
        except FileNotFoundError:
            raise ValidationError(f"config file not found: {p}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {p} is not valid JSON: {exc}") from None
        known = set(cls.__dataclass_fields__)
        unknown = set(payload) - known
        if unknown:
            raise ValidationError(f"{p}: unknown config fields {sorted(unknown)}")
        if "m_grid" not in payload:
            raise ValidationError(f"{p}: missing config field 'm_grid'")
        payload["m_grid"] = tuple(int(m) for m in payload["m_grid"])
        try:
            return cls(**payload)
        except ValidationError as exc:
            raise ValidationError(f"{p}: {exc}") from None

    def load_net(self) -> RampNetwork:
        if self.net_file is not None:
            return load_network(self.net_file)
        gen = dict(self.generator)
        kind = gen.pop("kind", "random_canonical")
        if kind != "random_canonical":
            raise ValidationError(f"generator kind {kind!r} is not supported")
        try:
            L, d, d_in, seed = gen["L"], gen["d"], gen["d_in"], gen["seed"]
        except KeyError as exc:
            raise ValidationError(f"generator missing field {exc}") from None
        dims = [1] + [d] * (L - 1) + [2 * d_in]
        return random_network(dims, seed=seed, canonical=True)

    def load_points(self, d_in: int) -> np.ndarray:
        if self.point_law == "dataset":
            if self.dataset is None:
                raise ValidationError("point_law='dataset' needs a dataset path")
            data = np.loadtxt(self.dataset, delimiter=",", ndmin=2)
            if data.shape[1] != d_in:
                raise ValidationError(
                    f"{self.dataset}: expected {d_in} columns, got {data.shape[1]}"
                )
            return data
        return uniform_points(self.n_points, d_in, self.point_seed)


@dataclass(frozen=True)
class TrialRecord:
    """One sampled cover element and its measured error and bounds."""

    seed: int
    M: int
    empirical_error: float
    refined_estimate: float
    composite_bound: float
    composite_reduced_bound: float
    element_hash: str
    wall_time: float

    # wall_time stays off the CSV so identical configs emit identical bytes
    CSV_COLUMNS = (
        "seed",
        "M",
        "empirical_error",
        "refined_estimate",
        "composite_bound",
        "composite_reduced_bound",
        "element_hash",
    )


@dataclass(frozen=True)
class SweepResult:
    records: tuple[TrialRecord, ...]
    summary: dict

    @property
    def all_flags_pass(self) -> bool:
        return all(
            flags["mean_le_refined_slack"] and flags["min_le_mean"]
            and flags["mean_le_composite"] and flags["mean_le_composite_reduced"]
            for flags in self.summary["per_m"].values()
        )


def _summarize(records: list[TrialRecord], n_seeds: int) -> dict:
    per_m: dict = {}
    for rec in records:
        per_m.setdefault(rec.M, []).append(rec)
    slack = MC_SLACK(n_seeds)
    summary_per_m = {}
    for M in sorted(per_m):
        recs = per_m[M]
        errors = np.array([r.empirical_error for r in recs])
        refined = recs[0].refined_estimate
        composite = recs[0].composite_bound
        composite_red = recs[0].composite_reduced_bound
        mean, low = float(errors.mean()), float(errors.min())
        summary_per_m[str(M)] = {
            "mean_error": mean,
            "min_error": low,
            "refined_estimate": refined,
            "composite_bound": composite,
            "composite_reduced_bound": composite_red,
            "distinct_elements": len({r.element_hash for r in recs}),
            "mean_le_refined_slack": mean <= refined * slack,
            "min_le_mean": low <= mean,
            "mean_le_composite": mean <= composite,
            "mean_le_composite_reduced": mean <= composite_red,
        }

    ms = np.array(sorted(per_m), dtype=float)
    means = np.array([summary_per_m[str(int(m))]["mean_error"] for m in ms])
    mins = np.array([summary_per_m[str(int(m))]["min_error"] for m in ms])

    def slope(ys: np.ndarray) -> float | None:
        mask = ys > 0.0
        if mask.sum() < 2:
            return None
        return float(np.polyfit(np.log(ms[mask]), np.log(ys[mask]), 1)[0])

    return {
        "n_seeds": n_seeds,
        "slack_factor": slack,
        "per_m": summary_per_m,
        "decay_slope_mean": slope(means),
        "decay_slope_min": slope(mins),
    }


def run_certification_sweep(config: ExperimentConfig) -> SweepResult:
    """Sample, reconstruct, and measure cover elements across the M grid.

    For each M the refined bound is estimated once (shared evaluation
    points), then ``n_seeds`` independent trials record their empirical
    squared error against it.
    """
    net = config.load_net()
    points = config.load_points(net.d_in)
    measure = normalize(net, budget_V=config.budget)
    summary_var = subnetwork_variations(net)

    records: list[TrialRecord] = []
    for M in config.m_grid:
        bounds = refined_bound(net, M, "estimate", points=points, summary=summary_var)
        for trial in range(config.n_seeds):
            seed = config.seed_base + trial
            start = time.perf_counter()
            counts = sample_paths(measure, M, seed)
            element = reconstruct(counts, measure)
            err = empirical_error(net, element, points)
            records.append(
                TrialRecord(
                    seed=seed,
                    M=M,
                    empirical_error=err,
                    refined_estimate=bounds.refined,
                    composite_bound=bounds.composite,
                    composite_reduced_bound=bounds.composite_reduced,
                    element_hash=element.cover_hash(),
                    wall_time=time.perf_counter() - start,
                )
            )
    result = SweepResult(records=tuple(records), summary=_summarize(records, config.n_seeds))
    if config.out_csv:
        emit_records_csv(result.records, config.out_csv)
    if config.out_json:
        emit_summary_json(result.summary, config.out_json)
    return result


def certify(result: SweepResult) -> None:
    """Raise if any recorded bound flag failed."""
    if not result.all_flags_pass:
        failing = {
            m: {k: v for k, v in flags.items() if isinstance(v, bool) and not v}
            for m, flags in result.summary["per_m"].items()
            if not all(v for v in flags.values() if isinstance(v, bool))
        }
        raise BoundViolationError(f"bound flags failed: {failing}")


# ---------------------------------------------------------------------------
# penalized selection over an enumerated cover
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionResult:
    index: int
    element: SparseCoverElement
    psi: float
    trace: tuple[dict, ...]


def run_penalized_selection(
    data_x,
    data_y,
    cover: list[SparseCoverElement],
    d_bar: float | None = None,
) -> SelectionResult:
    """Pick the cover element minimizing risk plus a variation penalty.

    The penalty is ``v(g) * sqrt(psi_n)`` with
    ``psi_n = ((L-2) log(d_bar) + log(8 e d_in)) / n`` and ``v(g)`` the
    minimal (geometric-mean form) composite variation of the reconstructed
    network.  Ties break toward the smaller penalty, then the lower hash.
    """
    if not cover:
        raise ValidationError("cover must be nonempty")
    X = np.asarray(data_x, dtype=float)
    y = np.asarray(data_y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.size or X.shape[0] == 0:
        raise ValidationError(f"bad data shapes: x {X.shape}, y {y.shape}")
    n = y.size

    ref = cover[0].tilde_a.dims
    L = len(ref) - 1
    d_in = ref[-1] // 2
    if L > 2:
        if d_bar is None:
            inner = ref[2:-1]
            d_bar = math.exp(sum(math.log(d) for d in inner) / len(inner))
        head = (L - 2) * math.log(float(d_bar))
    else:
        head = 0.0
    psi = (head + math.log(8.0 * math.e * d_in)) / n

    trace = []
    for i, element in enumerate(cover):
        preds = evaluate_batch(element.net_tilde, X)
        risk = float(np.mean((y - preds) ** 2))
        summ = subnetwork_variations(element.net_tilde)
        v_g = float(summ.geo_sum_layer.mean()) * math.sqrt(summ.V)
        penalty = v_g * math.sqrt(psi)
        trace.append(
            {
                "index": i,
                "hash": element.cover_hash(),
                "risk": risk,
                "penalty": penalty,
                "total": risk + penalty,
            }
        )
    best = min(trace, key=lambda row: (row["total"], row["penalty"], row["hash"]))
    return SelectionResult(
        index=best["index"], element=cover[best["index"]], psi=psi, trace=tuple(trace)
    )


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def emit_records_csv(records, path) -> None:
    """Write trial records with a fixed column order and 17-digit floats."""
    if not records:
        raise ValidationError("records must be nonempty")
    lines = [",".join(TrialRecord.CSV_COLUMNS)]
    for rec in records:
        lines.append(
            ",".join(_format_value(getattr(rec, col)) for col in TrialRecord.CSV_COLUMNS)
        )
    _write_atomic(path, "\n".join(lines) + "\n")


def records_to_long_rows(records) -> list[dict]:
    """Plot-ready long format: one (seed, M, metric, value) row per number."""
    metrics = (
        "empirical_error",
        "refined_estimate",
        "composite_bound",
        "composite_reduced_bound",
    )
    return [
        {"seed": rec.seed, "M": rec.M, "metric": m, "value": getattr(rec, m)}
        for rec in records
        for m in metrics
    ]


SUMMARY_SCHEMA = {
    "n_seeds": int,
    "slack_factor": float,
    "per_m": dict,
    "decay_slope_mean": (float, type(None)),
    "decay_slope_min": (float, type(None)),
}

_PER_M_SCHEMA = {
    "mean_error": float,
    "min_error": float,
    "refined_estimate": float,
    "composite_bound": float,
    "composite_reduced_bound": float,
    "distinct_elements": int,
    "mean_le_refined_slack": bool,
    "min_le_mean": bool,
    "mean_le_composite": bool,
    "mean_le_composite_reduced": bool,
}


def validate_summary(summary: dict) -> None:
    """Check a sweep summary against the documented schema."""
    for key, kind in SUMMARY_SCHEMA.items():
        if key not in summary:
            raise ValidationError(f"summary missing field '{key}'")
        if not isinstance(summary[key], kind):
            raise ValidationError(f"summary field '{key}' has type {type(summary[key])}")
    for m, entry in summary["per_m"].items():
        for key, kind in _PER_M_SCHEMA.items():
            if key not in entry:
                raise ValidationError(f"summary per_m[{m}] missing field '{key}'")
            if not isinstance(entry[key], kind):
                raise ValidationError(f"summary per_m[{m}].{key} has type {type(entry[key])}")


def emit_summary_json(summary: dict, path) -> None:
    validate_summary(summary)
    _write_atomic(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
