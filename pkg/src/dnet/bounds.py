"""Closed-form cardinality, entropy, risk, and complexity calculators.

Every function here is a pure, total evaluator of one closed-form bound
expression, parameterized by depth ``L``, composite variation ``v``, widths,
sample size, and accuracy.  Natural logarithms throughout, except the
explicitly binary entropic count bound which is computed in bits and
converted.  Universal constants that the statements leave unspecified are set
to 1 and flagged ``constant_free=False`` in the report metadata: the rates,
not the constants, are the testable content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .network import RampNetwork
from .variation import (
    group_norm_2_1,
    l1_entrywise,
    spectral_norm,
    subnetwork_variations,
)

__all__ = [
    "BoundReport",
    "count_bounds",
    "improved_log_cardinality",
    "LogCardinality",
    "covering_entropy",
    "TwoLayerEntropy",
    "two_layer_entropy",
    "two_layer_entropy_crossover",
    "risk_rates",
    "rademacher_bound",
    "compare_entropy_bounds",
]


@dataclass(frozen=True)
class BoundReport:
    """Named bound values with the inputs that produced them."""

    inputs: dict
    values: dict
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"inputs": dict(self.inputs), "values": dict(self.values), "flags": dict(self.flags)}


def _binary_entropy(p: float) -> float:
    """Binary entropy in bits; 0 at the endpoints."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def count_bounds(M: int, D: int) -> BoundReport:
    """Log-counts of nonnegative integer vectors with D slots summing to M.

    ``log_exact`` is ``log C(M + D - 1, M)`` via log-gamma; the rest are the
    classical upper bounds.  ``occupancy_simplified`` (``M log(2eD/M)``) is
    only valid for ``D >= M - 1`` and is omitted otherwise.
    """
    if M < 1 or D < 1:
        raise ValidationError(f"M and D must be positive, got M={M}, D={D}")
    log_exact = math.lgamma(M + D) - math.lgamma(M + 1) - math.lgamma(D)
    m_total = M + D - 1
    entropic = m_total * _binary_entropy(M / m_total) * math.log(2.0)
    values = {
        "log_exact": log_exact,
        "all_levels": D * math.log(M + 1.0),
        "per_draw": M * math.log(float(D)),
        "entropic": entropic,
        "occupancy": M * math.log(math.e * (1.0 + (D - 1.0) / M)),
    }
    flags = {"occupancy_simplified_valid": D >= M - 1, "log_base": "nat"}
    if D >= M - 1:
        values["occupancy_simplified"] = M * math.log(2.0 * math.e * D / M)
    return BoundReport(inputs={"M": M, "D": D}, values=values, flags=flags)


class LogCardinality(NamedTuple):
    value: float
    dimension_free: float


def improved_log_cardinality(
    L: int, M: int, d_bar: float | None, d_in: int
) -> LogCardinality:
    """Log-size of the pruned sparse cover.

    ``value`` is ``(L-2) M log(min(d_bar, 2M)) + M log(8 e d_in)``;
    ``dimension_free`` replaces the min by ``2M`` so the bound holds no
    matter how wide the inner layers are.  For ``L == 2`` the first term
    vanishes and ``d_bar`` may be ``None``.
    """
    if L < 2:
        raise ValidationError(f"depth must be >= 2, got {L}")
    if M < 1 or d_in < 1:
        raise ValidationError(f"M and d_in must be positive, got M={M}, d_in={d_in}")
    tail = M * math.log(8.0 * math.e * d_in)
    if L == 2:
        return LogCardinality(value=tail, dimension_free=tail)
    if d_bar is None:
        raise ValidationError("d_bar is required for L >= 3")
    inner = min(float(d_bar), 2.0 * M)
    return LogCardinality(
        value=(L - 2) * M * math.log(inner) + tail,
        dimension_free=(L - 2) * M * math.log(2.0 * M) + tail,
    )


def covering_entropy(L: int, v: float, eps: float, d_bar: float | None, d_in: int) -> float:
    """Metric entropy of the depth-L class at accuracy eps.

    Instantiates the cover log-cardinality at the path count
    ``M ~ L^2 v^2 / eps^2`` forced by the arithmetic-mean error bound.
    """
    if eps <= 0.0:
        raise ValidationError(f"eps must be positive, got {eps}")
    m_real = (L * v / eps) ** 2
    inner = 2.0 * m_real
    if L > 2:
        if d_bar is None:
            raise ValidationError("d_bar is required for L >= 3")
        inner = min(float(d_bar), 2.0 * m_real)
    head = (L - 2) * math.log(inner) if L > 2 else 0.0
    return m_real * (head + math.log(8.0 * math.e * d_in))


class TwoLayerEntropy(NamedTuple):
    spectral: float
    convex_hull: float
    crossover_dim: int | None


def two_layer_entropy(v: float, eps: float, d_in: int, C: float = 1.0) -> TwoLayerEntropy:
    """Single-hidden-layer entropy bounds for the second-moment spectral class.

    ``spectral`` is ``8 v^4 / eps^4 * log(8 e d_in)``; ``convex_hull`` is the
    comparator ``C d_in (v/eps)^(2 - 4/(d_in+2))`` with the universal constant
    exposed.  ``crossover_dim`` is the smallest input dimension at which the
    spectral form is strictly smaller (None if not found below 10**6).
    """
    if eps <= 0.0:
        raise ValidationError(f"eps must be positive, got {eps}")
    spectral = 8.0 * v**4 / eps**4 * math.log(8.0 * math.e * d_in)
    convex = C * d_in * (v / eps) ** (2.0 - 4.0 / (d_in + 2.0))
    return TwoLayerEntropy(
        spectral=spectral,
        convex_hull=convex,
        crossover_dim=two_layer_entropy_crossover(v, eps, C=C),
    )


def two_layer_entropy_crossover(
    v: float, eps: float, C: float = 1.0, max_dim: int = 1_000_000
) -> int | None:
    """Smallest d_in where the spectral entropy beats the convex-hull form."""
    dims = np.arange(1, max_dim + 1, dtype=float)
    spectral = 8.0 * v**4 / eps**4 * np.log(8.0 * math.e * dims)
    convex = C * dims * (v / eps) ** (2.0 - 4.0 / (dims + 2.0))
    hits = np.nonzero(spectral < convex)[0]
    return int(dims[hits[0]]) if hits.size else None


def risk_rates(L: int, v: float, n: int, d_bar: float | None, d_in: int) -> BoundReport:
    """Statistical risk rates for the two-layer and deep classes, with C = 1.

    * ``two_layer_cube_root`` - ``(v^4 log(8 e d_in) / n)^(1/3)``;
    * ``deep``                - ``L v sqrt(((L-2) log d_bar + log(8 e d_in))/n)``;
    * ``deep_dimension_free`` - same with ``log(v sqrt(n))`` replacing
      ``log d_bar``;
    * ``dimension_linear``    - the classical ``v sqrt(d_in log(e n/d_in)/n)``.
    """
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    values = {
        "two_layer_cube_root": (v**4 * math.log(8.0 * math.e * d_in) / n) ** (1.0 / 3.0),
        "dimension_linear": v * math.sqrt(d_in * math.log(math.e * n / d_in) / n),
    }
    tail = math.log(8.0 * math.e * d_in)
    if L > 2 and d_bar is None:
        raise ValidationError("d_bar is required for L >= 3")
    head_dbar = (L - 2) * math.log(float(d_bar)) if L > 2 else 0.0
    head_free = (L - 2) * math.log(v * math.sqrt(n)) if L > 2 else 0.0
    values["deep"] = L * v * math.sqrt((head_dbar + tail) / n)
    values["deep_dimension_free"] = L * v * math.sqrt((head_free + tail) / n)
    return BoundReport(
        inputs={"L": L, "v": v, "n": n, "d_bar": d_bar, "d_in": d_in},
        values=values,
        flags={"constant_free": False, "constant": "C(B, sigma^2) = 1"},
    )


def rademacher_bound(
    L: int,
    v: float,
    n: int,
    d_bar: float | None,
    d_in: int,
    B: float,
    alpha: float | None = None,
) -> BoundReport:
    """Empirical Rademacher complexity via the chained entropy integral.

    With the cutoff ``alpha = 1/sqrt(n)`` (the default) the headline value is
    ``L v log(n) sqrt(((L-2) log(min(d_bar, 2 L^2 v^2 n)) + log(8 e d_in))/n)``.
    ``integral`` is the inner entropy-integral factor
    ``log(B/alpha) sqrt(L^2 v^2 [(L-2) log(min(d_bar, 2 L^2 v^2/alpha^2)) + log(8 e d_in)])``.
    """
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if alpha is None:
        alpha = 1.0 / math.sqrt(n)
    tail = math.log(8.0 * math.e * d_in)
    if L > 2 and d_bar is None:
        raise ValidationError("d_bar is required for L >= 3")

    def head(cap: float) -> float:
        if L <= 2:
            return 0.0
        return (L - 2) * math.log(min(float(d_bar), cap))

    headline = (
        L * v * math.log(n) * math.sqrt((head(2.0 * L**2 * v**2 * n) + tail) / n)
    )
    integral = math.log(B / alpha) * math.sqrt(
        L**2 * v**2 * (head(2.0 * L**2 * v**2 / alpha**2) + tail)
    )
    return BoundReport(
        inputs={"L": L, "v": v, "n": n, "d_bar": d_bar, "d_in": d_in, "B": B, "alpha": alpha},
        values={"bound": headline, "integral": integral},
        flags={"constant_free": False},
    )


# ---------------------------------------------------------------------------
# comparison against spectral-product entropy bounds
# ---------------------------------------------------------------------------

def _net_norms(net: RampNetwork) -> tuple[list[float], list[float], list[float]]:
    """Spectral, (2,1)-group, and comparison-spectral norms per weight matrix.

    The output weight ``w0`` is folded into the first matrix.  For the
    comparison formulas the single-row first matrix uses its l1 norm in
    place of the spectral norm; the true spectral norm is kept alongside for
    the per-matrix sanity relation ``|W|_{2,1} >= |W|_sigma``.
    """
    mats = [net.w0 * net.weights[0]] + [np.asarray(w) for w in net.weights[1:]]
    sigma = [spectral_norm(m) for m in mats]
    group = [group_norm_2_1(m) for m in mats]
    sigma_cmp = [l1_entrywise(mats[0])] + sigma[1:]
    return sigma, group, sigma_cmp


def compare_entropy_bounds(nets, X_norm: float, eps: float) -> list[dict]:
    """Evaluate spectral-product entropy bounds against the path-mass bound.

    For each network: the full spectral/group-norm product form, its lower
    simplification ``L^3 |X|^2 log(max d) / eps^2 * prod |W|_sigma^2``, and
    our covering entropy at the network's minimal composite variation (the
    rescaling-invariant geometric-mean form).  Rows are plot-ready dicts.
    """
    if eps <= 0.0:
        raise ValidationError(f"eps must be positive, got {eps}")
    rows = []
    for net in nets:
        L = net.depth
        sigma, group, sigma_cmp = _net_norms(net)
        max_dim = max(net.dims[1:])
        sig_prod_sq = math.prod(s * s for s in sigma_cmp)
        ratio_sum = sum((g / s) ** (2.0 / 3.0) for g, s in zip(group, sigma_cmp) if s > 0)
        spectral_entropy = (
            X_norm**2 * math.log(max_dim) / eps**2 * sig_prod_sq * ratio_sum**3
        )
        spectral_floor = L**3 * X_norm**2 * math.log(max_dim) / eps**2 * sig_prod_sq

        summary = subnetwork_variations(net)
        v_min = float(summary.geo_sum_layer.mean()) * math.sqrt(summary.V)
        inner_dims = net.dims[2:-1]
        d_bar = math.exp(sum(math.log(d) for d in inner_dims) / len(inner_dims)) if inner_dims else None
        path_entropy = covering_entropy(L, v_min, eps, d_bar, net.d_in)

        rows.append(
            {
                "L": L,
                "spectral_product_entropy": spectral_entropy,
                "spectral_product_entropy_floor": spectral_floor,
                "path_entropy": path_entropy,
                "floor_to_path_ratio": spectral_floor / path_entropy if path_entropy > 0 else math.inf,
                "log_sigma_product": sum(math.log(s) for s in sigma_cmp if s > 0),
                "v_min": v_min,
                "group_ge_sigma": all(
                    g >= s * (1.0 - 1e-9) for g, s in zip(group, sigma)
                ),
            }
        )
    return rows
