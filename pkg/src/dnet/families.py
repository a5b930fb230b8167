"""Structured weight families with closed-form average variations.

Each family repeats one square nonnegative matrix ``Q`` (or a perturbation
schedule) across the inner layers of a network whose outer row is ``W1`` and
output weight ``W0``.  The closed forms below are redundant encodings of what
the generic variation pipeline computes on the explicitly built network, and
the builders cross-check as such.  The matrix dimension doubles as the
sign-split input width, so it must be even to build a valid network.

Average variations combine layer averages in the globally rescaled form
``sqrt(V_bar_out * V_bar_in)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StructureError, ValidationError
from .network import RampNetwork
from .variation import (
    diagonal_reduced_input_variations,
    l1_entrywise,
    subnetwork_variations,
)

__all__ = [
    "MatrixFamily",
    "build_constant_q_network",
    "projection_matrix",
    "projection_example",
    "ProjectionReport",
    "irreducible_cesaro",
    "CesaroReport",
    "identity_family",
    "IdentityReport",
    "near_identity_family",
    "NearIdentityReport",
    "harmonic_schedule",
    "toeplitz_demo",
    "perron_root_and_vectors",
]

_STRUCT_ZERO = 1e-15  # entries below this are structural zeros for graph checks


def build_constant_q_network(
    Q, W0: float, W1, L: int, output_clamp: bool = False
) -> RampNetwork:
    """Network with row ``W1`` on the outer layer and ``Q`` repeated inside."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    W1 = np.asarray(W1, dtype=float).reshape(1, -1)
    if L < 2:
        raise ValidationError(f"depth must be >= 2, got {L}")
    if Q.shape[0] != Q.shape[1] or Q.shape[0] != W1.shape[1]:
        raise ValidationError(f"Q must be square matching W1 width, got {Q.shape}")
    return RampNetwork(w0=W0, weights=(W1,) + (Q,) * (L - 1), output_clamp=output_clamp)


def _global_form(summary) -> float:
    return math.sqrt(summary.v_bar_out * summary.v_bar_in)


# ---------------------------------------------------------------------------
# projection family
# ---------------------------------------------------------------------------

def projection_matrix(t: float, s: float) -> np.ndarray:
    """The 2x2 nonnegative projection ``[[t, t(1-t)/s], [s, 1-t]]``."""
    if not 0.0 <= t <= 1.0 or s <= 0.0:
        raise ValidationError(f"need t in [0, 1] and s > 0, got t={t}, s={s}")
    Q = np.array([[t, t * (1.0 - t) / s], [s, 1.0 - t]])
    if np.any(Q < 0.0):
        raise ValidationError(f"projection parameters give negative entries: {Q}")
    if l1_entrywise(Q @ Q - Q) > 1e-10:
        raise StructureError("matrix is not a projection")
    return Q


@dataclass(frozen=True)
class ProjectionReport:
    exact: float
    asymptotic: float
    v_bar_out: float
    v_bar_in: float


def projection_example(t: float, s: float, L: int, W0: float, W1) -> ProjectionReport:
    """Average variation of the repeated-projection family.

    Exact finite-depth value from the geometric series collapse ``Q^k == Q``,
    plus the depth-free asymptote ``sqrt(W0 |W1 Q|_1 |Q|_1)``.
    """
    Q = projection_matrix(t, s)
    W1 = np.asarray(W1, dtype=float).reshape(-1)
    w1q = l1_entrywise(W1 @ Q)
    q1 = l1_entrywise(Q)
    w1_1 = l1_entrywise(W1)
    v_bar_out = (W0 + W0 * w1_1 + (L - 2) * W0 * w1q) / L
    v_bar_in = (w1q + (L - 1) * q1) / L
    return ProjectionReport(
        exact=math.sqrt(v_bar_out * v_bar_in),
        asymptotic=math.sqrt(W0 * w1q * q1),
        v_bar_out=v_bar_out,
        v_bar_in=v_bar_in,
    )


# ---------------------------------------------------------------------------
# irreducible family and Cesaro limits
# ---------------------------------------------------------------------------

def _strongly_connected(mask: np.ndarray) -> bool:
    """Is the directed positivity pattern strongly connected?"""
    n = mask.shape[0]

    def reaches_all(adj) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            j = stack.pop()
            for k in np.nonzero(adj[j])[0]:
                if k not in seen:
                    seen.add(int(k))
                    stack.append(int(k))
        return len(seen) == n

    return reaches_all(mask) and reaches_all(mask.T)


def perron_root_and_vectors(Q, tol: float = 1e-13, max_iter: int = 100_000):
    """Spectral radius and positive right/left eigenvectors of irreducible Q.

    Power iteration runs on ``Q + I`` (primitive for irreducible Q, so it
    converges even for periodic patterns) and the shift is undone at the end.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[0] != Q.shape[1]:
        raise ValidationError(f"Q must be square, got {Q.shape}")
    if np.any(Q < 0.0):
        raise ValidationError("Q must be entrywise nonnegative")
    if not _strongly_connected(Q > _STRUCT_ZERO):
        raise StructureError("matrix positivity pattern is not strongly connected")

    def _positive_eigvec(A):
        x = np.ones(A.shape[0]) / A.shape[0]
        for _ in range(max_iter):
            y = A @ x + x
            y /= y.sum()
            if np.abs(y - x).sum() <= tol:
                return y
            x = y
        return x

    u = _positive_eigvec(Q)
    v = _positive_eigvec(Q.T)
    rho = float((Q @ u).sum() / u.sum())
    return rho, u, v


@dataclass(frozen=True)
class CesaroReport:
    v_bar_out: float
    v_bar_in: float
    v_bar: float
    limit_out: float
    limit_in: float
    limit_v_bar: float
    rho: float
    rate_exponent: float


def irreducible_cesaro(Q, W0: float, W1, L: int) -> CesaroReport:
    """Finite-depth layer averages and their rank-one Cesaro limits.

    A supplied ``Q`` with spectral radius other than 1 is renormalized by its
    Perron root (reported).  ``rate_exponent`` is the fitted slope of
    ``log |V_bar(L') - limit|`` against ``log L'`` over even depths up to L;
    the averages converge at rate ``O(1/L)``.
    """
    rho, u, v = perron_root_and_vectors(Q)
    Qn = np.asarray(Q, dtype=float) / rho
    W1 = np.asarray(W1, dtype=float).reshape(-1)

    def averages(depth: int) -> tuple[float, float]:
        out_terms = [W0]
        row = W1.copy()
        for _ in range(depth - 2):
            out_terms.append(W0 * row.sum())
            row = row @ Qn
        out_terms.append(W0 * row.sum())
        row = row @ Qn  # now W1 @ Qn^(depth-1), the outermost incoming mass
        power_sum = np.zeros_like(Qn)
        P = Qn.copy()
        for _ in range(depth - 1):
            power_sum += P
            P = P @ Qn
        v_in = (row.sum() + power_sum.sum()) / depth
        return sum(out_terms) / depth, v_in

    uv = float(u @ v)
    limit_out = W0 * float(W1 @ u) * v.sum() / uv
    limit_in = float(u.sum() * v.sum() / uv)
    limit_v_bar = math.sqrt(limit_out * limit_in)

    v_bar_out, v_bar_in = averages(L)
    v_bar = math.sqrt(v_bar_out * v_bar_in)

    depths = [d for d in range(max(4, L // 8), L + 1) if d % 2 == 0][-8:]
    errs, used = [], []
    for d in depths:
        o, i = averages(d)
        gap = abs(math.sqrt(o * i) - limit_v_bar)
        if gap > 0.0:
            errs.append(math.log(gap))
            used.append(math.log(d))
    rate = float(np.polyfit(used, errs, 1)[0]) if len(errs) >= 2 else -1.0

    return CesaroReport(
        v_bar_out=v_bar_out,
        v_bar_in=v_bar_in,
        v_bar=v_bar,
        limit_out=limit_out,
        limit_in=limit_in,
        limit_v_bar=limit_v_bar,
        rho=rho,
        rate_exponent=rate,
    )


# ---------------------------------------------------------------------------
# identity and near-identity families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    plain: float
    reduced: float
    generic_plain: float
    generic_reduced: float


def identity_family(dim: int, L: int, W0: float, W1) -> IdentityReport:
    """Identity inner matrices: closed forms and their generic cross-checks.

    The plain average variation grows like ``sqrt(dim)``; removing the
    diagonal links kills the ``dim`` term, leaving
    ``sqrt((W0/L + (L-1) W0 |W1|_1 / L) * (|W1|_1 / L))``.
    """
    if dim % 2 != 0 or dim < 2:
        raise ValidationError(f"matrix dimension must be even and >= 2, got {dim}")
    W1 = np.asarray(W1, dtype=float).reshape(-1)
    if W1.size != dim:
        raise ValidationError(f"W1 must have {dim} entries, got {W1.size}")
    w1_1 = float(W1.sum())
    out_factor = W0 / L + (L - 1) * W0 * w1_1 / L
    plain = math.sqrt(out_factor * (w1_1 / L + (L - 1) * dim / L))
    reduced = math.sqrt(out_factor * (w1_1 / L))

    net = build_constant_q_network(np.eye(dim), W0, W1, L)
    summary = subnetwork_variations(net)
    generic_plain = _global_form(summary)
    red_layers = [r.sum() for r in diagonal_reduced_input_variations(net)]
    generic_reduced = math.sqrt(summary.v_bar_out * (sum(red_layers) / L))
    return IdentityReport(
        plain=plain, reduced=reduced, generic_plain=generic_plain, generic_reduced=generic_reduced
    )


@dataclass(frozen=True)
class NearIdentityReport:
    exact_reduced: float
    bound: float
    bound_depth_substituted: float
    S: float
    holds: bool


def harmonic_schedule(L: int) -> list[float]:
    """Taper factors ``1/l`` for the inner matrices ``l = 2 .. L``."""
    return [1.0 / l for l in range(2, L + 1)]


def near_identity_family(Q_list, W0: float, W1) -> NearIdentityReport:
    """Inner matrices ``I + Q_l`` for small nonnegative perturbations ``Q_l``.

    ``exact_reduced`` is the diagonal-removed average variation of the built
    network; ``bound`` is the perturbation-mass form driven by
    ``S = sum |Q_l|_1`` through ``e^S``, and ``bound_depth_substituted``
    replaces ``e^S`` by the depth (valid for harmonic taper schedules, where
    ``S <= log L``).
    """
    Q_list = [np.atleast_2d(np.asarray(Q, dtype=float)) for Q in Q_list]
    if not Q_list:
        raise ValidationError("need at least one perturbation matrix")
    dim = Q_list[0].shape[0]
    for Q in Q_list:
        if Q.shape != (dim, dim):
            raise ValidationError("all perturbations must be square of equal size")
        if np.any(Q < 0.0):
            raise ValidationError("perturbations must be entrywise nonnegative")
    W1 = np.asarray(W1, dtype=float).reshape(-1)
    L = len(Q_list) + 1
    w1_1 = float(W1.sum())
    S = sum(l1_entrywise(Q) for Q in Q_list)

    eye = np.eye(dim)
    net = RampNetwork(w0=W0, weights=(W1.reshape(1, -1),) + tuple(eye + Q for Q in Q_list))
    summary = subnetwork_variations(net)
    red_layers = [r.sum() for r in diagonal_reduced_input_variations(net)]
    exact = math.sqrt(summary.v_bar_out * (sum(red_layers) / L))

    def bound_at(growth: float) -> float:
        out = W0 / L + (L - 1) * W0 * w1_1 * growth / L
        inc = w1_1 * growth / L + (L - 1) * growth / L
        return math.sqrt(out * inc)

    bound = bound_at(math.exp(S))
    return NearIdentityReport(
        exact_reduced=exact,
        bound=bound,
        bound_depth_substituted=bound_at(float(L)),
        S=S,
        holds=exact <= bound * (1.0 + 1e-12),
    )


# ---------------------------------------------------------------------------
# Toeplitz numeric demo
# ---------------------------------------------------------------------------

def toeplitz_demo(coeffs, dim: int) -> list[dict]:
    """Eigenvalues of a banded Toeplitz matrix next to its symbol samples.

    Purely a numeric illustration that the discrete Fourier symbol tracks the
    spectrum as the dimension grows; rows are plot-ready dicts sorted by
    eigenvalue magnitude.
    """
    coeffs = {int(k): float(c) for k, c in dict(coeffs).items()}
    if any(c < 0.0 for c in coeffs.values()):
        raise ValidationError("Toeplitz coefficients must be nonnegative")
    Q = np.zeros((dim, dim))
    for offset, c in coeffs.items():
        for j in range(dim):
            k = j - offset
            if 0 <= k < dim:
                Q[j, k] = c
    eigs = np.sort_complex(np.linalg.eigvals(Q))
    thetas = 2.0 * math.pi * np.arange(dim) / dim
    symbol = np.zeros(dim, dtype=complex)
    for offset, c in coeffs.items():
        symbol += c * np.exp(1j * offset * thetas)
    symbol = np.sort_complex(symbol)
    return [
        {
            "index": i,
            "eig_real": float(eigs[i].real),
            "eig_imag": float(eigs[i].imag),
            "symbol_real": float(symbol[i].real),
            "symbol_imag": float(symbol[i].imag),
        }
        for i in range(dim)
    ]


# ---------------------------------------------------------------------------
# family registry for sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatrixFamily:
    """A named generator of structured networks for parameter sweeps."""

    kind: str
    params: dict

    _KINDS = ("projection", "irreducible", "identity", "near_identity", "constant_Q", "toeplitz")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValidationError(f"unknown family kind {self.kind!r}; options: {self._KINDS}")

    def network(self, L: int) -> RampNetwork:
        p = self.params
        if self.kind == "projection":
            Q = projection_matrix(p["t"], p["s"])
            return build_constant_q_network(Q, p.get("W0", 1.0), p.get("W1", [1.0, 1.0]), L)
        if self.kind == "identity":
            dim = int(p.get("dim", 2))
            W1 = p.get("W1", np.full(dim, p.get("w1_norm", 1.0) / dim))
            return build_constant_q_network(np.eye(dim), p.get("W0", 1.0), W1, L)
        if self.kind in ("irreducible", "constant_Q"):
            Q = np.asarray(p["Q"], dtype=float)
            W1 = p.get("W1", np.ones(Q.shape[0]))
            return build_constant_q_network(Q, p.get("W0", 1.0), W1, L)
        if self.kind == "near_identity":
            dim = int(p.get("dim", 4))
            rng = np.random.Generator(np.random.Philox(key=int(p.get("seed", 0))))
            scale = float(p.get("scale", 1.0 / L)) / dim**2
            Qs = [rng.uniform(0.0, 2.0 * scale, size=(dim, dim)) for _ in range(L - 1)]
            W1 = p.get("W1", np.full(dim, p.get("w1_norm", 1.0) / dim))
            return RampNetwork(
                w0=p.get("W0", 1.0),
                weights=(np.asarray(W1, dtype=float).reshape(1, -1),)
                + tuple(np.eye(dim) + Q for Q in Qs),
            )
        raise ValidationError(f"family {self.kind!r} does not build networks")
