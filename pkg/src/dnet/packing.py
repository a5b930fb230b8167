"""Minimax lower-bound construction: lattices, codes, and sinusoidal packings.

The packing set consists of functions ``f_a = (B/T) * sum_k a_k phi_k`` where
``phi_k(x) = sqrt(2) * sin(2 pi <theta_k, x>)`` ranges over integer frequency
vectors of l1 norm at most ``A`` (one representative per ``{theta, -theta}``
pair, since opposite frequencies give collinear ridges), and the binary
selector vectors ``a`` form a constant-weight code.  The ``sqrt(2)`` factor
normalizes each ridge to unit norm under the uniform law on the cube, which
makes the pairwise distance identity ``|f_a - f_a'|^2 = B^2 |a - a'|^2 / T^2``
exact.  Everything emitted here is certified by explicit checks: pairwise
Hamming distances, Gram deviations, and quadrature distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ResourceLimitError, ValidationError

__all__ = [
    "LatticeBall",
    "lattice_count",
    "enumerate_lattice",
    "ConstantWeightCode",
    "build_code",
    "verify_code",
    "PackingSet",
    "build_packing",
    "packing_function_values",
    "verify_orthonormality",
    "OrthonormalityReport",
    "packing_certificates",
    "PackingCertificates",
    "lower_bound_rate",
    "LowerBoundReport",
]


# ---------------------------------------------------------------------------
# lattice points in an l1 ball
# ---------------------------------------------------------------------------

def lattice_count(d_in: int, A: int) -> int:
    """Exact number of integer points with ``|theta|_1 <= A`` in d_in dims."""
    if d_in < 1 or A < 0:
        raise ValidationError(f"need d_in >= 1 and A >= 0, got d_in={d_in}, A={A}")
    return sum(
        2**k * math.comb(d_in, k) * math.comb(A, k)
        for k in range(min(d_in, A) + 1)
    )


def _lattice_count_alt(d_in: int, A: int) -> int:
    """Equivalent binomial form, used as a cross-check."""
    return sum(
        math.comb(A, k) * math.comb(d_in + A - k, A)
        for k in range(min(d_in, A) + 1)
    )


def enumerate_lattice(d_in: int, A: int, max_points: int = 2_000_000) -> np.ndarray:
    """All integer points of the l1 ball, in deterministic lexicographic order."""
    n = lattice_count(d_in, A)
    if n > max_points:
        raise ResourceLimitError(f"lattice has {n} points, guard is {max_points}")
    points: list[tuple[int, ...]] = []

    def rec(prefix: list[int], budget: int, remaining: int):
        if remaining == 0:
            points.append(tuple(prefix))
            return
        for c in range(-budget, budget + 1):
            prefix.append(c)
            rec(prefix, budget - abs(c), remaining - 1)
            prefix.pop()

    rec([], A, d_in)
    return np.array(points, dtype=int)


@dataclass(frozen=True)
class LatticeBall:
    """Enumerated l1 lattice ball with its exact cardinality."""

    d_in: int
    A: int
    points: np.ndarray
    N: int

    @classmethod
    def build(cls, d_in: int, A: int, max_points: int = 2_000_000) -> "LatticeBall":
        pts = enumerate_lattice(d_in, A, max_points=max_points)
        n = lattice_count(d_in, A)
        if len(pts) != n:
            raise ValidationError(
                f"enumeration found {len(pts)} points but the formula gives {n}"
            )
        return cls(d_in=d_in, A=A, points=pts, N=n)


# ---------------------------------------------------------------------------
# constant-weight binary codes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantWeightCode:
    """Binary codewords of fixed weight with a guaranteed minimum distance."""

    n_len: int
    weight: int
    codewords: tuple[int, ...]  # bitmasks
    min_distance: int
    required_distance: int
    target: int
    target_met: bool
    relaxed: bool


def _hamming(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def build_code(
    n_len: int,
    T: int,
    seed: int,
    relaxed: bool = False,
    max_candidates: int = 200_000,
) -> ConstantWeightCode:
    """Greedy seeded construction of a weight-T code with distance >= ceil(T/5).

    Candidates are weight-T vectors visited in seeded random order; one is
    accepted when it keeps the minimum pairwise distance, and the scan stops
    at the existence target ``ceil(sqrt(C(n_len, T)))`` or when candidates
    run out.  Falling short is reported honestly via ``target_met`` (the
    existence guarantee is probabilistic, the greedy scan may miss it).
    The regime hypothesis ``n_len >= 10`` and ``T <= n_len / 10`` can be
    waived with ``relaxed``.
    """
    if not 1 <= T <= n_len:
        raise ValidationError(f"need 1 <= T <= n_len, got T={T}, n_len={n_len}")
    if not relaxed and (n_len < 10 or T > n_len / 10):
        raise ValidationError(
            f"outside the guaranteed regime (n_len >= 10, T <= n_len/10): "
            f"n_len={n_len}, T={T}; pass relaxed=True to build anyway"
        )
    required = math.ceil(T / 5)
    target = math.isqrt(math.comb(n_len, T) - 1) + 1  # ceil of the square root
    rng = np.random.Generator(np.random.Philox(key=seed))

    total = math.comb(n_len, T)
    accepted: list[int] = []
    if total <= max_candidates:
        candidates = []
        for combo in combinations(range(n_len), T):
            word = 0
            for pos in combo:
                word |= 1 << pos
            candidates.append(word)
        order = rng.permutation(len(candidates))
        stream = (candidates[i] for i in order)
    else:
        def _sampled():
            seen = set()
            for _ in range(max_candidates):
                positions = rng.choice(n_len, size=T, replace=False)
                word = 0
                for pos in positions:
                    word |= 1 << int(pos)
                if word not in seen:
                    seen.add(word)
                    yield word
        stream = _sampled()

    for word in stream:
        if all(_hamming(word, other) >= required for other in accepted):
            accepted.append(word)
            if len(accepted) >= target:
                break

    dists = [
        _hamming(a, b) for a, b in combinations(accepted, 2)
    ] or [0]
    return ConstantWeightCode(
        n_len=n_len,
        weight=T,
        codewords=tuple(accepted),
        min_distance=min(dists) if len(accepted) > 1 else 0,
        required_distance=required,
        target=target,
        target_met=len(accepted) >= target,
        relaxed=relaxed,
    )


def verify_code(code: ConstantWeightCode) -> bool:
    """Independent re-check of weights and pairwise distances."""
    for word in code.codewords:
        if word.bit_count() != code.weight:
            return False
        if word < 0 or word >> code.n_len:
            return False
    if len(code.codewords) > 1:
        worst = min(_hamming(a, b) for a, b in combinations(code.codewords, 2))
        if worst < code.required_distance or worst != code.min_distance:
            return False
    return True


# ---------------------------------------------------------------------------
# sinusoidal ridge packing
# ---------------------------------------------------------------------------

def _dedupe_sign_pairs(points: np.ndarray) -> np.ndarray:
    """Keep one frequency per ``{theta, -theta}`` pair: first nonzero > 0."""
    keep = []
    for theta in points:
        nz = theta[theta != 0]
        if nz.size and nz[0] > 0:
            keep.append(theta)
    return np.array(keep, dtype=int)


@dataclass(frozen=True)
class PackingSet:
    """Separated family of sparse sinusoidal ridge combinations."""

    d_in: int
    A: int
    B: float
    T: int
    frequencies: np.ndarray  # (N, d_in) sign-deduplicated, zero excluded
    code: ConstantWeightCode
    lattice_N: int  # full lattice count, as used in the rate formulas

    @property
    def n_functions(self) -> int:
        return len(self.code.codewords)

    def selector(self, index: int) -> np.ndarray:
        word = self.code.codewords[index]
        return np.array(
            [(word >> k) & 1 for k in range(len(self.frequencies))], dtype=float
        )


def _quadrature_grid(d_in: int, max_freq: int) -> np.ndarray:
    """Periodic uniform grid exact for products of the involved sinusoids.

    4*max_freq + 1 equispaced nodes per axis on [-1, 1) integrate all
    harmonics up to twice the maximum frequency without error.
    """
    n = 4 * max_freq + 1
    axis = -1.0 + 2.0 * np.arange(n) / n
    grids = np.meshgrid(*([axis] * d_in), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def packing_function_values(ps: PackingSet, index: int, X: np.ndarray) -> np.ndarray:
    """Values of the packing function for one codeword on points ``X``."""
    sel = ps.selector(index).astype(bool)
    phases = 2.0 * math.pi * (np.asarray(X, dtype=float) @ ps.frequencies[sel].T)
    return (ps.B / ps.T) * (math.sqrt(2.0) * np.sin(phases)).sum(axis=1)


@dataclass(frozen=True)
class OrthonormalityReport:
    max_deviation: float
    collinear_pairs: tuple[tuple[int, int], ...]
    max_quadrature_gap: float


def verify_orthonormality(
    frequencies, quadrature_points_per_axis: int | None = None
) -> OrthonormalityReport:
    """Gram check for the normalized ridges ``sqrt(2) sin(2 pi <theta, x>)``.

    Inner products are taken under the uniform law on the cube, both by exact
    periodic quadrature and by the closed form (+/-1 for equal/opposite
    frequencies, 0 otherwise).  ``max_deviation`` is the largest |Gram -
    identity| entry over non-collinear pairs; opposite-sign pairs (inner
    product -1) are flagged instead of counted.
    """
    freqs = np.atleast_2d(np.asarray(frequencies, dtype=int))
    n, d = freqs.shape
    max_freq = int(np.abs(freqs).max()) if freqs.size else 1
    nodes = quadrature_points_per_axis or (4 * max_freq + 1)
    axis = -1.0 + 2.0 * np.arange(nodes) / nodes
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    X = np.stack([g.reshape(-1) for g in grids], axis=1)

    vals = math.sqrt(2.0) * np.sin(2.0 * math.pi * (X @ freqs.T))
    gram = vals.T @ vals / X.shape[0]

    closed = np.zeros((n, n))
    collinear = []
    for i in range(n):
        for j in range(n):
            if np.array_equal(freqs[i], freqs[j]):
                closed[i, j] = 1.0
            elif np.array_equal(freqs[i], -freqs[j]):
                closed[i, j] = -1.0
                if i < j:
                    collinear.append((i, j))

    mask = closed > -0.5  # exclude opposite-sign pairs from the deviation
    deviation = np.abs(gram - np.eye(n))[mask].max() if n else 0.0
    quad_gap = np.abs(gram - closed).max() if n else 0.0
    return OrthonormalityReport(
        max_deviation=float(deviation),
        collinear_pairs=tuple(collinear),
        max_quadrature_gap=float(quad_gap),
    )


def build_packing(
    d_in: int, A: int, B: float, T: int, seed: int, relaxed: bool = False
) -> PackingSet:
    """Assemble the packing: lattice, sign deduplication, code, functions."""
    if B <= 0.0 or T < 1:
        raise ValidationError(f"need B > 0 and T >= 1, got B={B}, T={T}")
    ball = LatticeBall.build(d_in, A)
    freqs = _dedupe_sign_pairs(ball.points)
    if len(freqs) < T:
        raise ValidationError(
            f"only {len(freqs)} usable frequencies for weight T={T}"
        )
    code = build_code(len(freqs), T, seed, relaxed=relaxed)
    return PackingSet(
        d_in=d_in,
        A=A,
        B=float(B),
        T=T,
        frequencies=freqs,
        code=code,
        lattice_N=ball.N,
    )


@dataclass(frozen=True)
class PackingCertificates:
    lattice_points: int
    nonzero_frequencies: int
    selected_frequencies: int
    n_functions: int
    code_valid: bool
    min_distance_sq_closed: float
    min_distance_sq_quadrature: float
    max_pair_mismatch: float
    separation_threshold: float
    gram_deviation: float
    variation_certificate_max: float
    variation_limit: float

    @property
    def all_hold(self) -> bool:
        return (
            self.code_valid
            and self.min_distance_sq_closed >= self.separation_threshold - 1e-12
            and self.min_distance_sq_quadrature >= self.separation_threshold - 1e-8
            and self.max_pair_mismatch <= 1e-8
            and self.gram_deviation <= 1e-8
            and self.variation_certificate_max <= self.variation_limit + 1e-12
        )

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {
            "all_hold": self.all_hold
        }


def packing_certificates(ps: PackingSet) -> PackingCertificates:
    """Explicit pairwise certificates for a packing set.

    Pairwise squared distances are computed two ways: from Hamming distances
    through the orthonormal expansion, and by exact quadrature on the cube.
    The variation certificate is ``(B/T) * sum_k a_k |theta_k|_1^2`` per
    function, bounded by ``B * A^2``.
    """
    ortho = verify_orthonormality(ps.frequencies)
    X = _quadrature_grid(ps.d_in, int(np.abs(ps.frequencies).max()))
    n_funcs = ps.n_functions

    vals = np.stack([packing_function_values(ps, i, X) for i in range(n_funcs)])
    closed, quad, mismatch = [], [], 0.0
    for i in range(n_funcs):
        for j in range(i + 1, n_funcs):
            d_h = _hamming(ps.code.codewords[i], ps.code.codewords[j])
            c = ps.B**2 * d_h / ps.T**2
            q = float(np.mean((vals[i] - vals[j]) ** 2))
            closed.append(c)
            quad.append(q)
            mismatch = max(mismatch, abs(c - q))

    theta_l1_sq = np.abs(ps.frequencies).sum(axis=1).astype(float) ** 2
    var_cert = max(
        float(ps.B / ps.T * (ps.selector(i) * theta_l1_sq).sum())
        for i in range(n_funcs)
    )
    return PackingCertificates(
        lattice_points=ps.lattice_N,
        nonzero_frequencies=ps.lattice_N - 1,
        selected_frequencies=len(ps.frequencies),
        n_functions=n_funcs,
        code_valid=verify_code(ps.code),
        min_distance_sq_closed=min(closed) if closed else 0.0,
        min_distance_sq_quadrature=min(quad) if quad else 0.0,
        max_pair_mismatch=mismatch,
        separation_threshold=ps.B**2 / (5.0 * ps.T),
        gram_deviation=ortho.max_deviation,
        variation_certificate_max=var_cert,
        variation_limit=ps.B * ps.A**2,
    )


# ---------------------------------------------------------------------------
# the lower-bound rate calculator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowerBoundReport:
    A: int
    epsilon_sq: float
    minimax_rate: float
    T: float
    kl_budget: float
    feasible: bool
    lower_exponent: float = 0.5
    upper_exponent: float = 1.0 / 3.0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def lower_bound_rate(
    v: float, B: float, sigma2: float, d_in: int, n: int
) -> LowerBoundReport:
    """Minimax lower-bound quantities with all universal constants set to 1.

    Solves the packing-vs-information trade for the separation
    ``epsilon_n^2 = sqrt(sigma^2 B^(3/2) sqrt(v) log(sqrt(B/v) d_in + 1) / n)``
    at sparsity A = ceil(sqrt(v/B)), reports the induced codeword weight
    ``T = B^2 / (5 epsilon_n^2)`` and the per-sample information budget
    ``5 n epsilon^2 / (2 sigma^2)``, and flags whether the dimension is large
    enough for the clean packing-count regime.  The rate exponent 1/2 sits
    against the 1/3 of the two-layer upper rate.
    """
    if min(v, B, sigma2) <= 0.0 or n < 1 or d_in < 1:
        raise ValidationError("v, B, sigma2 must be positive; n, d_in >= 1")
    A = math.ceil(math.sqrt(v / B))
    eps_sq = math.sqrt(
        sigma2 * B**1.5 * math.sqrt(v) * math.log(math.sqrt(B / v) * d_in + 1.0) / n
    )
    rate = math.sqrt(sigma2) * v**0.25 * math.sqrt(
        math.log(d_in / math.sqrt(v) + 1.0) / n
    )
    a_real = math.sqrt(v / B)
    threshold = (
        a_real
        * (n / sigma2) ** (1.0 / a_real)
        * B ** (2.0 / a_real)
        * math.log(d_in / a_real + 1.0) ** (-1.0 / a_real)
        - a_real
    )
    return LowerBoundReport(
        A=A,
        epsilon_sq=eps_sq,
        minimax_rate=rate,
        T=B**2 / (5.0 * eps_sq),
        kl_budget=5.0 * n * eps_sq / (2.0 * sigma2),
        feasible=d_in > threshold,
    )
