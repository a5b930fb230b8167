"""Markov path measure, path sampling, and sparse network reconstruction.

Normalizing a network's composite path weights by its variation ``V`` turns
them into a probability distribution over index paths ``(j_1 .. j_L)`` with an
inhomogeneous Markov structure: an initial law on the outermost layer and one
transition matrix per layer boundary.  Drawing ``M`` paths and keeping only
the pairwise boundary counts ``K`` yields a rational Markov measure ``K/M``
whose network realization is a sparse element of a finite cover; its distance
to the source network is what the refined approximation bound controls.

Index 0 of every layer is a reserved null state.  It carries mass only when
covering at a variation budget larger than ``V``; null paths contribute zero
to the function value.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMeasureError, ValidationError
from .network import RampNetwork, evaluate_batch, _validate_points
from .variation import VariationSummary, subnetwork_variations

__all__ = [
    "MarkovMeasure",
    "PathCounts",
    "SparseCoverElement",
    "ApproximationBounds",
    "normalize",
    "sample_paths",
    "reconstruct",
    "empirical_error",
    "refined_bound",
    "composite_bound",
    "composite_reduced_bound",
    "normalized_subnetwork_outputs",
    "enumerate_cover_elements",
]


@dataclass(frozen=True)
class MarkovMeasure:
    """Normalized path distribution of a ramp network.

    ``initial[j]`` is the law of the outermost index (slot 0 = null state);
    ``transitions[i]`` maps layer ``i+1`` to layer ``i+2`` and is row
    stochastic on reachable states, all-zero rows elsewhere.  ``scale_V``
    recovers function values: ``f(net, x) == scale_V * f(measure, x)``.
    """

    initial: np.ndarray
    transitions: tuple[np.ndarray, ...]
    scale_V: float
    null_mass: float
    dims: tuple[int, ...]
    output_clamp: bool = False

    @property
    def depth(self) -> int:
        return len(self.dims) - 1

    def marginal(self, layer: int) -> np.ndarray:
        """Law of the layer's index (null slot included), by propagation."""
        if not 1 <= layer <= self.depth:
            raise ValidationError(f"layer must be in 1..{self.depth}, got {layer}")
        m = self.initial
        for T in self.transitions[: layer - 1]:
            m = m @ T
        return m

    def path_probability(self, path) -> float:
        """Probability of one full index path (null-slot indexing)."""
        path = list(path)
        if len(path) != self.depth:
            raise ValidationError(f"path must have {self.depth} indices")
        p = self.initial[path[0]]
        for T, (j, k) in zip(self.transitions, zip(path, path[1:])):
            p *= T[j, k]
        return float(p)


@dataclass(frozen=True)
class PathCounts:
    """Aggregated counts of M sampled paths: per-node and per-boundary."""

    M: int
    seed: int
    node: tuple[np.ndarray, ...]
    pairwise: tuple[np.ndarray, ...]

    def cover_hash(self) -> str:
        """Stable identity of the induced cover element."""
        h = hashlib.sha256()
        h.update(str(self.M).encode())
        for K in self.pairwise:
            h.update(np.ascontiguousarray(K, dtype=np.int64).tobytes())
            h.update(str(K.shape).encode())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class SparseCoverElement:
    """A cover member: rational measure, its network form, and pruned widths."""

    tilde_a: MarkovMeasure
    net_tilde: RampNetwork
    active_dims: tuple[int, ...]
    counts: PathCounts

    def cover_hash(self) -> str:
        return self.counts.cover_hash()


def normalize(net: RampNetwork, budget_V: float | None = None) -> MarkovMeasure:
    """Build the normalized Markov path measure of a network.

    With ``budget_V > V`` the measure is filled out to a probability by
    assigning mass ``1 - V / budget_V`` to the null state, and function
    values rescale by the budget instead of ``V``.
    """
    summary = subnetwork_variations(net)
    V = summary.V
    if V <= 0.0:
        raise DegenerateMeasureError("network has zero variation; no path measure exists")
    scale = V if budget_V is None else float(budget_V)
    if scale < V:
        raise ValidationError(f"budget_V={scale} is below the network variation {V}")

    d1 = net.dims[1]
    initial = np.zeros(d1 + 1)
    initial[0] = 1.0 - V / scale
    initial[1:] = net.w0 * net.weights[0][0, :] * summary.v_in_node[1] / scale
    initial /= initial.sum()  # absorb rounding so sampling sees an exact law

    transitions = []
    for l in range(1, net.depth):
        W = net.weights[l]
        v_in_next = summary.v_in_node[l + 1] if l + 1 < net.depth else np.ones(net.dims[l + 1])
        v_in_here = summary.v_in_node[l]
        T = np.zeros((W.shape[0] + 1, W.shape[1] + 1))
        T[0, 0] = 1.0
        rows = v_in_here > 0.0
        T[1:, 1:][rows] = (W * v_in_next[None, :])[rows] / v_in_here[rows, None]
        # guard against accumulated rounding: reachable rows must be stochastic
        sums = T[1:, 1:][rows].sum(axis=1)
        T[1:, 1:][rows] /= sums[:, None]
        transitions.append(T)

    return MarkovMeasure(
        initial=initial,
        transitions=tuple(transitions),
        scale_V=scale,
        null_mass=float(initial[0]),
        dims=net.dims,
        output_clamp=net.output_clamp,
    )


def sample_paths(measure: MarkovMeasure, M: int, seed: int) -> PathCounts:
    """Draw M paths ancestrally and aggregate node and boundary counts.

    Counts are produced layer by layer from the exact multinomial laws of M
    independent path draws (occupancies first, then per-state transition
    splits), using a Philox counter-based generator keyed by ``seed``.
    """
    if M < 1:
        raise ValidationError(f"M must be positive, got {M}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    node = [rng.multinomial(M, measure.initial).astype(np.int64)]
    pairwise = []
    for T in measure.transitions:
        K = np.zeros(T.shape, dtype=np.int64)
        current = node[-1]
        for j in np.nonzero(current)[0]:
            K[j] = rng.multinomial(current[j], T[j])
        pairwise.append(K)
        node.append(K.sum(axis=0))
    return PathCounts(M=M, seed=seed, node=tuple(node), pairwise=tuple(pairwise))


def _prune_maps(dims: tuple[int, ...], node_counts: tuple[np.ndarray, ...]):
    """Index remap per inner layer keeping halves aligned; input layer untouched.

    Zero-count nodes drop out; each sign half is remapped independently and
    the narrower half padded with zero-weight slots so widths stay even.
    """
    maps = []
    new_dims = [dims[0]]
    L = len(dims) - 1
    for l in range(1, L):
        counts = node_counts[l - 1][1:]  # real nodes only
        half = dims[l] // 2
        keep_pos = np.nonzero(counts[:half] > 0)[0]
        keep_neg = np.nonzero(counts[half:] > 0)[0] + half
        h = max(len(keep_pos), len(keep_neg), 1)
        mapping = {}
        for i, j in enumerate(keep_pos):
            mapping[int(j)] = i
        for i, j in enumerate(keep_neg):
            mapping[int(j)] = h + i
        maps.append((mapping, h))
        new_dims.append(2 * h)
    new_dims.append(dims[L])
    return maps, tuple(new_dims)


def reconstruct(counts: PathCounts, measure: MarkovMeasure) -> SparseCoverElement:
    """Turn sampled counts into a rational Markov measure and a pruned network.

    Transition rows of zero-count states are exactly zero; inner-layer nodes
    never visited are pruned (the innermost layer keeps the identity of the
    input coordinates).  The reconstruction satisfies
    ``evaluate(net_tilde, x) == scale_V * f(tilde_a, x)``.
    """
    M = counts.M
    dims = measure.dims
    L = measure.depth

    tilde_initial = counts.node[0] / M
    tilde_transitions = []
    for l, K in enumerate(counts.pairwise):
        T = np.zeros(K.shape)
        row_counts = counts.node[l]
        rows = np.nonzero(row_counts > 0)[0]
        T[rows] = K[rows] / row_counts[rows, None]
        tilde_transitions.append(T)

    tilde = MarkovMeasure(
        initial=tilde_initial,
        transitions=tuple(tilde_transitions),
        scale_V=measure.scale_V,
        null_mass=float(tilde_initial[0]),
        dims=dims,
        output_clamp=measure.output_clamp,
    )

    maps, new_dims = _prune_maps(dims, counts.node)

    # W_1 holds the marginal weights of the surviving outer-layer nodes.
    W1 = np.zeros((1, new_dims[1]))
    for old_j, new_j in maps[0][0].items():
        W1[0, new_j] = tilde_initial[1 + old_j]
    mats = [W1]

    for l in range(1, L):
        T = tilde_transitions[l - 1][1:, 1:]
        src_map = maps[l - 1][0]
        if l + 1 < L:
            dst_map = maps[l][0]
            W = np.zeros((new_dims[l], new_dims[l + 1]))
            for old_j, new_j in src_map.items():
                for old_k, new_k in dst_map.items():
                    W[new_j, new_k] = T[old_j, old_k]
        else:
            # innermost boundary: keep all 2*d_in input slots
            W = np.zeros((new_dims[l], dims[L]))
            for old_j, new_j in src_map.items():
                W[new_j, :] = T[old_j, :]
        mats.append(W)

    net_tilde = RampNetwork(
        w0=measure.scale_V, weights=tuple(mats), output_clamp=measure.output_clamp
    )
    return SparseCoverElement(
        tilde_a=tilde, net_tilde=net_tilde, active_dims=tuple(new_dims), counts=counts
    )


def empirical_error(net: RampNetwork, element: SparseCoverElement, points) -> float:
    """Mean squared gap between the network and a cover element on points."""
    X = _validate_points(net, np.asarray(points, dtype=float))
    if X.shape[0] == 0:
        raise ValidationError("points must be nonempty")
    diff = evaluate_batch(net, X) - evaluate_batch(element.net_tilde, X)
    return float(np.mean(diff * diff))


# ---------------------------------------------------------------------------
# approximation bounds
# ---------------------------------------------------------------------------

def composite_bound(L: int, v: float, M: int) -> float:
    """The arithmetic-mean form ``(L * v / sqrt(M))**2``."""
    return (L * v) ** 2 / M


def composite_reduced_bound(L: int, v_red: float, M: int) -> float:
    """The reduced form ``(2 * L * v_red / sqrt(M))**2``."""
    return (2.0 * L * v_red) ** 2 / M


@dataclass(frozen=True)
class ApproximationBounds:
    """Refined sampling bound plus its arithmetic-mean simplifications.

    ``cross_term_factor`` records the available sqrt((M-1)/M) sharpening of
    the cross terms; it is reported but never folded into the headline values.
    """

    refined: float
    composite: float
    composite_reduced: float
    mode: str
    M: int
    cross_term_factor: float = 1.0


def normalized_subnetwork_outputs(measure: MarkovMeasure, points) -> dict[int, np.ndarray]:
    """Unit-scale subnetwork outputs ``z`` per layer for each point.

    Returns arrays of shape ``(n, d_l + 1)`` for layers ``1 .. L`` with the
    null slot fixed at zero; every entry lies in [-1, 1].
    """
    X = np.asarray(points, dtype=float)
    L = measure.depth
    n = X.shape[0]
    Z = {L: np.hstack([np.zeros((n, 1)), X, -X])}
    for l in range(L - 1, 0, -1):
        T = measure.transitions[l - 1]
        pre = Z[l + 1] @ T.T
        half = measure.dims[l] // 2
        out = np.maximum(pre, 0.0)
        out[:, half + 1:] = 0.0 - out[:, half + 1:]
        out[:, 0] = 0.0
        Z[l] = out
    return Z


def _estimated_sigma(measure: MarkovMeasure, Z: dict[int, np.ndarray]) -> list[np.ndarray]:
    """Per-node sigma: root of the mean conditional variance of the next z."""
    sigmas = []
    p = measure.initial
    vals = Z[1]
    mean = vals @ p
    second = (vals * vals) @ p
    var = np.maximum(second - mean * mean, 0.0)
    sigmas.append(np.array([math.sqrt(float(var.mean()))]))
    for l in range(1, measure.depth):
        T = measure.transitions[l - 1]
        vals = Z[l + 1]
        means = vals @ T.T
        seconds = (vals * vals) @ T.T
        var = np.maximum(seconds - means * means, 0.0)
        sigmas.append(np.sqrt(var.mean(axis=0))[1:])  # drop the null slot
    return sigmas


def refined_bound(
    net: RampNetwork,
    M: int,
    sigma_mode: str = "one",
    points=None,
    summary: VariationSummary | None = None,
) -> ApproximationBounds:
    """Evaluate the refined sampling error bound ``(V/M) * (sum of terms)**2``.

    Per-node terms are ``sqrt(V_out * V_in) * sigma``.  Modes:

    * ``"one"``      - sigma = 1 everywhere (worst case);
    * ``"estimate"`` - sigma estimated as the mean conditional variance of
      the normalized subnetwork outputs over ``points``;
    * ``"reduced"``  - sigma**2 replaced by ``4 * V_in_red / V_in``.

    The returned record also carries the two arithmetic-mean simplifications.
    """
    if summary is None:
        summary = subnetwork_variations(net)
    V = summary.V
    L = net.depth

    if sigma_mode == "one":
        total = summary.geo_sum_layer.sum()
    elif sigma_mode == "reduced":
        total = 0.0
        for l in range(L):
            out = summary.v_out_node[l]
            red = summary.v_in_red_node[l]
            total += 2.0 * np.sqrt(out * red).sum()
    elif sigma_mode == "estimate":
        if points is None:
            raise ValidationError("sigma_mode='estimate' needs evaluation points")
        measure = normalize(net)
        X = _validate_points(net, np.asarray(points, dtype=float))
        Z = normalized_subnetwork_outputs(measure, X)
        sigmas = _estimated_sigma(measure, Z)
        total = 0.0
        for l in range(L):
            geo = np.sqrt(summary.v_out_node[l] * summary.v_in_node[l])
            total += float((geo * sigmas[l]).sum())
    else:
        raise ValidationError(f"unknown sigma_mode {sigma_mode!r}")

    return ApproximationBounds(
        refined=V * total * total / M,
        composite=composite_bound(L, summary.v_composite, M),
        composite_reduced=composite_reduced_bound(L, summary.v_composite_red, M),
        mode=sigma_mode,
        M=M,
        cross_term_factor=math.sqrt((M - 1) / M) if M > 1 else 0.0,
    )


# ---------------------------------------------------------------------------
# exhaustive cover enumeration (desk scale)
# ---------------------------------------------------------------------------

def enumerate_cover_elements(
    measure: MarkovMeasure, M: int, max_elements: int = 200_000
) -> list[SparseCoverElement]:
    """Reconstruct every cover element reachable from M path draws.

    Enumerates all multisets of M full index paths (null state excluded) and
    aggregates each into counts.  Only feasible for tiny index spaces; the
    count of multisets is guarded by ``max_elements``.
    """
    from itertools import combinations_with_replacement

    real_dims = measure.dims[1:]
    D = math.prod(real_dims)
    n_multisets = math.comb(D + M - 1, M)
    if n_multisets > max_elements:
        from .errors import ResourceLimitError

        raise ResourceLimitError(
            f"cover enumeration needs {n_multisets} multisets, guard is {max_elements}"
        )

    paths = []
    for flat in range(D):
        idx = []
        rem = flat
        for d in real_dims[::-1]:
            idx.append(rem % d)
            rem //= d
        paths.append(tuple(reversed(idx)))

    elements = []
    L = measure.depth
    for multiset in combinations_with_replacement(range(D), M):
        node = [np.zeros(d + 1, dtype=np.int64) for d in real_dims]
        pairwise = [
            np.zeros((real_dims[i] + 1, real_dims[i + 1] + 1), dtype=np.int64)
            for i in range(L - 1)
        ]
        for flat in multiset:
            p = paths[flat]
            for l in range(L):
                node[l][p[l] + 1] += 1
            for l in range(L - 1):
                pairwise[l][p[l] + 1, p[l + 1] + 1] += 1
        counts = PathCounts(M=M, seed=-1, node=tuple(node), pairwise=tuple(pairwise))
        elements.append(reconstruct(counts, measure))
    return elements
