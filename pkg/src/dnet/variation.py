"""Variation calculus for ramp networks.

The variation ``V`` of a network is the entrywise l1 norm of the product
``w0 * W_1 W_2 .. W_L``: the total path mass.  Each node ``j`` on layer
``l < L`` splits that mass into an outgoing part ``V_out[j]`` (path mass from
the output down to the node) and an incoming part ``V_in[j]`` (path mass from
the node down to the inputs), with ``sum_j V_out[j] * V_in[j] == V`` on every
layer.  Layer averages of these quantities give the average variation
``V_bar`` and the composite ``v = V_bar * sqrt(V)`` that drives all the
approximation and entropy bounds, and function-preserving node rescalings
reshape the per-node split without touching ``V``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .network import RampNetwork

__all__ = [
    "VariationSummary",
    "full_variation",
    "subnetwork_variations",
    "reduced_input_variations",
    "diagonal_reduced_input_variations",
    "strongest_input_links",
    "average_variation",
    "rescale_canonical",
    "rescale_per_layer",
    "rescale_global",
    "reduced_balance_residual",
    "l1_entrywise",
    "l1_induced_inf",
    "spectral_norm",
    "group_norm_2_1",
    "check_product_norm_inequalities",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# core quantities
# ---------------------------------------------------------------------------

def _prefix_vectors(net: RampNetwork) -> list[np.ndarray]:
    """Outgoing path mass per node: p[l] = w0 * W_1 .. W_l, for l = 0 .. L."""
    vecs = [np.array([net.w0])]
    for W in net.weights:
        vecs.append(vecs[-1] @ W)
    return vecs


def _suffix_vectors(net: RampNetwork) -> list[np.ndarray]:
    """Incoming path mass per node: s[l] = W_{l+1} .. W_L @ 1, for l = 0 .. L."""
    vecs = [np.ones(net.dims[-1])]
    for W in net.weights[::-1]:
        vecs.append(W @ vecs[-1])
    return vecs[::-1]


def full_variation(net: RampNetwork) -> float:
    """Total path mass, via sequential matrix-vector products."""
    return float(_prefix_vectors(net)[-1].sum())


def strongest_input_links(net: RampNetwork) -> list[np.ndarray]:
    """For each node, the inner-layer index carrying the largest weighted mass.

    Ties resolve to the lowest index.  Entry ``l`` covers the nodes of layer
    ``l`` (layer 0 holds the single output node).
    """
    suffix = _suffix_vectors(net)
    return [np.argmax(W * suffix[l + 1][None, :], axis=1) for l, W in enumerate(net.weights)]


def _reduced_from_suffix(net: RampNetwork, suffix: list[np.ndarray]) -> list[np.ndarray]:
    reduced = []
    for l, W in enumerate(net.weights):
        terms = W * suffix[l + 1][None, :]
        reduced.append(terms.sum(axis=1) - terms.max(axis=1))
    return reduced


def reduced_input_variations(net: RampNetwork) -> list[np.ndarray]:
    """Per-node incoming mass with the single largest weighted link removed."""
    return _reduced_from_suffix(net, _suffix_vectors(net))


def diagonal_reduced_input_variations(net: RampNetwork) -> list[np.ndarray]:
    """Per-node incoming mass with the diagonal link removed instead of the max.

    Matches the hollow-matrix reduction used for (near-)identity weight
    families: the output row (layer 0) is left unreduced, and every inner
    matrix must be square so its diagonal is defined.
    """
    suffix = _suffix_vectors(net)
    out: list[np.ndarray] = [net.weights[0] @ suffix[1]]
    for l in range(1, net.depth):
        W = net.weights[l]
        if W.shape[0] != W.shape[1]:
            raise ValidationError(
                f"diagonal reduction needs square inner matrices, weights[{l}] is {W.shape}"
            )
        out.append(W @ suffix[l + 1] - np.diagonal(W) * suffix[l + 1])
    return out


@dataclass(frozen=True)
class VariationSummary:
    """Every variation quantity of one network, computed in a single pass."""

    V: float
    v_out_node: tuple[np.ndarray, ...]
    v_in_node: tuple[np.ndarray, ...]
    v_in_red_node: tuple[np.ndarray, ...]
    v_out_layer: np.ndarray
    v_in_layer: np.ndarray
    v_in_red_layer: np.ndarray
    geo_sum_layer: np.ndarray
    v_bar: float
    v_bar_red: float
    v_composite: float
    v_composite_red: float

    @property
    def depth(self) -> int:
        return len(self.v_out_node)

    @property
    def v_bar_out(self) -> float:
        return float(self.v_out_layer.mean())

    @property
    def v_bar_in(self) -> float:
        return float(self.v_in_layer.mean())

    @property
    def v_bar_in_red(self) -> float:
        return float(self.v_in_red_layer.mean())

    def to_dict(self) -> dict:
        return {
            "V": self.V,
            "v_out_node": [v.tolist() for v in self.v_out_node],
            "v_in_node": [v.tolist() for v in self.v_in_node],
            "v_in_red_node": [v.tolist() for v in self.v_in_red_node],
            "v_out_layer": self.v_out_layer.tolist(),
            "v_in_layer": self.v_in_layer.tolist(),
            "v_in_red_layer": self.v_in_red_layer.tolist(),
            "geo_sum_layer": self.geo_sum_layer.tolist(),
            "v_bar": self.v_bar,
            "v_bar_red": self.v_bar_red,
            "v_composite": self.v_composite,
            "v_composite_red": self.v_composite_red,
        }


def subnetwork_variations(net: RampNetwork) -> VariationSummary:
    """Compute all node, layer, and averaged variation quantities.

    Outgoing masses come from left-to-right prefix products, incoming masses
    from right-to-left suffix products, so cost is a handful of mat-vecs.
    """
    prefix = _prefix_vectors(net)
    suffix = _suffix_vectors(net)
    L = net.depth
    V = float(prefix[-1].sum())

    v_out_node = tuple(prefix[l] for l in range(L))
    v_in_node = tuple(suffix[l] for l in range(L))
    v_in_red_node = tuple(_reduced_from_suffix(net, suffix))

    v_out_layer = np.array([v.sum() for v in v_out_node])
    v_in_layer = np.array([v.sum() for v in v_in_node])
    v_in_red_layer = np.array([v.sum() for v in v_in_red_node])
    geo_sum_layer = np.array(
        [np.sqrt(v_out_node[l] * v_in_node[l]).sum() for l in range(L)]
    )

    v_bar = float((v_out_layer + v_in_layer).mean() / 2.0)
    v_bar_red = float((v_out_layer + v_in_red_layer).mean() / 2.0)
    sqrt_v = math.sqrt(V)
    return VariationSummary(
        V=V,
        v_out_node=v_out_node,
        v_in_node=v_in_node,
        v_in_red_node=v_in_red_node,
        v_out_layer=v_out_layer,
        v_in_layer=v_in_layer,
        v_in_red_layer=v_in_red_layer,
        geo_sum_layer=geo_sum_layer,
        v_bar=v_bar,
        v_bar_red=v_bar_red,
        v_composite=v_bar * sqrt_v,
        v_composite_red=v_bar_red * sqrt_v,
    )


def average_variation(summary: VariationSummary, reduced: bool = False) -> tuple[float, float]:
    """Return ``(V_bar, v)`` where ``v = V_bar * sqrt(V)``."""
    if reduced:
        return summary.v_bar_red, summary.v_composite_red
    return summary.v_bar, summary.v_composite


# ---------------------------------------------------------------------------
# function-preserving rescalings
# ---------------------------------------------------------------------------

def _apply_node_scalings(net: RampNetwork, scalings: list[np.ndarray]) -> RampNetwork:
    """Scale node ``j`` of layer ``l`` by ``scalings[l][j]``.

    Input links of the node are multiplied by the factor and output links
    divided by it, so the composite path weights (hence the function and
    ``V``) are untouched.  ``scalings`` covers layers 0 .. L-1.
    """
    new_w0 = net.w0 / scalings[0][0]
    mats = []
    for l, W in enumerate(net.weights, start=1):
        W = W * scalings[l - 1][:, None]
        if l < net.depth:
            W = W / scalings[l][None, :]
        mats.append(W)
    return RampNetwork(w0=new_w0, weights=tuple(mats), output_clamp=net.output_clamp)


def rescale_canonical(net: RampNetwork, reduced: bool = False) -> RampNetwork:
    """Rescale each node to equalize its outgoing and incoming mass.

    Node factors are ``sqrt(V_out / V_in)`` (or ``sqrt(V_out / V_in_red)`` in
    reduced mode), applied layer by layer from the output inward with the
    variations recomputed after each layer.  Nodes with zero throughput keep
    factor 1; an all-zero network comes back unchanged.  The rescaled network
    attains the layer sums of per-node geometric means as its arithmetic
    average variation.
    """
    cur = net
    for layer in range(net.depth):
        prefix = _prefix_vectors(cur)
        suffix = _suffix_vectors(cur)
        out = prefix[layer]
        target = (
            _reduced_from_suffix(cur, suffix)[layer] if reduced else suffix[layer]
        )
        factors = np.ones_like(out)
        mask = (out > 0.0) & (target > 0.0)
        factors[mask] = np.sqrt(out[mask] / target[mask])
        scalings = [np.ones(cur.dims[l]) for l in range(cur.depth)]
        scalings[layer] = factors
        cur = _apply_node_scalings(cur, scalings)
    return cur


def rescale_per_layer(net: RampNetwork) -> RampNetwork:
    """Apply one common factor ``sqrt(V_out_l / V_in_l)`` per layer."""
    summary = subnetwork_variations(net)
    scalings = []
    for l in range(net.depth):
        out_l = summary.v_out_layer[l]
        in_l = summary.v_in_layer[l]
        if out_l > 0.0 and in_l > 0.0:
            c = math.sqrt(out_l / in_l)
        else:
            log.warning("layer %d has zero mass on one side; leaving it unscaled", l)
            c = 1.0
        scalings.append(np.full(net.dims[l], c))
    return _apply_node_scalings(net, scalings)


def rescale_global(net: RampNetwork) -> RampNetwork:
    """Apply one network-wide factor ``sqrt(V_out_total / V_in_total)``."""
    summary = subnetwork_variations(net)
    out_total = summary.v_out_layer.sum()
    in_total = summary.v_in_layer.sum()
    if out_total > 0.0 and in_total > 0.0:
        c = math.sqrt(out_total / in_total)
    else:
        log.warning("network has zero mass on one side; returning it unscaled")
        c = 1.0
    scalings = [np.full(net.dims[l], c) for l in range(net.depth)]
    return _apply_node_scalings(net, scalings)


def reduced_balance_residual(net: RampNetwork) -> float:
    """Largest relative gap between V_out and reduced V_in over active nodes."""
    prefix = _prefix_vectors(net)
    reduced = reduced_input_variations(net)
    worst = 0.0
    for l in range(net.depth):
        out = prefix[l]
        red = reduced[l]
        mask = (out > 0.0) & (red > 0.0)
        if mask.any():
            gap = np.abs(out[mask] - red[mask]) / np.maximum(out[mask], red[mask])
            worst = max(worst, float(gap.max()))
    return worst


# ---------------------------------------------------------------------------
# matrix norms and the product-norm inequality suite
# ---------------------------------------------------------------------------

def l1_entrywise(A) -> float:
    """Sum of absolute entries."""
    return float(np.abs(np.asarray(A, dtype=float)).sum())


def l1_induced_inf(A) -> float:
    """Maximum absolute row sum (the norm induced by l1 -> l-infinity)."""
    arr = np.atleast_2d(np.asarray(A, dtype=float))
    return float(np.abs(arr).sum(axis=1).max())


def group_norm_2_1(A) -> float:
    """Sum over rows of the row-wise Euclidean norms."""
    arr = np.atleast_2d(np.asarray(A, dtype=float))
    return float(np.sqrt((arr * arr).sum(axis=1)).sum())


def spectral_norm(A, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value, via power iteration on the Gram matrix."""
    arr = np.atleast_2d(np.asarray(A, dtype=float))
    if arr.shape[0] > arr.shape[1]:
        arr = arr.T
    gram = arr @ arr.T
    n = gram.shape[0]
    if not gram.any():
        return 0.0
    v = np.ones(n) / math.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        new_lam = float(v @ gram @ v)
        if abs(new_lam - lam) <= tol * max(1.0, new_lam):
            lam = new_lam
            break
        lam = new_lam
    return math.sqrt(max(lam, 0.0))


def check_product_norm_inequalities(a, mats, rtol: float = 1e-9) -> dict[str, dict]:
    """Evaluate the five product-norm inequalities on one matrix chain.

    ``a`` is a row vector of length ``mats[0].shape[0]``.  Each entry of the
    result carries lhs, rhs, and a ``holds`` flag at relative tolerance
    ``rtol``.  The spectral bound on the chain itself controls the maximum
    row sum; the entrywise-l1 variant carries the extra row-count factor.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in mats]
    product = mats[0]
    for m in mats[1:]:
        product = product @ m
    chain_row = a @ product

    d0 = product.shape[0]
    dm = product.shape[1]
    sig = [spectral_norm(m) for m in mats]
    sig_prod = math.prod(sig)

    checks = {
        "vector_chain_induced": (l1_entrywise(chain_row), l1_entrywise(a) * l1_induced_inf(product)),
        "vector_chain_induced_product": (
            l1_entrywise(chain_row),
            l1_entrywise(a) * math.prod(l1_induced_inf(m) for m in mats),
        ),
        "chain_rowsum_spectral": (l1_induced_inf(product), math.sqrt(dm) * sig_prod),
        "chain_l1_submultiplicative": (
            l1_entrywise(product),
            math.prod(l1_entrywise(m) for m in mats),
        ),
        "chain_l1_spectral": (l1_entrywise(product), d0 * math.sqrt(dm) * sig_prod),
    }
    return {
        name: {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs * (1.0 + rtol) + 1e-12}
        for name, (lhs, rhs) in checks.items()
    }
