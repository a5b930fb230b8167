"""Deep ramp networks with sign-doubled inputs and nonnegative weights.

A network of depth ``L`` is a chain of weight matrices ``W_1 .. W_L`` plus a
scalar output weight ``w0``.  Layer 0 is the single output unit; layer ``L``
holds the sign-doubled input coordinates ``(x, -x)``.  Every weight is
nonnegative: negative contributions are expressed by selecting units from the
second half of a layer, whose activation is minus the positive part.  On each
intermediate layer the first half of the units applies ``max(z, 0)`` and the
second half applies ``-max(z, 0)``, so intermediate widths are even.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ResourceLimitError, ValidationError

__all__ = [
    "RampNetwork",
    "sign_double",
    "ramp_vector",
    "evaluate",
    "evaluate_batch",
    "evaluate_unravelled",
    "load_network",
    "save_network",
]


def _as_weight_matrix(w, index: int) -> np.ndarray:
    """Coerce one layer's weights to a read-only float matrix, validating sign."""
    arr = np.array(w, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"weights[{index}] must be a matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"weights[{index}] contains non-finite entries")
    # Strict nonnegativity: a negative entry is a caller error under the
    # sign-doubling convention, not numerical noise.
    if np.any(arr < 0.0):
        raise ValidationError(f"weights[{index}] contains negative entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RampNetwork:
    """Immutable layered network.

    ``weights[i]`` connects layer ``i`` (closer to the output) to layer
    ``i + 1`` and has shape ``dims[i] x dims[i+1]``.  Required structure:

    * ``dims[0] == 1`` (a single output unit),
    * every intermediate dimension is even (positive/negative unit halves),
    * ``dims[-1] == 2 * d_in`` (sign-doubled input coordinates).

    ``output_clamp`` applies ``sgn(z) * min(|z|, 1)`` to the inner sum before
    the multiplication by ``w0``.
    """

    w0: float
    weights: tuple[np.ndarray, ...]
    output_clamp: bool = False

    def __post_init__(self):
        if not math.isfinite(self.w0) or self.w0 < 0.0:
            raise ValidationError(f"w0 must be a finite nonnegative scalar, got {self.w0}")
        mats = tuple(_as_weight_matrix(w, i) for i, w in enumerate(self.weights))
        if len(mats) < 2:
            raise ValidationError("a ramp network needs at least two weight matrices")
        if mats[0].shape[0] != 1:
            raise ValidationError(f"W_1 must have a single output row, got {mats[0].shape[0]}")
        for i in range(len(mats) - 1):
            if mats[i].shape[1] != mats[i + 1].shape[0]:
                raise ValidationError(
                    f"shape mismatch between weights[{i}] {mats[i].shape} "
                    f"and weights[{i + 1}] {mats[i + 1].shape}"
                )
        for i in range(len(mats)):
            d = mats[i].shape[1]
            if d < 2 or d % 2 != 0:
                raise ValidationError(f"layer {i + 1} dimension must be even and >= 2, got {d}")
        object.__setattr__(self, "w0", float(self.w0))
        object.__setattr__(self, "weights", mats)

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> tuple[int, ...]:
        """Layer dimensions ``(d_0, d_1, .., d_L)`` with ``d_0 == 1``."""
        return (1,) + tuple(w.shape[1] for w in self.weights)

    @property
    def d_in(self) -> int:
        return self.dims[-1] // 2

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "dims": list(self.dims),
            "w0": self.w0,
            "weights": [w.tolist() for w in self.weights],
            "clamp": self.output_clamp,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RampNetwork":
        for key in ("depth", "dims", "w0", "weights"):
            if key not in payload:
                raise ValidationError(f"network spec missing field '{key}'")
        net = cls(
            w0=payload["w0"],
            weights=tuple(np.array(w, dtype=float) for w in payload["weights"]),
            output_clamp=bool(payload.get("clamp", False)),
        )
        if payload["depth"] != net.depth:
            raise ValidationError(
                f"field 'depth'={payload['depth']} disagrees with {net.depth} weight matrices"
            )
        if list(payload["dims"]) != list(net.dims):
            raise ValidationError(
                f"field 'dims'={payload['dims']} disagrees with weight shapes {list(net.dims)}"
            )
        return net


def sign_double(x, d_in: int | None = None) -> np.ndarray:
    """Return ``(x_1 .. x_d, -x_1 .. -x_d)`` for a point of the unit cube."""
    vec = np.asarray(x, dtype=float).reshape(-1)
    if d_in is not None and vec.size != d_in:
        raise ValidationError(f"expected {d_in} input coordinates, got {vec.size}")
    if vec.size == 0:
        raise ValidationError("input point must have at least one coordinate")
    if np.any(np.abs(vec) > 1.0):
        raise ValidationError("input coordinates must lie in [-1, 1]")
    return np.concatenate([vec, -vec])


def ramp_vector(z) -> np.ndarray:
    """Apply the split ramp: positive part on the first half, minus it on the second."""
    vec = np.asarray(z, dtype=float).reshape(-1)
    if vec.size % 2 != 0:
        raise ValidationError(f"ramp input length must be even, got {vec.size}")
    m = vec.size // 2
    out = np.maximum(vec, 0.0)
    out[m:] = 0.0 - out[m:]
    return out


def _ramp_rows(Z: np.ndarray) -> np.ndarray:
    """Row-wise split ramp for a batch array of shape (n, 2m)."""
    m = Z.shape[1] // 2
    out = np.maximum(Z, 0.0)
    out[:, m:] = 0.0 - out[:, m:]
    return out


def _validate_points(net: RampNetwork, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.d_in:
        raise ValidationError(
            f"points must have shape (n, {net.d_in}), got {X.shape}"
        )
    if np.any(np.abs(X) > 1.0):
        raise ValidationError("input coordinates must lie in [-1, 1]")
    return X


def evaluate_batch(net: RampNetwork, X) -> np.ndarray:
    """Evaluate the network on rows of ``X`` (shape ``(n, d_in)``)."""
    X = _validate_points(net, X)
    H = np.hstack([X, -X])
    for W in net.weights[:0:-1]:  # W_L, .., W_2
        H = _ramp_rows(H @ W.T)
    out = (H @ net.weights[0].T)[:, 0]
    if net.output_clamp:
        out = np.sign(out) * np.minimum(np.abs(out), 1.0)
    return net.w0 * out


def evaluate(net: RampNetwork, x) -> float:
    """Evaluate the network at a single input point."""
    vec = np.asarray(x, dtype=float).reshape(1, -1)
    return float(evaluate_batch(net, vec)[0])


def evaluate_unravelled(net: RampNetwork, x, max_paths: int = 1_000_000) -> float:
    """Evaluate by explicit enumeration of the unravelled path tree.

    Pushes every weight down its path and re-applies the ramp at each tree
    node, so agreement with :func:`evaluate` exercises the homogeneity
    ``w * ramp(z) == ramp(w * z)`` once per node.  Exponential in depth;
    guarded by ``max_paths``.
    """
    dims = net.dims
    n_paths = math.prod(dims[1:])
    if n_paths > max_paths:
        raise ResourceLimitError(
            f"unravelled evaluation needs {n_paths} paths, guard is {max_paths}"
        )
    xt = sign_double(x, net.d_in)
    L = net.depth

    def node(level: int, j: int, acc: float) -> float:
        if level == L:
            return acc * xt[j]
        W = net.weights[level]
        total = 0.0
        for k in range(dims[level + 1]):
            total += node(level + 1, k, acc * W[j, k])
        val = max(total, 0.0)
        return val if j < dims[level] // 2 else -val

    W1 = net.weights[0]
    inner = sum(node(1, j, W1[0, j]) for j in range(dims[1]))
    if net.output_clamp:
        inner = math.copysign(min(abs(inner), 1.0), inner)
    return net.w0 * inner


def save_network(net: RampNetwork, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=2) + "\n")


def load_network(path) -> RampNetwork:
    p = Path(path)
    try:
        payload = json.loads(p.read_text())
    except FileNotFoundError:
        raise ValidationError(f"network file not found: {p}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"network file {p} is not valid JSON: {exc}") from None
    try:
        return RampNetwork.from_dict(payload)
    except ValidationError as exc:
        raise ValidationError(f"{p}: {exc}") from None
