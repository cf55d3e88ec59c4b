"""Shallow ReLU network: value, activation pattern, per-pattern gradient.

The candidate function is

    V(x) = sum_l w2[l] * max(0, W1[l] . x + b1[l]) + b2

Within any region of the hyperplane arrangement induced by the hidden
neurons the activation pattern is constant, so the gradient is the fixed
vector sum_l bits[l] * w2[l] * W1[l].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParseError


@dataclass(frozen=True)
class ShallowReluNet:
    """Weights of a single-hidden-layer ReLU network with scalar output.

    W1 is (n, p): row l holds the incoming weights of hidden unit l.
    w2 is (n,): hidden-to-output weights.  b1 is (n,), b2 a scalar.
    """

    input_dim: int
    hidden_dim: int
    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def __post_init__(self):
        p, n = self.input_dim, self.hidden_dim
        if p < 1 or n < 1:
            raise DimensionError(f"need input_dim >= 1 and hidden_dim >= 1, got p={p}, n={n}")
        W1 = np.asarray(self.W1, dtype=float)
        b1 = np.asarray(self.b1, dtype=float)
        w2 = np.asarray(self.w2, dtype=float)
        if W1.shape != (n, p):
            raise DimensionError(f"W1 must be {(n, p)}, got {W1.shape}")
        if b1.shape != (n,):
            raise DimensionError(f"b1 must be ({n},), got {b1.shape}")
        if w2.shape != (n,):
            raise DimensionError(f"w2 must be ({n},), got {w2.shape}")
        for name, arr in (("W1", W1), ("b1", b1), ("w2", w2)):
            if not np.all(np.isfinite(arr)):
                raise ParseError(f"non-finite entry in {name}")
        if not np.isfinite(self.b2):
            raise ParseError("non-finite entry in b2")
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "b2", float(self.b2))


def load_network(path) -> ShallowReluNet:
    """Load a network from a JSON weight file.

    Expected fields: input_dim, hidden_dim, W1 (n rows of p numbers),
    b1, w2, b2.  Non-finite entries raise ParseError; inconsistent
    shapes raise DimensionError.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()

    def _reject(token):
        raise ParseError(f"non-finite literal {token!r} in weight file")

    try:
        raw = json.loads(text, parse_constant=_reject)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed weight file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"weight file {path} must hold a JSON object")
    missing = {"input_dim", "hidden_dim", "W1", "b1", "w2", "b2"} - raw.keys()
    if missing:
        raise ParseError(f"weight file {path} missing fields: {sorted(missing)}")
    try:
        p = int(raw["input_dim"])
        n = int(raw["hidden_dim"])
        W1 = np.asarray(raw["W1"], dtype=float)
        b1 = np.asarray(raw["b1"], dtype=float)
        w2 = np.asarray(raw["w2"], dtype=float)
        b2 = float(raw["b2"])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"weight file {path}: {exc}") from exc
    if W1.ndim != 2 or W1.shape != (n, p):
        raise DimensionError(f"weight file {path}: W1 shape {W1.shape} != ({n}, {p})")
    return ShallowReluNet(input_dim=p, hidden_dim=n, W1=W1, b1=b1, w2=w2, b2=b2)


def save_network(net: ShallowReluNet, path) -> None:
    """Write a network in the same JSON layout load_network reads."""
    data = {
        "input_dim": net.input_dim,
        "hidden_dim": net.hidden_dim,
        "W1": net.W1.tolist(),
        "b1": net.b1.tolist(),
        "w2": net.w2.tolist(),
        "b2": net.b2,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def _check_point(net: ShallowReluNet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.input_dim:
        raise DimensionError(f"point dimension {x.shape[-1]} != input_dim {net.input_dim}")
    return x


def eval_v(net: ShallowReluNet, x) -> float | np.ndarray:
    """Network output at x.  Accepts a point (p,) or a batch (N, p)."""
    x = _check_point(net, x)
    pre = x @ net.W1.T + net.b1
    out = np.maximum(pre, 0.0) @ net.w2 + net.b2
    return float(out) if x.ndim == 1 else out


def activation_pattern(net: ShallowReluNet, x) -> np.ndarray:
    """Binary on/off vector of the hidden units at x.

    Uses the strict convention: unit l is active iff W1[l].x + b1[l] > 0,
    so points exactly on a hyperplane count as inactive.
    """
    x = _check_point(net, x)
    pre = x @ net.W1.T + net.b1
    return (pre > 0.0).astype(np.int8)


def region_gradient(net: ShallowReluNet, pattern) -> np.ndarray:
    """Gradient of V on the region carrying the given activation pattern.

    The pattern is constant on a region, hence so is the gradient; the
    returned vector is exact at every interior point of that region.
    """
    bits = np.asarray(pattern, dtype=float)
    if bits.shape != (net.hidden_dim,):
        raise DimensionError(f"pattern length {bits.shape} != hidden_dim {net.hidden_dim}")
    return (bits * net.w2) @ net.W1


def eval_v_dot(net: ShallowReluNet, pattern, f_val) -> float:
    """Lie derivative grad V . f(x) for a region pattern and dynamics value."""
    f_val = np.asarray(f_val, dtype=float)
    if f_val.shape != (net.input_dim,):
        raise DimensionError(f"f value dimension {f_val.shape} != input_dim {net.input_dim}")
    return float(region_gradient(net, pattern) @ f_val)


def l1_norm_net(p: int) -> ShallowReluNet:
    """The 1-norm candidate V(x) = sum_i |x_i| with n = 2p hidden units.

    Rows alternate +e_i, -e_i; all output weights are 1 and biases 0.
    """
    W1 = np.zeros((2 * p, p))
    for i in range(p):
        W1[2 * i, i] = 1.0
        W1[2 * i + 1, i] = -1.0
    return ShallowReluNet(input_dim=p, hidden_dim=2 * p, W1=W1,
                          b1=np.zeros(2 * p), w2=np.ones(2 * p), b2=0.0)
