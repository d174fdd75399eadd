"""ReLU multilayer perceptrons and their sound linear relaxations over a box.

A policy is a chain of affine layers with ReLU or identity activations (the
final layer is always linear).  For a box of inputs the module produces:

* interval bounds on every pre-activation (plain interval arithmetic),
* affine envelopes ``K_L y + b_L <= pi(y) <= K_U y + b_U`` valid on the box,
  built by backward propagation through per-neuron ReLU relaxations,
* concretized output ranges, residual bounds after subtracting a linear gain,
  and widened ranges for quantized outputs.

Relaxation rules for a neuron with pre-activation range ``l < 0 < u``: the
upper envelope is the chord (slope ``u/(u-l)``, intercept ``-u*l/(u-l)``);
the lower envelope passes through the origin with slope 1 when ``u >= |l|``
and slope 0 otherwise (ties go to slope 1).  Neurons whose range does not
straddle zero use the exact identity/zero lines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OnKink",
    "Layer",
    "ReluNetwork",
    "Box",
    "LinearBounds",
    "QuantizationSpec",
    "evaluate",
    "interval_bounds",
    "linear_relaxation",
    "concretize",
    "magnitude_bound",
    "residual_bounds",
    "jacobian_at",
    "quantized_concretize",
    "load_policy",
    "save_policy",
]

ACTIVATIONS = ("relu", "linear")

KINK_TOL = 1e-12


class OnKink(ValueError):
    """A Jacobian was requested at a point where some pre-activation is 0."""


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2:
            raise ValueError("layer weight must be a matrix")
        if b.shape != (w.shape[0],):
            raise ValueError("bias length must match weight rows")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class ReluNetwork:
    """Static feedforward policy; the last layer must be linear."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise ValueError("consecutive layer dimensions do not chain")
        if layers[-1].activation != "linear":
            raise ValueError("final layer must be linear")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]


def mlp(weights_and_biases, hidden_activation: str = "relu") -> ReluNetwork:
    """Network from a [(W, b), ...] list; all but the last layer get ReLU."""
    pairs = list(weights_and_biases)
    layers = [Layer(w, b, hidden_activation) for w, b in pairs[:-1]]
    layers.append(Layer(pairs[-1][0], pairs[-1][1], "linear"))
    return ReluNetwork(tuple(layers))


@dataclass(frozen=True)
class Box:
    """Axis-aligned input region ``|y - center| <= radius`` (elementwise)."""

    center: np.ndarray
    radius: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        r = np.asarray(self.radius, dtype=float)
        if c.ndim != 1 or r.shape != c.shape:
            raise ValueError("center and radius must be matching vectors")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            raise ValueError("radius must be finite and elementwise >= 0")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    @classmethod
    def symmetric(cls, radius) -> "Box":
        r = np.atleast_1d(np.asarray(radius, dtype=float))
        return cls(np.zeros_like(r), r)


@dataclass(frozen=True)
class LinearBounds:
    """Affine envelopes of the network output over an associated box.

    Soundness contract: ``K_L y + b_L <= pi(y) <= K_U y + b_U`` elementwise
    for every y in the box the bounds were built from.
    """

    k_l: np.ndarray
    b_l: np.ndarray
    k_u: np.ndarray
    b_u: np.ndarray


@dataclass(frozen=True)
class QuantizationSpec:
    """Round-to-nearest-multiple output quantization with step ``h``.

    The rounding error satisfies ``|Q(u) - u| <= h/2`` elementwise.
    """

    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("quantization step must be positive")
        object.__setattr__(self, "step", float(self.step))

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.step * np.round(np.asarray(u, dtype=float) / self.step)


def evaluate(net: ReluNetwork, y) -> np.ndarray:
    """Exact forward pass.

    Accepts a single input vector or a batch with samples in rows.
    """
    z = np.asarray(y, dtype=float)
    if z.shape[-1] != net.input_dim:
        raise ValueError(f"input has {z.shape[-1]} entries, network expects {net.input_dim}")
    for layer in net.layers:
        z = z @ layer.weight.T + layer.bias
        if layer.activation == "relu":
            z = np.maximum(z, 0.0)
    return z


def interval_bounds(net: ReluNetwork, box: Box):
    """Interval arithmetic through the network.

    Returns ``(pre, out)`` where ``pre`` lists one ``(lower, upper)``
    pre-activation pair per layer and ``out`` is the output interval (equal to
    the last pre-activation pair because the final layer is linear).  Sound:
    every input in the box produces pre-activations inside the intervals.
    """
    if box.center.shape[0] != net.input_dim:
        raise ValueError("box does not match the network input dimension")
    mid, rad = box.center, box.radius
    pre = []
    for layer in net.layers:
        p_mid = layer.weight @ mid + layer.bias
        p_rad = np.abs(layer.weight) @ rad
        lo, hi = p_mid - p_rad, p_mid + p_rad
        pre.append((lo, hi))
        if layer.activation == "relu":
            lo, hi = np.maximum(lo, 0.0), np.maximum(hi, 0.0)
        mid, rad = (lo + hi) / 2.0, (hi - lo) / 2.0
    return pre, pre[-1]


def _relu_lines(lo: np.ndarray, hi: np.ndarray, adaptive: bool):
    """Per-neuron envelope lines (upper slope/intercept, lower slope).

    The upper line is the chord over [lo, hi].  The lower line runs through
    the origin; with ``adaptive`` its slope is 1 when hi >= |lo| and 0
    otherwise (tightest area, ties to 1), without it the slope is always 0,
    which keeps the envelope inside the interval-arithmetic constants.
    """
    dead = hi <= 0.0
    active = lo >= 0.0
    unstable = ~(dead | active)
    up_slope = np.where(dead, 0.0, np.where(active, 1.0, 0.0))
    up_icept = np.zeros_like(lo)
    if np.any(unstable):
        span = hi[unstable] - lo[unstable]
        up_slope[unstable] = hi[unstable] / span
        up_icept[unstable] = -hi[unstable] * lo[unstable] / span
    lo_slope = np.where(dead, 0.0, np.where(active, 1.0, 0.0))
    if adaptive and np.any(unstable):
        lo_slope[unstable] = (hi[unstable] >= -lo[unstable]).astype(float)
    return up_slope, up_icept, lo_slope


def _backward_bounds(layers: list[Layer], lines: list) -> LinearBounds:
    """One backward pass over ``layers`` given per-ReLU envelope lines.

    ``lines`` holds one (up_slope, up_icept, lo_slope) triple per ReLU layer
    among ``layers[:-1]``; the last layer is treated as the linear readout.
    """
    last = layers[-1]
    k_u = last.weight.copy()
    b_u = last.bias.copy()
    k_l = last.weight.copy()
    b_l = last.bias.copy()
    relu_idx = len(lines) - 1
    for layer in reversed(layers[:-1]):
        if layer.activation == "relu":
            up_slope, up_icept, lo_slope = lines[relu_idx]
            relu_idx -= 1
            # positive coefficients take the upper line, negative the lower;
            # the lower line has zero intercept so only up_icept contributes.
            pos_u, neg_u = np.maximum(k_u, 0.0), np.minimum(k_u, 0.0)
            b_u = b_u + pos_u @ up_icept
            k_u = pos_u * up_slope + neg_u * lo_slope
            pos_l, neg_l = np.maximum(k_l, 0.0), np.minimum(k_l, 0.0)
            b_l = b_l + neg_l @ up_icept
            k_l = pos_l * lo_slope + neg_l * up_slope
        b_u = b_u + k_u @ layer.bias
        k_u = k_u @ layer.weight
        b_l = b_l + k_l @ layer.bias
        k_l = k_l @ layer.weight
    return LinearBounds(k_l=k_l, b_l=b_l, k_u=k_u, b_u=b_u)


def _backward_pre_bounds(net: ReluNetwork, box: Box, adaptive: bool):
    """Per-layer pre-activation bounds, each from its own backward pass.

    Layer k's bounds are obtained by bounding the subnetwork that ends at
    layer k (identity readout) with the envelope lines of the already-bounded
    earlier layers, which is tighter than plain interval propagation.
    """
    pre = []
    lines = []
    for idx, layer in enumerate(net.layers):
        head = list(net.layers[:idx]) + [Layer(layer.weight, layer.bias, "linear")]
        lb = _backward_bounds(head, lines)
        lo, hi = concretize(lb, box)
        pre.append((lo, hi))
        if layer.activation == "relu":
            lines.append(_relu_lines(lo, hi, adaptive))
    return pre, lines


def linear_relaxation(net: ReluNetwork, box: Box) -> LinearBounds:
    """Backward propagation of affine output envelopes over the box.

    Intermediate pre-activation ranges come from layer-by-layer backward
    bounding (tighter than plain interval propagation); each ReLU is replaced
    by its envelope lines and the output row coefficients select the upper or
    lower line by sign while walking back to the input.

    Two sound variants are formed: the adaptive lower slope (tightest area
    per neuron) and the zero lower slope, whose concretization provably never
    exceeds the interval-arithmetic output bounds.  Per output row the pair
    with the smaller concretized magnitude wins; ties keep the adaptive
    lines.  The result is therefore elementwise at least as tight as plain
    interval propagation.
    """
    layers = list(net.layers)
    _, lines_a = _backward_pre_bounds(net, box, True)
    adaptive = _backward_bounds(layers, lines_a)
    _, lines_f = _backward_pre_bounds(net, box, False)
    flat = _backward_bounds(layers, lines_f)
    mag_a = magnitude_bound(*concretize(adaptive, box))
    mag_f = magnitude_bound(*concretize(flat, box))
    use_flat = mag_f < mag_a
    if not np.any(use_flat):
        return adaptive
    pick = lambda a, f: np.where(use_flat[:, None] if a.ndim == 2 else use_flat, f, a)
    return LinearBounds(
        k_l=pick(adaptive.k_l, flat.k_l), b_l=pick(adaptive.b_l, flat.b_l),
        k_u=pick(adaptive.k_u, flat.k_u), b_u=pick(adaptive.b_u, flat.b_u),
    )


def concretize(lb: LinearBounds, box: Box) -> tuple[np.ndarray, np.ndarray]:
    """Extreme values of the affine envelopes over the box.

    ``u_max = b_U + K_U c + |K_U| r`` and ``u_min = b_L + K_L c - |K_L| r``;
    together they bracket every network output on the box.
    """
    u_max = lb.b_u + lb.k_u @ box.center + np.abs(lb.k_u) @ box.radius
    u_min = lb.b_l + lb.k_l @ box.center - np.abs(lb.k_l) @ box.radius
    return u_min, u_max


def magnitude_bound(u_min: np.ndarray, u_max: np.ndarray) -> np.ndarray:
    """Elementwise bound on |output| from a (min, max) bracket."""
    return np.maximum(np.abs(u_min), np.abs(u_max))


def residual_bounds(net: ReluNetwork, box: Box, k0) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude bounds for the residual policy and for the full policy.

    The residual ``pi0(y) = pi(y) - K0 y`` inherits the envelopes of ``pi``
    with ``K0`` subtracted from both slope matrices.  Returns ``(u0_bar,
    u_bar)``: elementwise bounds on ``|pi0(y)|`` and ``|pi(y)|`` over the box.
    """
    k0 = np.asarray(k0, dtype=float)
    if k0.shape != (net.output_dim, net.input_dim):
        raise ValueError(f"k0 has shape {k0.shape}, expected "
                         f"({net.output_dim}, {net.input_dim})")
    lb = linear_relaxation(net, box)
    res = LinearBounds(k_l=lb.k_l - k0, b_l=lb.b_l, k_u=lb.k_u - k0, b_u=lb.b_u)
    u0_bar = magnitude_bound(*concretize(res, box))
    u_bar = magnitude_bound(*concretize(lb, box))
    return u0_bar, u_bar


def jacobian_at(net: ReluNetwork, y0, kink_tol: float = KINK_TOL) -> np.ndarray:
    """Exact Jacobian at a point via the activation-pattern chain product.

    Raises
    ------
    OnKink
        If any pre-activation magnitude is within ``kink_tol`` of zero, where
        the ReLU pattern (and hence the Jacobian) is ill-defined.
    """
    z = np.asarray(y0, dtype=float)
    if z.shape != (net.input_dim,):
        raise ValueError("y0 must be a single input vector")
    jac = np.eye(net.input_dim)
    for layer in net.layers:
        pre = layer.weight @ z + layer.bias
        jac = layer.weight @ jac
        if layer.activation == "relu":
            if np.any(np.abs(pre) <= kink_tol):
                raise OnKink("pre-activation exactly on a ReLU kink")
            mask = pre > 0.0
            jac = jac * mask[:, None]
            z = np.maximum(pre, 0.0)
        else:
            z = pre
    return jac


def quantized_concretize(lb: LinearBounds, box: Box,
                         quantization: QuantizationSpec) -> tuple[np.ndarray, np.ndarray]:
    """Concretized bounds widened by the quantizer's worst-case error h/2."""
    u_min, u_max = concretize(lb, box)
    half = quantization.step / 2.0
    return u_min - half, u_max + half


# ---------------------------------------------------------------------------
# Policy file format: JSON {"layers": [{"rows": R, "cols": C,
# "weights": [row-major], "bias": [...], "activation": "relu"|"linear"}],
# "quantization": null | {"step": h}}.  Floats are written with full
# round-trip precision.  Extra keys (e.g. training metadata) are ignored on
# load.
# ---------------------------------------------------------------------------


def policy_to_dict(net: ReluNetwork, quantization: QuantizationSpec | None = None,
                   metadata: dict | None = None) -> dict:
    obj = {
        "layers": [
            {
                "rows": layer.weight.shape[0],
                "cols": layer.weight.shape[1],
                "weights": [float(v) for v in layer.weight.ravel()],
                "bias": [float(v) for v in layer.bias],
                "activation": layer.activation,
            }
            for layer in net.layers
        ],
        "quantization": None if quantization is None else {"step": quantization.step},
    }
    if metadata is not None:
        obj["metadata"] = metadata
    return obj


def policy_from_dict(obj: dict) -> tuple[ReluNetwork, QuantizationSpec | None]:
    layers = []
    for entry in obj["layers"]:
        rows, cols = int(entry["rows"]), int(entry["cols"])
        w = np.asarray(entry["weights"], dtype=float).reshape(rows, cols)
        b = np.asarray(entry["bias"], dtype=float)
        layers.append(Layer(w, b, entry.get("activation", "relu")))
    net = ReluNetwork(tuple(layers))
    quant = obj.get("quantization")
    return net, (None if quant is None else QuantizationSpec(float(quant["step"])))


def save_policy(path, net: ReluNetwork, quantization: QuantizationSpec | None = None,
                metadata: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(policy_to_dict(net, quantization, metadata), fh, indent=1)
        fh.write("\n")


def load_policy(path) -> tuple[ReluNetwork, QuantizationSpec | None]:
    with open(path) as fh:
        return policy_from_dict(json.load(fh))
