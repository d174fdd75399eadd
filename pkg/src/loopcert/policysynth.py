"""Test-policy synthesis: discrete-time LQR and behavior cloning into a ReLU net.

The LQR solution comes from the fixed-point Riccati iteration

    P <- Q + A' P A - A' P B (R + B' P B)^-1 B' P A,

which is the simplest correct method at the matrix sizes used here.  The
resulting law ``u = -K x`` is then cloned into a small ReLU network by
sampling inputs in a box and regressing the network output onto ``-K y``
with momentum gradient descent.  Cloning replaces any reinforcement-learning
pipeline: it produces policies that are near-linear around the origin, which
is exactly the regime the certification engine is exercised on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neural import Layer, ReluNetwork, evaluate

__all__ = [
    "NoConvergence",
    "LqrSpec",
    "CloneConfig",
    "CloneResult",
    "dare_solve",
    "behavior_clone",
]


class NoConvergence(RuntimeError):
    """The Riccati iteration did not reach its tolerance."""


@dataclass(frozen=True)
class LqrSpec:
    """Quadratic cost ``sum x'Qx + u'Ru`` (Q PSD, R PD, both symmetric)."""

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        r = np.asarray(self.r, dtype=float)
        for name, mat in (("q", q), ("r", r)):
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError(f"{name} must be square")
            if np.max(np.abs(mat - mat.T), initial=0.0) > 1e-12:
                raise ValueError(f"{name} must be symmetric")
        if np.any(np.linalg.eigvalsh(r) <= 0):
            raise ValueError("r must be positive definite")
        if np.any(np.linalg.eigvalsh(q) < -1e-12):
            raise ValueError("q must be positive semidefinite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)


def dare_solve(a, b, q, r, tol: float = 1e-12, max_iter: int = 100_000):
    """Solve the discrete algebraic Riccati equation by fixed-point iteration.

    Returns ``(P, K)`` with ``u = -K x`` the optimal law,
    ``K = (R + B'PB)^-1 B'PA``.  Requires a stabilizable pair; divergence or
    stagnation past ``max_iter`` raises :exc:`NoConvergence`.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    spec = LqrSpec(q, r)
    p = spec.q.copy()
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is detected below
        for _ in range(max_iter):
            btp = b.T @ p
            gain = np.linalg.solve(spec.r + btp @ b, btp @ a)
            p_next = spec.q + a.T @ p @ (a - b @ gain)
            p_next = (p_next + p_next.T) / 2.0
            delta = float(np.max(np.abs(p_next - p), initial=0.0))
            p = p_next
            if delta < tol:
                btp = b.T @ p
                k = np.linalg.solve(spec.r + btp @ b, btp @ a)
                return p, k
            if not np.all(np.isfinite(p)):
                break
    raise NoConvergence("Riccati iteration did not converge; is (A, B) stabilizable?")


@dataclass(frozen=True)
class CloneConfig:
    """Behavior-cloning hyperparameters.

    ``hidden`` lists the ReLU layer widths; a linear output layer is appended.
    Sampling and initialization are driven entirely by ``seed``.
    """

    hidden: tuple[int, ...] = (16, 16, 16)
    box_radius: float | tuple = 1.0
    n_samples: int = 10_000
    steps: int = 10_000
    learning_rate: float = 1e-2
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not all(w >= 1 for w in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if self.n_samples < 1 or self.steps < 1:
            raise ValueError("n_samples and steps must be >= 1")


@dataclass(frozen=True)
class CloneResult:
    net: ReluNetwork
    mse: float


def _init_params(dims, rng):
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def behavior_clone(k, config: CloneConfig | None = None) -> CloneResult:
    """Clone the linear law ``u = -K y`` into a ReLU network.

    Minimizes the mean squared error over a fixed sample of inputs drawn
    uniformly from the configured box, by full-batch gradient descent with
    momentum.  Deterministic for a fixed config.
    """
    config = config or CloneConfig()
    k = np.asarray(k, dtype=float)
    m, n = k.shape
    rng = np.random.default_rng(config.seed)
    radius = np.broadcast_to(np.asarray(config.box_radius, dtype=float), (n,))
    inputs = rng.uniform(-radius, radius, size=(config.n_samples, n))
    raw_targets = inputs @ (-k.T)
    # Regress against per-output standardized targets so the fixed learning
    # rate works for any gain scale; the scale is folded back into the final
    # linear layer below and the reported MSE is in original units.
    scale_out = np.maximum(np.sqrt(np.mean(raw_targets**2, axis=0)), 1e-12)
    targets = raw_targets / scale_out

    dims = [n, *config.hidden, m]
    weights, biases = _init_params(dims, rng)
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    n_layers = len(weights)
    scale = 1.0 / (config.n_samples * m)

    for _ in range(config.steps):
        acts = [inputs]
        pres = []
        z = inputs
        for i in range(n_layers):
            pre = z @ weights[i].T + biases[i]
            pres.append(pre)
            z = np.maximum(pre, 0.0) if i < n_layers - 1 else pre
            acts.append(z)
        grad = 2.0 * scale * (z - targets)
        for i in range(n_layers - 1, -1, -1):
            if i < n_layers - 1:
                grad = grad * (pres[i] > 0.0)
            g_w = grad.T @ acts[i]
            g_b = grad.sum(axis=0)
            vel_w[i] = config.momentum * vel_w[i] - config.learning_rate * g_w
            vel_b[i] = config.momentum * vel_b[i] - config.learning_rate * g_b
            if i > 0:
                grad = grad @ weights[i]
            weights[i] = weights[i] + vel_w[i]
            biases[i] = biases[i] + vel_b[i]

    layers = [Layer(w, b, "relu") for w, b in zip(weights[:-1], biases[:-1])]
    layers.append(Layer(weights[-1] * scale_out[:, None], biases[-1] * scale_out, "linear"))
    net = ReluNetwork(tuple(layers))
    # The cloned law vanishes at the origin; pin the network to the known
    # equilibrium action by absorbing its residual offset into the last bias.
    offset = evaluate(net, np.zeros(n))
    last = net.layers[-1]
    layers[-1] = Layer(last.weight, last.bias - offset, "linear")
    net = ReluNetwork(tuple(layers))
    final_mse = float(np.mean((evaluate(net, inputs) - raw_targets) ** 2))
    return CloneResult(net=net, mse=final_mse)
