"""Concrete plants: the nonlinear cart-pole and its analytic linearization.

State vector ``x = [position, velocity, angle, angular velocity]`` with the
angle in radians, zero at the upright equilibrium.  The continuous dynamics

    pos_acc = ( (4/3) m l th_dot^2 sin(th) - m g l sin(th) cos(th)
                + (4/3) l u ) / ( (4/3)(M+m) l - m l cos^2(th) )
    ang_acc = ( -m l th_dot^2 sin(th) cos(th) + (M+m) g sin(th)
                - cos(th) u ) / ( (4/3)(M+m) l - m l cos^2(th) )

are discretized by a forward Euler step of length ``tau``.  The denominator
is positive for any positive masses and length, so the step is total.

Angles are never wrapped: all analysis is local around the upright position
and wrapping would break the linear approximation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linsys import StateSpacePlant, make_plant

__all__ = [
    "CartPoleParams",
    "NonlinearPlant",
    "cartpole_step",
    "cartpole_nonlinear",
    "cartpole_linearized",
    "linearization_consistency",
]


@dataclass(frozen=True)
class CartPoleParams:
    """Cart-pole constants (stable-baselines defaults)."""

    g: float = 9.8
    masscart: float = 1.0
    masspole: float = 0.1
    length: float = 0.5
    tau: float = 0.02

    def __post_init__(self):
        for name in ("g", "masscart", "masspole", "length", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class NonlinearPlant:
    """Generic nonlinear plant the simulator can drive.

        x[t+1] = step(x[t], u[t]) + B_w w[t],   y[t] = C x[t] + D_w w[t]

    ``step`` must satisfy step(0, 0) = 0 for equilibrium plants.
    """

    step: Callable[[np.ndarray, np.ndarray], np.ndarray]
    c: np.ndarray
    d_w: np.ndarray
    b_w: np.ndarray

    @property
    def n(self) -> int:
        return self.c.shape[1]

    @property
    def p(self) -> int:
        return self.d_w.shape[1]


def cartpole_step(params: CartPoleParams, x, u) -> np.ndarray:
    """One Euler step of the nonlinear cart-pole."""
    x = np.asarray(x, dtype=float)
    force = float(np.asarray(u).reshape(-1)[0]) if np.ndim(u) else float(u)
    pos, vel, theta, omega = x
    m, big_m, l, g = params.masspole, params.masscart, params.length, params.g
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    denom = (4.0 / 3.0) * (big_m + m) * l - m * l * cos_t**2
    pos_acc = ((4.0 / 3.0) * m * l**2 * omega**2 * sin_t
               - m * g * l * sin_t * cos_t
               + (4.0 / 3.0) * l * force) / denom
    ang_acc = (-m * l * omega**2 * sin_t * cos_t
               + (big_m + m) * g * sin_t
               - cos_t * force) / denom
    tau = params.tau
    return np.array([pos + tau * vel,
                     vel + tau * pos_acc,
                     theta + tau * omega,
                     omega + tau * ang_acc])


def _angle_measurement(n: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """(C, D_w) for full state measurement with perturbation on the angle."""
    d_w = np.zeros((n, 1))
    d_w[2, 0] = 1.0
    return np.eye(n), d_w


def cartpole_nonlinear(params: CartPoleParams | None = None) -> NonlinearPlant:
    """Nonlinear cart-pole with full state measurement, angle perturbation."""
    params = params or CartPoleParams()
    c, d_w = _angle_measurement()
    return NonlinearPlant(step=lambda x, u: cartpole_step(params, x, u),
                          c=c, d_w=d_w, b_w=np.zeros((4, 1)))


def cartpole_linearized(params: CartPoleParams | None = None, *,
                        x_lim=None, y_lim=None, u_lim=None,
                        w_inf: float = 0.0) -> StateSpacePlant:
    """Linearization of the cart-pole around the upright equilibrium.

    The returned plant measures the full state with the perturbation entering
    the angle measurement only; open loop it is unstable (the upright pole
    falls), so certification must close the loop with a stabilizing gain.
    """
    params = params or CartPoleParams()
    g, big_m, m = params.g, params.masscart, params.masspole
    l, tau = params.length, params.tau
    denom = 4.0 * big_m + m
    a = np.array([
        [1.0, tau, 0.0, 0.0],
        [0.0, 1.0, -3.0 * m * g * tau / denom, 0.0],
        [0.0, 0.0, 1.0, tau],
        [0.0, 0.0, 3.0 * (big_m + m) * g * tau / (denom * l), 1.0],
    ])
    b = np.array([[0.0],
                  [4.0 * tau / denom],
                  [0.0],
                  [-3.0 * tau / (denom * l)]])
    c, d_w = _angle_measurement()
    return make_plant(a, b, c=c, d_w=d_w, x_lim=x_lim, y_lim=y_lim,
                      u_lim=u_lim, w_inf=w_inf)


def linearization_consistency(params: CartPoleParams, radius: float,
                              n_samples: int, seed: int = 0) -> float:
    """Largest Taylor-remainder ratio of the (nonlinear, linearized) pair.

    Samples (x, u) uniformly with magnitudes up to ``radius`` and returns
    ``max ||F(x, u) - (A x + B u)||_inf / radius**2``; for a correct
    linearization the ratio stays bounded by a modest constant as the radius
    shrinks (the remainder is quadratic).
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    lin = cartpole_linearized(params)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        x = rng.uniform(-radius, radius, size=4)
        u = rng.uniform(-radius, radius, size=1)
        exact = cartpole_step(params, x, u)
        approx = lin.a @ x + lin.b @ u
        worst = max(worst, float(np.max(np.abs(exact - approx))) / radius**2)
    return worst
