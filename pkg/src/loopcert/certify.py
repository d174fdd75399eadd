"""Certification engine: invariant-set boundedness under persistent attack.

Two routes are implemented and compared throughout:

* the small-gain baseline, which models the policy only through a scalar
  infinity-gain ``gamma_pi`` (and the uncertainty block through
  ``gamma_delta``) and certifies via the L1-norm conditions ``beta_1 < 1``,
  ``beta_2 < 1`` plus a region check;
* the invariant-set engine, which asks a network relaxation for elementwise
  magnitude bounds and searches for a quadruplet ``(y_bar, u_bar, alpha_bar,
  delta_bar)`` that the closed-loop absolute transfer matrices map into
  itself.  Once such a box exists it is positively invariant, so every
  signal stays inside it for all time and any admissible perturbation.

Whenever the baseline certifies, a quadruplet can be constructed from its
norms in closed form (:func:`constructive_quadruplet`), so the invariant-set
route is never weaker.

The iteration (:func:`algorithm1`) follows the candidate-box inflation
scheme literally: the uncertainty bound of each pass uses the reference
``alpha`` box from the previous pass, not the freshly computed one.  Using
the fresh value instead would also be sound but changes the iterate
sequence; we keep the literal transcription.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import neural
from .linsys import (
    SCHUR_MARGIN,
    ClosedLoopMaps,
    StateSpacePlant,
    abs_transfer,
    close_loop,
    l1_norm,
    spectral_radius,
)
from .neural import Box, QuantizationSpec, ReluNetwork

__all__ = [
    "Quadruplet",
    "CertResult",
    "BaselineResult",
    "NoStabilizingGain",
    "check_theorem1",
    "check_lemma1",
    "hinf_corollary",
    "constructive_quadruplet",
    "algorithm1",
    "frontier",
    "with_state_limit",
    "bisect_max_level",
    "baseline_certify",
    "baseline_frontier",
    "sampled_linf_gain",
    "extract_gain",
    "CONSTRAINT_VIOLATED",
    "MAX_ITER_EXCEEDED",
    "NO_STABILIZING_GAIN",
]

CONSTRAINT_VIOLATED = "ConstraintViolated"
MAX_ITER_EXCEEDED = "MaxIterExceeded"
NO_STABILIZING_GAIN = "NoStabilizingGain"

# Relative inflation applied to constructed quadruplets so that downstream
# elementwise checks are robust to the last-ulp rounding of equality cases.
_QUAD_INFLATION = 1e-9


class NoStabilizingGain(RuntimeError):
    """No candidate linear gain renders the loop Schur stable."""


@dataclass(frozen=True)
class Quadruplet:
    """Candidate invariant-box bounds on (y, u, alpha, delta), plus x.

    All entries are elementwise magnitude bounds; ``x_bar`` is derived from
    the other four through the closed-loop maps.
    """

    y_bar: np.ndarray
    u_bar: np.ndarray
    alpha_bar: np.ndarray
    delta_bar: np.ndarray
    x_bar: np.ndarray | None = None

    def __post_init__(self):
        for name in ("y_bar", "u_bar", "alpha_bar", "delta_bar", "x_bar"):
            value = getattr(self, name)
            if value is None:
                continue
            arr = np.asarray(value, dtype=float)
            if arr.ndim != 1 or np.any(arr < 0):
                raise ValueError(f"{name} must be a nonnegative vector")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class CertResult:
    """Outcome of the invariant-set search."""

    success: bool
    quadruplet: Quadruplet | None
    iterations: int
    failure_reason: str | None = None
    gain: np.ndarray | None = None

    def to_dict(self) -> dict:
        quad = self.quadruplet
        return {
            "success": bool(self.success),
            "iterations": int(self.iterations),
            "x_bar": [] if quad is None or quad.x_bar is None else [float(v) for v in quad.x_bar],
            "y_bar": [] if quad is None else [float(v) for v in quad.y_bar],
            "u_bar": [] if quad is None else [float(v) for v in quad.u_bar],
            "failure_reason": self.failure_reason,
        }


@dataclass(frozen=True)
class BaselineResult:
    """Small-gain (L1) baseline outcome.

    ``gamma_pi`` is the sampled infinity-gain estimate of the residual
    policy; sampling gives a lower bound of the true local gain, so a
    positive ``certified`` here is an estimate, not a certificate.
    """

    beta1: float
    beta2: float
    certified: bool
    y_inf_implied: float
    gamma_pi: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "beta1": float(self.beta1),
            "beta2": float(self.beta2),
            "certified": bool(self.certified),
            "y_inf_implied": float(self.y_inf_implied),
            "gamma_pi_sampled": float(self.gamma_pi),
            "note": "gamma_pi is a sampled lower bound; a positive result is not a certificate",
        }


def check_theorem1(maps: ClosedLoopMaps, quad: Quadruplet, w_bar) -> tuple[bool, np.ndarray]:
    """Invariant-box feedback check, plus the implied state bound.

    Holds iff

        abs(Phi_yw) w_bar + abs(Phi_yu) u_bar + abs(Phi_ydelta) delta_bar <= y_bar
        abs(Phi_aw) w_bar + abs(Phi_au) u_bar + abs(Phi_adelta) delta_bar <= alpha_bar

    elementwise.  Returns ``(holds, x_bar)`` with ``x_bar`` the matching
    state bound ``abs(Phi_xw) w_bar + abs(Phi_xu) u_bar + abs(Phi_xd) d_bar``.
    """
    w_bar = np.asarray(w_bar, dtype=float)
    _, m, p, q, r, s = maps.dims
    if (w_bar.shape, quad.u_bar.shape, quad.delta_bar.shape) != ((p,), (m,), (q,)):
        raise ValueError("quadruplet dimensions do not match the maps")
    if (quad.y_bar.shape, quad.alpha_bar.shape) != ((r,), (s,)):
        raise ValueError("quadruplet dimensions do not match the maps")
    y_out = (abs_transfer(maps.yw) @ w_bar + abs_transfer(maps.yu) @ quad.u_bar
             + abs_transfer(maps.ydelta) @ quad.delta_bar)
    a_out = (abs_transfer(maps.alpha_w) @ w_bar + abs_transfer(maps.alpha_u) @ quad.u_bar
             + abs_transfer(maps.alpha_delta) @ quad.delta_bar)
    x_bar = (abs_transfer(maps.xw) @ w_bar + abs_transfer(maps.xu) @ quad.u_bar
             + abs_transfer(maps.xdelta) @ quad.delta_bar)
    holds = bool(np.all(y_out <= quad.y_bar) and np.all(a_out <= quad.alpha_bar))
    return holds, x_bar


def _l1_norms(maps: ClosedLoopMaps) -> dict:
    return {name: l1_norm(getattr(maps, name))
            for name in ("yu", "yw", "ydelta", "alpha_u", "alpha_w", "alpha_delta")}


def check_lemma1(maps: ClosedLoopMaps, gamma_pi: float, gamma_delta: float,
                 w_inf: float, y_inf: float) -> BaselineResult:
    """Small-gain baseline on L1 norms.

    ``beta1 = gamma_delta ||Phi_ad||`` closes the uncertainty loop and
    ``beta2`` the policy loop; when both are below one the implied
    measurement bound is

        y_implied = (||Phi_yw|| + gamma_delta/(1-beta1) ||Phi_yd|| ||Phi_aw||)
                    * w_inf / (1 - beta2)

    and the configuration is certified iff additionally
    ``y_implied <= y_inf`` (the region where ``gamma_pi`` is valid).
    """
    norms = _l1_norms(maps)
    beta1 = gamma_delta * norms["alpha_delta"]
    if beta1 < 1.0:
        beta2 = gamma_pi * (norms["yu"]
                            + gamma_delta / (1.0 - beta1) * norms["ydelta"] * norms["alpha_u"])
    else:
        beta2 = np.inf
    if beta1 < 1.0 and beta2 < 1.0:
        y_implied = (norms["yw"]
                     + gamma_delta / (1.0 - beta1) * norms["ydelta"] * norms["alpha_w"]
                     ) * w_inf / (1.0 - beta2)
    else:
        y_implied = np.inf
    # 1-ulp slack so exact-equality boundary cases resolve as certified
    certified = beta1 < 1.0 and beta2 < 1.0 and y_implied <= y_inf * (1.0 + 1e-12)
    return BaselineResult(beta1=float(beta1), beta2=float(beta2),
                          certified=certified, y_inf_implied=float(y_implied),
                          gamma_pi=float(gamma_pi))


def hinf_corollary(maps: ClosedLoopMaps, gamma_pi: float, gamma_delta: float,
                   grid: int = 512) -> bool:
    """Two-norm variant of the small-gain conditions; advisory only.

    Uses the grid-estimated peak gains, so this check is indicative rather
    than certified.
    """
    h_ad = maps.hinf("alpha_delta", grid)
    beta1 = gamma_delta * h_ad
    if beta1 >= 1.0:
        return False
    beta2 = gamma_pi * (maps.hinf("yu", grid)
                        + gamma_delta / (1.0 - beta1) * maps.hinf("ydelta", grid)
                        * maps.hinf("alpha_u", grid))
    return beta2 < 1.0


def constructive_quadruplet(maps: ClosedLoopMaps, gamma_pi: float, gamma_delta: float,
                            w_inf: float) -> Quadruplet:
    """Invariant box implied by the small-gain conditions, in closed form.

    Solves the two-variable fixed point

        y_ref  = ||Phi_yw|| w + gamma_pi ||Phi_yu|| y_ref + gamma_delta ||Phi_yd|| a_ref
        a_ref  = ||Phi_aw|| w + gamma_pi ||Phi_au|| y_ref + gamma_delta ||Phi_ad|| a_ref

    and returns ``(y_ref 1, gamma_pi y_ref 1, a_ref 1, gamma_delta a_ref 1)``.
    Because the L1 norm is the worst row sum, this box always passes
    :func:`check_theorem1` (a tiny relative inflation absorbs rounding of
    the equality rows).  Requires ``beta1 < 1`` and ``beta2 < 1``.
    """
    norms = _l1_norms(maps)
    result = check_lemma1(maps, gamma_pi, gamma_delta, w_inf, np.inf)
    if not (result.beta1 < 1.0 and result.beta2 < 1.0):
        raise ValueError("small-gain conditions do not hold; no constructive box exists")
    scale = w_inf / ((1.0 - result.beta1) * (1.0 - result.beta2))
    adj = np.array([
        [1.0 - gamma_delta * norms["alpha_delta"], gamma_delta * norms["ydelta"]],
        [gamma_pi * norms["alpha_u"], 1.0 - gamma_pi * norms["yu"]],
    ])
    rhs = np.array([norms["yw"], norms["alpha_w"]])
    y_ref, alpha_ref = scale * (adj @ rhs)
    grow = 1.0 + _QUAD_INFLATION
    _, _, _, q, r, s = maps.dims
    m = maps.dims[1]
    return Quadruplet(
        y_bar=np.full(r, grow * y_ref),
        u_bar=np.full(m, grow * gamma_pi * y_ref),
        alpha_bar=np.full(s, grow * alpha_ref),
        delta_bar=np.full(q, grow * gamma_delta * alpha_ref),
    )


# ---------------------------------------------------------------------------
# Gain extraction and the invariant-set iteration.
# ---------------------------------------------------------------------------


def _stabilizes(plant: StateSpacePlant, k: np.ndarray) -> bool:
    return spectral_radius(plant.a + plant.b @ k @ plant.c) < 1.0 - SCHUR_MARGIN


def extract_gain(plant: StateSpacePlant, net: ReluNetwork, box: Box | None,
                 k_d: np.ndarray | None) -> np.ndarray:
    """Pick a stabilizing linear approximation of the policy.

    Candidate order: midpoint of the relaxation envelopes over ``box`` (when
    the box is non-degenerate), then the Jacobian at the origin (when it
    exists), then the supplied default ``k_d``.  The first stabilizing
    candidate wins.

    Raises
    ------
    NoStabilizingGain
        If no candidate stabilizes the loop.
    """
    candidates = []
    if box is not None and np.any(box.radius > 0):
        lb = neural.linear_relaxation(net, box)
        candidates.append((lb.k_u + lb.k_l) / 2.0)
    try:
        candidates.append(neural.jacobian_at(net, np.zeros(net.input_dim)))
    except neural.OnKink:
        pass
    if k_d is not None:
        candidates.append(np.asarray(k_d, dtype=float))
    # zero gain closes nothing; valid whenever the plant is open-loop stable
    candidates.append(np.zeros((plant.m, plant.r)))
    for k in candidates:
        if _stabilizes(plant, k):
            return k
    raise NoStabilizingGain("no stabilizing candidate gain (midpoint, Jacobian, default)")


class _MapsCache:
    """Content-addressed cache of closed-loop maps (plant, gain, eps)."""

    def __init__(self, maxsize: int = 64):
        self.maxsize = maxsize
        self._store: dict = {}

    @staticmethod
    def _plant_key(plant: StateSpacePlant) -> bytes:
        parts = [plant.a, plant.b, plant.b_w, plant.b_delta, plant.c, plant.d_w,
                 plant.c_alpha, plant.d_alpha_u, plant.d_alpha_w]
        return b"".join(np.ascontiguousarray(p).tobytes() for p in parts)

    def get(self, plant: StateSpacePlant, k: np.ndarray, eps_trunc: float) -> ClosedLoopMaps:
        key = (self._plant_key(plant), np.ascontiguousarray(k).tobytes(), eps_trunc)
        if key not in self._store:
            if len(self._store) >= self.maxsize:
                self._store.pop(next(iter(self._store)))
            self._store[key] = close_loop(plant, k, eps_trunc)
        return self._store[key]


_maps_cache = _MapsCache()


def _certified_policy_bounds(net: ReluNetwork, y_ref: np.ndarray, k: np.ndarray,
                             quantization: QuantizationSpec | None):
    """(u0_bar, u_bar) over the box |y| <= y_ref for the residual and full policy.

    On the degenerate all-zero box the bounds are the exact values at the
    origin.  Output quantization widens both bounds by half a step.
    """
    if np.all(y_ref == 0.0):
        u0 = np.abs(neural.evaluate(net, np.zeros(net.input_dim)))
        u0_bar, u_bar = u0.copy(), u0.copy()
    else:
        box = Box(np.zeros_like(y_ref), y_ref)
        u0_bar, u_bar = neural.residual_bounds(net, box, k)
    if quantization is not None:
        u0_bar = u0_bar + quantization.step / 2.0
        u_bar = u_bar + quantization.step / 2.0
    return u0_bar, u_bar


def algorithm1(plant: StateSpacePlant, net: ReluNetwork,
               k_d: np.ndarray | None = None, gamma_delta: np.ndarray | None = None,
               *, quantization: QuantizationSpec | None = None,
               w_inf: float | None = None, eps: float = 1e-6, max_iter: int = 200,
               eps_trunc: float | None = None) -> CertResult:
    """Iterative search for a certified invariant box.

    Starting from the degenerate box, each pass (1) bounds the residual
    policy over the current reference box, (2) bounds the uncertainty output
    through ``|delta| <= gamma_delta |alpha|`` using the previous reference,
    (3) rebuilds the closed-loop maps on the extracted gain and computes the
    implied (x, y, alpha) bounds, then (4) declares failure if a limit is
    violated, success if the implied box sits inside the reference box, and
    otherwise inflates the reference by ``1 + eps`` and repeats.

    ``u_bar`` in the result bounds the full policy output (for checking
    ``u_lim``); the residual bound is what feeds the transfer matrices.
    """
    from .linsys import DEFAULT_EPS_TRUNC

    eps_trunc = DEFAULT_EPS_TRUNC if eps_trunc is None else eps_trunc
    w_amp = plant.w_inf if w_inf is None else float(w_inf)
    m, p, q, r, s = plant.m, plant.p, plant.q, plant.r, plant.s
    if net.input_dim != r or net.output_dim != m:
        raise ValueError(f"policy maps {net.input_dim}->{net.output_dim}, "
                         f"plant needs {r}->{m}")
    if gamma_delta is None:
        gamma_delta = np.zeros((q, s))
    gamma_delta = np.asarray(gamma_delta, dtype=float)
    if gamma_delta.shape != (q, s):
        raise ValueError(f"gamma_delta has shape {gamma_delta.shape}, expected ({q}, {s})")
    if np.any(gamma_delta < 0):
        raise ValueError("gamma_delta must be nonnegative")
    w_bar = np.full(p, w_amp)

    y_ref = np.zeros(r)
    alpha_ref = np.zeros(s)
    iterations = 0
    growth: list[float] = []
    prev_scale = None
    while iterations < max_iter:
        iterations += 1
        box = None if np.all(y_ref == 0.0) else Box(np.zeros(r), y_ref)
        try:
            k = extract_gain(plant, net, box, k_d)
        except NoStabilizingGain:
            return CertResult(False, None, iterations, NO_STABILIZING_GAIN)
        u0_bar, u_bar = _certified_policy_bounds(net, y_ref, k, quantization)
        delta_bar = gamma_delta @ alpha_ref
        maps = _maps_cache.get(plant, k, eps_trunc)
        x_bar = (abs_transfer(maps.xw) @ w_bar + abs_transfer(maps.xu) @ u0_bar
                 + abs_transfer(maps.xdelta) @ delta_bar)
        y_bar = (abs_transfer(maps.yw) @ w_bar + abs_transfer(maps.yu) @ u0_bar
                 + abs_transfer(maps.ydelta) @ delta_bar)
        alpha_bar = (abs_transfer(maps.alpha_w) @ w_bar + abs_transfer(maps.alpha_u) @ u0_bar
                     + abs_transfer(maps.alpha_delta) @ delta_bar)
        if (np.any(x_bar > plant.x_lim) or np.any(y_bar > plant.y_lim)
                or np.any(u_bar > plant.u_lim)):
            return CertResult(False, None, iterations, CONSTRAINT_VIOLATED, gain=k)
        if np.all(y_bar <= y_ref) and np.all(alpha_bar <= alpha_ref):
            quad = Quadruplet(y_bar=y_bar, u_bar=u_bar, alpha_bar=alpha_bar,
                              delta_bar=delta_bar, x_bar=x_bar)
            return CertResult(True, quad, iterations, None, gain=k)
        # Verdict-preserving early exit.  Below the fixed point the per-pass
        # growth factor exceeds 1 with an excess that decays like the slope
        # of the bound map; once the excess stops decaying (ratio near or
        # above 1 for several passes) the slope is so close to or above 1
        # that the remaining budget cannot close the gap, so the verdict
        # equals exhausting max_iter.
        scale = float(np.max(y_bar, initial=0.0))
        if prev_scale is not None and prev_scale > 0.0:
            growth.append(scale / prev_scale - 1.0)
        prev_scale = scale
        if iterations >= 15 and len(growth) >= 6:
            recent = growth[-6:]
            stalled = (all(e > 1e-5 for e in recent)
                       and all(nxt > 0.985 * cur for cur, nxt in zip(recent, recent[1:])))
            if stalled:
                return CertResult(False, None, iterations, MAX_ITER_EXCEEDED)
        y_ref = (1.0 + eps) * y_bar
        alpha_ref = (1.0 + eps) * alpha_bar
    return CertResult(False, None, iterations, MAX_ITER_EXCEEDED)


# ---------------------------------------------------------------------------
# Attack-level frontiers.
# ---------------------------------------------------------------------------


def with_state_limit(plant: StateSpacePlant, target_state: int | None,
                      value: float) -> StateSpacePlant:
    """Plant with the state limit of ``target_state`` (or all states) set."""
    x_lim = plant.x_lim.copy()
    if target_state is None:
        x_lim[:] = value
    else:
        x_lim[target_state] = value
    return StateSpacePlant(plant.a, plant.b, plant.b_w, plant.b_delta, plant.c,
                           plant.d_w, plant.c_alpha, plant.d_alpha_u, plant.d_alpha_w,
                           x_lim, plant.y_lim, plant.u_lim, plant.w_inf)


def bisect_max_level(certifies: Callable[[float], bool], tol: float = 1e-4,
                     cap_doublings: int = 20) -> float:
    """Largest level certified by a monotone predicate, to relative tol.

    Doubles upward from ``tol`` until the predicate fails (or the cap
    ``2**cap_doublings * tol`` certifies, which is then returned), then
    bisects.  Returns 0 when even level 0 fails.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not certifies(0.0):
        return 0.0
    lo, hi = 0.0, tol
    cap = tol * 2.0**cap_doublings
    while certifies(hi):
        lo = hi
        if hi >= cap:
            return hi
        hi = min(2.0 * hi, cap)
    # the halving count is capped so a certified level of exactly zero
    # (lo never moves) terminates too
    for _ in range(200):
        if hi - lo <= tol * hi:
            break
        mid = (lo + hi) / 2.0
        if certifies(mid):
            lo = mid
        else:
            hi = mid
    return lo


def frontier(plant: StateSpacePlant, net: ReluNetwork,
             k_d: np.ndarray | None = None, gamma_delta: np.ndarray | None = None,
             x_lim_values=(), tol: float = 1e-4, *, target_state: int | None = None,
             quantization: QuantizationSpec | None = None,
             eps_trunc: float | None = None) -> list[tuple[float, float]]:
    """Largest certifiable attack level per state-deviation limit.

    For each limit the attack amplitude is bisected (relative tolerance
    ``tol``) on the success of :func:`algorithm1` with that limit installed
    on ``target_state`` (every state when None).  The resulting curve is
    nondecreasing in the limit up to the bisection tolerance.
    """
    out = []
    for value in x_lim_values:
        limited = with_state_limit(plant, target_state, float(value))

        def certifies(w: float) -> bool:
            return algorithm1(limited, net, k_d, gamma_delta, quantization=quantization,
                              w_inf=w, eps_trunc=eps_trunc).success

        out.append((float(value), bisect_max_level(certifies, tol)))
    return out


# ---------------------------------------------------------------------------
# Small-gain baseline with a sampled policy gain.
# ---------------------------------------------------------------------------


def sampled_linf_gain(net: ReluNetwork, k0: np.ndarray, radius, n_samples: int = 4096,
                      seed: int = 0, quantization: QuantizationSpec | None = None) -> float:
    """Sampled infinity-gain of the residual policy over ``|y| <= radius``.

    Maximizes ``||pi(y) - K0 y||_inf / ||y||_inf`` over uniform samples; a
    lower bound of the true local gain (it is an estimate, never a
    certificate).  Diverges as the box shrinks whenever the residual does
    not vanish at the origin, e.g. for quantized outputs.
    """
    k0 = np.asarray(k0, dtype=float)
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (net.input_dim,))
    rng = np.random.default_rng(seed)
    ys = rng.uniform(-radius, radius, size=(n_samples, net.input_dim))
    outs = neural.evaluate(net, ys)
    if quantization is not None:
        outs = quantization.apply(outs)
    residual = outs - ys @ k0.T
    norms_y = np.max(np.abs(ys), axis=1)
    keep = norms_y > 0
    if not np.any(keep):
        return 0.0
    ratios = np.max(np.abs(residual[keep]), axis=1) / norms_y[keep]
    return float(np.max(ratios))


def baseline_certify(plant: StateSpacePlant, net: ReluNetwork,
                     k_d: np.ndarray | None = None,
                     gamma_delta: np.ndarray | None = None, *,
                     w_inf: float | None = None,
                     quantization: QuantizationSpec | None = None,
                     n_samples: int = 4096, seed: int = 0,
                     max_region_iter: int = 40,
                     eps_trunc: float | None = None,
                     check_limits: bool = True) -> tuple[BaselineResult, Quadruplet | None]:
    """Small-gain baseline with an iteratively grown validity region.

    Extracts a fixed gain (Jacobian at the origin, else ``k_d``), samples the
    residual infinity-gain over the current region, evaluates the small-gain
    conditions and grows the region until the implied measurement bound fits
    inside it (certified) or the conditions break.  On success the closed
    form quadruplet is returned as well; with ``check_limits`` the plant
    limits must also contain it.
    """
    from .linsys import DEFAULT_EPS_TRUNC

    eps_trunc = DEFAULT_EPS_TRUNC if eps_trunc is None else eps_trunc
    w_amp = plant.w_inf if w_inf is None else float(w_inf)
    gamma = 0.0
    if gamma_delta is not None and np.asarray(gamma_delta).size:
        gamma = float(np.max(np.sum(np.asarray(gamma_delta, dtype=float), axis=1)))
    try:
        k0 = extract_gain(plant, net, None, k_d)
    except NoStabilizingGain:
        return BaselineResult(np.inf, np.inf, False, np.inf), None
    maps = _maps_cache.get(plant, k0, eps_trunc)

    # Region search: the sampled gain is large both on tiny regions (any
    # policy offset at the origin dominates) and on huge ones (saturation),
    # so scan upward and keep the first region that closes all conditions.
    y_inf = max(l1_norm(maps.yw) * w_amp, 1e-9)
    result = BaselineResult(np.inf, np.inf, False, np.inf)
    certified_result = None
    for _ in range(max_region_iter):
        gamma_pi = sampled_linf_gain(net, k0, y_inf, n_samples, seed, quantization)
        result = check_lemma1(maps, gamma_pi, gamma, w_amp, y_inf)
        if result.certified:
            certified_result = result
            break
        if (result.beta1 < 1.0 and result.beta2 < 1.0
                and np.isfinite(result.y_inf_implied) and result.y_inf_implied > y_inf):
            y_inf = result.y_inf_implied * (1.0 + 1e-6)
        else:
            y_inf *= 2.0
        if y_inf > 1e9:
            break
    if certified_result is None:
        return BaselineResult(result.beta1, result.beta2, False,
                              result.y_inf_implied, result.gamma_pi), None
    result = certified_result

    quad = constructive_quadruplet(maps, result.gamma_pi, gamma, w_amp)
    _, x_bar = check_theorem1(maps, quad, np.full(plant.p, w_amp))
    quad = Quadruplet(quad.y_bar, quad.u_bar, quad.alpha_bar, quad.delta_bar, x_bar)
    if check_limits and (np.any(x_bar > plant.x_lim) or np.any(quad.y_bar > plant.y_lim)
                         or np.any(quad.u_bar > plant.u_lim)):
        return BaselineResult(result.beta1, result.beta2, False,
                              result.y_inf_implied, result.gamma_pi), quad
    return result, quad


def baseline_frontier(plant: StateSpacePlant, net: ReluNetwork,
                      k_d: np.ndarray | None = None,
                      gamma_delta: np.ndarray | None = None, x_lim_values=(),
                      tol: float = 1e-4, *, target_state: int | None = None,
                      quantization: QuantizationSpec | None = None,
                      n_samples: int = 4096, seed: int = 0,
                      eps_trunc: float | None = None) -> list[tuple[float, float]]:
    """Largest attack level the small-gain baseline accepts, per limit."""
    out = []
    for value in x_lim_values:
        limited = with_state_limit(plant, target_state, float(value))

        def certifies(w: float) -> bool:
            result, _ = baseline_certify(limited, net, k_d, gamma_delta, w_inf=w,
                                         quantization=quantization, n_samples=n_samples,
                                         seed=seed, eps_trunc=eps_trunc)
            return result.certified

        out.append((float(value), bisect_max_level(certifies, tol)))
    return out
