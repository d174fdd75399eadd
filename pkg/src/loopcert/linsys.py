"""Dense linear-systems algebra for discrete-time loop certification.

Everything here works with plain ``numpy`` arrays.  The central object is a
transfer matrix represented by its truncated impulse response

    Phi[0] = D,   Phi[t] = C A^(t-1) B   (t >= 1),

together with a rigorous scalar bound on every entry of the discarded tail
``sum_{t >= T} |Phi[t]|``.  All certified quantities downstream (absolute
transfer matrices, L1 norms, invariant-set bounds) fold that tail bound in
additively, so they over-approximate the exact infinite sums.

The truncation horizon is our own construction (the underlying theory never
needs one): we locate a power ``m`` with ``||A^m||_inf < 1`` and bound the
tail by the induced geometric decay.  See :func:`impulse_response`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NotSchurStable",
    "StateSpacePlant",
    "TruncatedTransferMatrix",
    "ClosedLoopMaps",
    "make_plant",
    "spectral_radius",
    "impulse_response",
    "abs_transfer",
    "l1_norm",
    "hinf_norm",
    "close_loop",
    "load_plant",
    "save_plant",
    "plant_to_dict",
    "plant_from_dict",
]

# Matrices with spectral radius above 1 - SCHUR_MARGIN are treated as unstable.
SCHUR_MARGIN = 1e-9

# Default per-entry truncation error; far below every certification tolerance
# used downstream.
DEFAULT_EPS_TRUNC = 1e-9

_MAX_TRUNC_TERMS = 2_000_000


class NotSchurStable(ValueError):
    """A matrix that must be Schur stable (spectral radius < 1) is not."""


def _as_matrix(value, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _as_vector(value, name: str = "vector") -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    return arr


def _inf_norm(a: np.ndarray) -> float:
    """Induced infinity norm (maximum absolute row sum); 0 for empty arrays."""
    if a.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(a), axis=1)))


def spectral_radius(a) -> float:
    """Largest absolute value of the eigenvalues of a square matrix.

    Computed with a dense eigenvalue solve, which is exact to machine
    precision at the small sizes used here.  (Power iteration with deflation
    would serve at larger scale but is not needed or wired in.)
    """
    a = _as_matrix(a, "a")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got {a.shape}")
    if a.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(a))))


@dataclass(frozen=True)
class TruncatedTransferMatrix:
    """Finite impulse response ``Phi[0..T)`` plus a certified tail bound.

    ``impulse`` has shape ``(T, out, in)``.  ``tail_bound`` bounds every entry
    of ``sum_{t >= T} |Phi[t]|``, so ``sum_t |impulse[t]| + tail_bound`` is an
    elementwise over-approximation of the exact absolute transfer matrix.
    """

    impulse: np.ndarray
    tail_bound: float

    def __post_init__(self):
        arr = np.asarray(self.impulse, dtype=float)
        if arr.ndim != 3:
            raise ValueError("impulse must have shape (T, out, in)")
        if not (np.isfinite(self.tail_bound) and self.tail_bound >= 0.0):
            raise ValueError("tail_bound must be finite and nonnegative")
        object.__setattr__(self, "impulse", arr)

    @property
    def length(self) -> int:
        return self.impulse.shape[0]

    @property
    def dims(self) -> tuple[int, int]:
        return (self.impulse.shape[1], self.impulse.shape[2])

    def block(self, rows: slice, cols: slice) -> "TruncatedTransferMatrix":
        """Sub-map on a row/column slice; the uniform tail bound carries over."""
        return TruncatedTransferMatrix(self.impulse[:, rows, cols], self.tail_bound)


def _decay_window(a: np.ndarray, max_power: int = 4096) -> tuple[int, float, float]:
    """Find m with ``q = ||A^m||_inf < 1`` and the geometric tail factor.

    Returns ``(m, q, c_geo)`` where ``c_geo = (sum_{r<m} ||A^r||_inf)/(1-q)``.
    For any T >= 1 every entry of ``sum_{t>=T} |C A^(t-1) B|`` is bounded by
    ``max|B| * ||C A^(T-1)||_inf * c_geo``:  writing ``t-1 = (T-1) + r + k m``
    gives ``||C A^(t-1)||_inf <= ||C A^(T-1)||_inf ||A^r||_inf q^k`` and the
    entries of ``M B`` are bounded by ``||M||_inf * max|B|``.

    The smallest admissible m is preferred; the search runs past ``4n``
    because strongly non-normal stable matrices can need longer windows.
    """
    n = a.shape[0]
    if n == 0:
        return 1, 0.0, 1.0
    power = np.eye(n)
    norms = [1.0]
    limit = max(4 * n, max_power)
    for m in range(1, limit + 1):
        power = power @ a
        q = _inf_norm(power)
        if q < 1.0:
            c_geo = float(sum(norms)) / (1.0 - q)
            return m, q, c_geo
        norms.append(q)
    raise NotSchurStable(
        f"no power contraction within {limit} steps; matrix is (numerically) not Schur stable"
    )


def impulse_response(a, bc, cc, dc, eps_trunc: float = DEFAULT_EPS_TRUNC) -> TruncatedTransferMatrix:
    """Truncated impulse response of ``C (zI - A)^-1 B + D``.

    The response is cut at the first horizon T where the geometric tail bound
    of :func:`_decay_window` drops below ``eps_trunc``; that bound is recorded
    on the result so downstream sums stay sound.

    Raises
    ------
    NotSchurStable
        If ``rho(A) >= 1 - SCHUR_MARGIN``.
    """
    a = _as_matrix(a, "a")
    bc = _as_matrix(bc, "bc")
    cc = _as_matrix(cc, "cc")
    dc = _as_matrix(dc, "dc")
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise ValueError("a must be square")
    if bc.shape[0] != n or cc.shape[1] != n:
        raise ValueError("b/c dimensions do not match a")
    if dc.shape != (cc.shape[0], bc.shape[1]):
        raise ValueError("d dimensions do not match b/c")
    if not eps_trunc > 0:
        raise ValueError("eps_trunc must be positive")
    if spectral_radius(a) >= 1.0 - SCHUR_MARGIN:
        raise NotSchurStable(f"spectral radius {spectral_radius(a):.12g} is not below 1")

    _, _, c_geo = _decay_window(a)
    b_max = float(np.max(np.abs(bc))) if bc.size else 0.0

    # March in chunks: with CA_r = C A^r precomputed for r < chunk, the terms
    # Phi[k*chunk + r + 1] = CA_r (A^chunk)^k B come from one stacked matmul
    # per chunk; the tail criterion is evaluated at chunk boundaries from
    # ||C A^(T-1)||_inf.
    chunk = 8
    ca = [cc]
    for _ in range(chunk - 1):
        ca.append(ca[-1] @ a)
    ca_stack = np.vstack(ca)
    a_chunk = np.linalg.matrix_power(a, chunk)

    blocks = [dc[None, :, :]]
    x_state = bc  # A^(chunk*k) B
    z_state = cc  # C A^(chunk*k)
    total = 1
    while True:
        tail = b_max * _inf_norm(z_state) * c_geo
        if tail <= eps_trunc:
            break
        if total > _MAX_TRUNC_TERMS:
            raise RuntimeError("impulse response did not decay below eps_trunc")
        blocks.append((ca_stack @ x_state).reshape(chunk, cc.shape[0], bc.shape[1]))
        x_state = a_chunk @ x_state
        z_state = z_state @ a_chunk
        total += chunk
    impulse = np.concatenate(blocks, axis=0)
    # drop exactly-zero trailing terms (they contribute nothing to any sum
    # and the tail bound stays valid); keeps nilpotent responses minimal
    length = impulse.shape[0]
    while length > 1 and not impulse[length - 1].any():
        length -= 1
    return TruncatedTransferMatrix(impulse[:length], tail)


def abs_transfer(phi: TruncatedTransferMatrix) -> np.ndarray:
    """Elementwise ``sum_t |Phi[t]|`` with the tail bound folded in.

    Sound over-approximation of the exact infinite absolute sum.
    """
    return np.sum(np.abs(phi.impulse), axis=0) + phi.tail_bound


def l1_norm(phi: TruncatedTransferMatrix) -> float:
    """L1 system norm: maximum row sum of :func:`abs_transfer`.

    Upper bounds the exact infinity-to-infinity induced gain of the map.
    """
    total = abs_transfer(phi)
    if total.size == 0:
        return 0.0
    return float(np.max(np.sum(total, axis=1)))


def _golden_section_max(f, lo: float, hi: float, iters: int = 80) -> float:
    """Maximum value of a unimodal f on [lo, hi] by golden-section search."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
    return max(f1, f2)


def hinf_norm(a, bc, cc, dc, grid: int = 512) -> float:
    """Peak singular value of ``C (e^{jw} I - A)^-1 B + D`` over the unit circle.

    Grid search over ``w in [0, pi]`` followed by one local golden-section
    refinement around the grid maximizer.  This is an estimator (a lower bound
    of the true peak up to grid resolution), not a certified norm; it only
    feeds the advisory small-gain check based on the 2-norm.
    """
    a = _as_matrix(a, "a")
    bc = _as_matrix(bc, "bc")
    cc = _as_matrix(cc, "cc")
    dc = _as_matrix(dc, "dc")
    if grid < 64:
        raise ValueError("grid must be at least 64")
    n = a.shape[0]
    if n and spectral_radius(a) >= 1.0 - SCHUR_MARGIN:
        raise NotSchurStable("hinf_norm requires a Schur stable matrix")

    if n == 0 or bc.shape[1] == 0 or cc.shape[0] == 0:
        return float(np.linalg.svd(dc, compute_uv=False)[0]) if dc.size else 0.0

    eye = np.eye(n)

    def peak(omega: float) -> float:
        h = cc @ np.linalg.solve(np.exp(1j * omega) * eye - a, bc) + dc
        return float(np.linalg.svd(h, compute_uv=False)[0])

    omegas = np.linspace(0.0, np.pi, grid)
    values = np.array([peak(w) for w in omegas])
    k = int(np.argmax(values))
    lo = omegas[max(k - 1, 0)]
    hi = omegas[min(k + 1, grid - 1)]
    return max(float(values[k]), _golden_section_max(peak, lo, hi))


@dataclass(frozen=True)
class StateSpacePlant:
    """Discrete-time uncertain plant with a measurement and an uncertainty tap.

        x[t+1] = A x[t] + B u[t] + B_w w[t] + B_delta delta[t]
        y[t]   = C x[t] + D_w w[t]
        alpha[t] = C_alpha x[t] + D_alpha_u u[t] + D_alpha_w w[t]

    ``y`` has no feedthrough from ``u`` or ``delta`` and ``alpha`` none from
    ``delta``, so the feedback interconnection with a static policy is
    well-posed (no algebraic loop).

    ``x_lim``/``y_lim``/``u_lim`` are elementwise magnitude limits (``inf``
    meaning unconstrained) and ``w_inf`` is the per-entry amplitude of the
    persistent perturbation.
    """

    a: np.ndarray
    b: np.ndarray
    b_w: np.ndarray
    b_delta: np.ndarray
    c: np.ndarray
    d_w: np.ndarray
    c_alpha: np.ndarray
    d_alpha_u: np.ndarray
    d_alpha_w: np.ndarray
    x_lim: np.ndarray
    y_lim: np.ndarray
    u_lim: np.ndarray
    w_inf: float

    def __post_init__(self):
        fields = {
            "a": _as_matrix(self.a, "a"),
            "b": _as_matrix(self.b, "b"),
            "b_w": _as_matrix(self.b_w, "b_w"),
            "b_delta": _as_matrix(self.b_delta, "b_delta"),
            "c": _as_matrix(self.c, "c"),
            "d_w": _as_matrix(self.d_w, "d_w"),
            "c_alpha": _as_matrix(self.c_alpha, "c_alpha"),
            "d_alpha_u": _as_matrix(self.d_alpha_u, "d_alpha_u"),
            "d_alpha_w": _as_matrix(self.d_alpha_w, "d_alpha_w"),
        }
        for name, arr in fields.items():
            object.__setattr__(self, name, arr)
        n, m, p, q = self.n, self.m, self.p, self.q
        r, s = self.r, self.s
        checks = [
            ("a", (n, n)), ("b", (n, m)), ("b_w", (n, p)), ("b_delta", (n, q)),
            ("c", (r, n)), ("d_w", (r, p)),
            ("c_alpha", (s, n)), ("d_alpha_u", (s, m)), ("d_alpha_w", (s, p)),
        ]
        for name, shape in checks:
            if fields[name].shape != shape:
                raise ValueError(f"{name} has shape {fields[name].shape}, expected {shape}")
        limits = {
            "x_lim": (_as_vector(self.x_lim, "x_lim"), n),
            "y_lim": (_as_vector(self.y_lim, "y_lim"), r),
            "u_lim": (_as_vector(self.u_lim, "u_lim"), m),
        }
        for name, (vec, dim) in limits.items():
            if vec.shape != (dim,):
                raise ValueError(f"{name} has shape {vec.shape}, expected ({dim},)")
            if np.any(vec < 0) or np.any(np.isnan(vec)):
                raise ValueError(f"{name} must be elementwise >= 0")
            object.__setattr__(self, name, vec)
        if not (self.w_inf >= 0 and not np.isnan(self.w_inf)):
            raise ValueError("w_inf must be >= 0")
        object.__setattr__(self, "w_inf", float(self.w_inf))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]

    @property
    def p(self) -> int:
        return self.b_w.shape[1]

    @property
    def q(self) -> int:
        return self.b_delta.shape[1]

    @property
    def r(self) -> int:
        return self.c.shape[0]

    @property
    def s(self) -> int:
        return self.c_alpha.shape[0]


def make_plant(a, b, *, b_w=None, b_delta=None, c=None, d_w=None, c_alpha=None,
               d_alpha_u=None, d_alpha_w=None, x_lim=None, y_lim=None, u_lim=None,
               w_inf: float = 0.0) -> StateSpacePlant:
    """Build a :class:`StateSpacePlant`, defaulting absent blocks sensibly.

    Defaults: full state measurement (``C = I``), no uncertainty channel
    (zero-width ``B_delta``/``C_alpha``), zero perturbation feedthroughs, and
    infinite limits.  The perturbation width is taken from ``b_w`` or ``d_w``
    (1 if both are absent).
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    n, m = a.shape[0], b.shape[1]
    c = np.eye(n) if c is None else _as_matrix(c, "c")
    r = c.shape[0]
    if b_w is None and d_w is None:
        p = 1
    else:
        p = _as_matrix(b_w, "b_w").shape[1] if b_w is not None else _as_matrix(d_w, "d_w").shape[1]
    b_w = np.zeros((n, p)) if b_w is None else _as_matrix(b_w, "b_w")
    d_w = np.zeros((r, p)) if d_w is None else _as_matrix(d_w, "d_w")
    b_delta = np.zeros((n, 0)) if b_delta is None else _as_matrix(b_delta, "b_delta")
    c_alpha = np.zeros((0, n)) if c_alpha is None else _as_matrix(c_alpha, "c_alpha")
    s = c_alpha.shape[0]
    d_alpha_u = np.zeros((s, m)) if d_alpha_u is None else _as_matrix(d_alpha_u, "d_alpha_u")
    d_alpha_w = np.zeros((s, p)) if d_alpha_w is None else _as_matrix(d_alpha_w, "d_alpha_w")
    x_lim = np.full(n, np.inf) if x_lim is None else np.asarray(x_lim, dtype=float)
    y_lim = np.full(r, np.inf) if y_lim is None else np.asarray(y_lim, dtype=float)
    u_lim = np.full(m, np.inf) if u_lim is None else np.asarray(u_lim, dtype=float)
    return StateSpacePlant(a, b, b_w, b_delta, c, d_w, c_alpha, d_alpha_u, d_alpha_w,
                           x_lim, y_lim, u_lim, w_inf)


@dataclass(frozen=True)
class ClosedLoopMaps:
    """The nine truncated transfer matrices of the loop closed with a gain K0.

    Closing ``u = K0 y + u0`` turns the plant into

        x[t+1] = A_cl x[t] + B u0[t] + (B K0 D_w + B_w) w[t] + B_delta delta[t]

    with ``A_cl = A + B K0 C``; the alpha output picks up the matching
    ``D_alpha_u K0`` terms.  Maps are indexed output-input: ``xu`` sends the
    residual control ``u0`` to the state, ``yw`` the perturbation to the
    measurement, and so on.  The closed-loop realization matrices are kept for
    frequency-domain evaluation.
    """

    xu: TruncatedTransferMatrix
    xw: TruncatedTransferMatrix
    xdelta: TruncatedTransferMatrix
    yu: TruncatedTransferMatrix
    yw: TruncatedTransferMatrix
    ydelta: TruncatedTransferMatrix
    alpha_u: TruncatedTransferMatrix
    alpha_w: TruncatedTransferMatrix
    alpha_delta: TruncatedTransferMatrix
    a_cl: np.ndarray
    b_u: np.ndarray
    b_w_cl: np.ndarray
    b_delta: np.ndarray
    c_y: np.ndarray
    c_alpha_cl: np.ndarray
    d_yw: np.ndarray
    d_alpha_u: np.ndarray
    d_alpha_w_cl: np.ndarray

    @property
    def dims(self) -> tuple[int, int, int, int, int, int]:
        """(n, m, p, q, r, s) of the underlying interconnection."""
        n = self.a_cl.shape[0]
        return (n, self.b_u.shape[1], self.b_w_cl.shape[1], self.b_delta.shape[1],
                self.c_y.shape[0], self.c_alpha_cl.shape[0])

    def realization(self, which: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """State-space quadruple (A, B, C, D) of one of the nine maps."""
        n = self.a_cl.shape[0]
        mapping = {
            "xu": (np.eye(n), self.b_u, None),
            "xw": (np.eye(n), self.b_w_cl, None),
            "xdelta": (np.eye(n), self.b_delta, None),
            "yu": (self.c_y, self.b_u, None),
            "yw": (self.c_y, self.b_w_cl, self.d_yw),
            "ydelta": (self.c_y, self.b_delta, None),
            "alpha_u": (self.c_alpha_cl, self.b_u, self.d_alpha_u),
            "alpha_w": (self.c_alpha_cl, self.b_w_cl, self.d_alpha_w_cl),
            "alpha_delta": (self.c_alpha_cl, self.b_delta, None),
        }
        if which not in mapping:
            raise KeyError(f"unknown map {which!r}")
        cc, bc, dc = mapping[which]
        if dc is None:
            dc = np.zeros((cc.shape[0], bc.shape[1]))
        return self.a_cl, bc, cc, dc

    def hinf(self, which: str, grid: int = 512) -> float:
        a, bc, cc, dc = self.realization(which)
        return hinf_norm(a, bc, cc, dc, grid=grid)


def close_loop(plant: StateSpacePlant, k0, eps_trunc: float = DEFAULT_EPS_TRUNC) -> ClosedLoopMaps:
    """Close the measurement loop with a static gain and build all nine maps.

    ``k0`` may be zero for an open-loop-stable plant, which reproduces the
    open-loop maps.  All nine impulse responses share one stacked computation
    (same A_cl) and therefore one uniform tail bound.

    Raises
    ------
    NotSchurStable
        If ``rho(A + B K0 C) >= 1 - SCHUR_MARGIN``.
    """
    k0 = _as_matrix(k0, "k0")
    n, m, p, q, r, s = plant.n, plant.m, plant.p, plant.q, plant.r, plant.s
    if k0.shape != (m, r):
        raise ValueError(f"k0 has shape {k0.shape}, expected ({m}, {r})")

    a_cl = plant.a + plant.b @ k0 @ plant.c
    if spectral_radius(a_cl) >= 1.0 - SCHUR_MARGIN:
        raise NotSchurStable(
            f"closed-loop spectral radius {spectral_radius(a_cl):.12g} is not below 1"
        )
    b_w_cl = plant.b @ k0 @ plant.d_w + plant.b_w
    c_alpha_cl = plant.c_alpha + plant.d_alpha_u @ k0 @ plant.c
    d_alpha_w_cl = plant.d_alpha_u @ k0 @ plant.d_w + plant.d_alpha_w

    cc = np.vstack([np.eye(n), plant.c, c_alpha_cl])
    bc = np.hstack([plant.b, b_w_cl, plant.b_delta])
    dc = np.zeros((n + r + s, m + p + q))
    dc[n:n + r, m:m + p] = plant.d_w
    dc[n + r:, :m] = plant.d_alpha_u
    dc[n + r:, m:m + p] = d_alpha_w_cl

    full = impulse_response(a_cl, bc, cc, dc, eps_trunc)
    rows = {"x": slice(0, n), "y": slice(n, n + r), "alpha": slice(n + r, n + r + s)}
    cols = {"u": slice(0, m), "w": slice(m, m + p), "delta": slice(m + p, m + p + q)}

    def blk(out_name, in_name):
        return full.block(rows[out_name], cols[in_name])

    return ClosedLoopMaps(
        xu=blk("x", "u"), xw=blk("x", "w"), xdelta=blk("x", "delta"),
        yu=blk("y", "u"), yw=blk("y", "w"), ydelta=blk("y", "delta"),
        alpha_u=blk("alpha", "u"), alpha_w=blk("alpha", "w"), alpha_delta=blk("alpha", "delta"),
        a_cl=a_cl, b_u=plant.b, b_w_cl=b_w_cl, b_delta=plant.b_delta,
        c_y=plant.c, c_alpha_cl=c_alpha_cl, d_yw=plant.d_w,
        d_alpha_u=plant.d_alpha_u, d_alpha_w_cl=d_alpha_w_cl,
    )


# ---------------------------------------------------------------------------
# Plant file format.
#
# JSON object with named matrix fields "A","B","Bw","Bdelta","C","Dw",
# "Calpha","Dalpha_u","Dalpha_w", each {"rows": int, "cols": int,
# "data": [row-major floats]}, plus "x_lim"/"y_lim"/"u_lim" arrays (null
# entries mean unconstrained) and a scalar "w_inf".  Missing uncertainty
# matrices default to zero.  An optional "Gamma_Delta" matrix carries the
# learned uncertainty gain.  Angles and every other quantity are in the
# plant's native units (radians for the bundled cart-pole).
# ---------------------------------------------------------------------------


def matrix_to_dict(arr: np.ndarray) -> dict:
    arr = _as_matrix(arr)
    return {"rows": arr.shape[0], "cols": arr.shape[1], "data": [float(v) for v in arr.ravel()]}


def matrix_from_dict(obj: dict, name: str = "matrix") -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = np.asarray(obj["data"], dtype=float)
    if data.size != rows * cols:
        raise ValueError(f"{name}: data length {data.size} != rows*cols = {rows * cols}")
    return data.reshape(rows, cols)


def _limits_to_list(vec: np.ndarray) -> list:
    return [None if np.isinf(v) else float(v) for v in vec]


def _limits_from_list(values, dim: int, name: str) -> np.ndarray:
    if values is None:
        return np.full(dim, np.inf)
    vec = np.array([np.inf if v is None else float(v) for v in values])
    if vec.shape != (dim,):
        raise ValueError(f"{name} has length {vec.shape[0]}, expected {dim}")
    return vec


def plant_to_dict(plant: StateSpacePlant, gamma_delta: np.ndarray | None = None) -> dict:
    obj = {
        "A": matrix_to_dict(plant.a),
        "B": matrix_to_dict(plant.b),
        "Bw": matrix_to_dict(plant.b_w),
        "Bdelta": matrix_to_dict(plant.b_delta),
        "C": matrix_to_dict(plant.c),
        "Dw": matrix_to_dict(plant.d_w),
        "Calpha": matrix_to_dict(plant.c_alpha),
        "Dalpha_u": matrix_to_dict(plant.d_alpha_u),
        "Dalpha_w": matrix_to_dict(plant.d_alpha_w),
        "x_lim": _limits_to_list(plant.x_lim),
        "y_lim": _limits_to_list(plant.y_lim),
        "u_lim": _limits_to_list(plant.u_lim),
        "w_inf": float(plant.w_inf),
    }
    if gamma_delta is not None:
        obj["Gamma_Delta"] = matrix_to_dict(gamma_delta)
    return obj


def plant_from_dict(obj: dict) -> tuple[StateSpacePlant, np.ndarray | None]:
    """Plant plus the optional uncertainty gain ``Gamma_Delta`` (may be None)."""
    a = matrix_from_dict(obj["A"], "A")
    b = matrix_from_dict(obj["B"], "B")
    n, m = a.shape[0], b.shape[1]

    def opt(name):
        return matrix_from_dict(obj[name], name) if name in obj and obj[name] is not None else None

    b_w, d_w = opt("Bw"), opt("Dw")
    p = b_w.shape[1] if b_w is not None else (d_w.shape[1] if d_w is not None else 1)
    c = opt("C")
    c = np.eye(n) if c is None else c
    r = c.shape[0]
    b_delta = opt("Bdelta")
    b_delta = np.zeros((n, 0)) if b_delta is None else b_delta
    c_alpha = opt("Calpha")
    c_alpha = np.zeros((0, n)) if c_alpha is None else c_alpha
    s = c_alpha.shape[0]
    d_alpha_u = opt("Dalpha_u")
    d_alpha_w = opt("Dalpha_w")
    plant = StateSpacePlant(
        a=a, b=b,
        b_w=np.zeros((n, p)) if b_w is None else b_w,
        b_delta=b_delta,
        c=c,
        d_w=np.zeros((r, p)) if d_w is None else d_w,
        c_alpha=c_alpha,
        d_alpha_u=np.zeros((s, m)) if d_alpha_u is None else d_alpha_u,
        d_alpha_w=np.zeros((s, p)) if d_alpha_w is None else d_alpha_w,
        x_lim=_limits_from_list(obj.get("x_lim"), n, "x_lim"),
        y_lim=_limits_from_list(obj.get("y_lim"), r, "y_lim"),
        u_lim=_limits_from_list(obj.get("u_lim"), m, "u_lim"),
        w_inf=float(obj.get("w_inf", 0.0)),
    )
    gamma = opt("Gamma_Delta")
    return plant, gamma


def save_plant(path, plant: StateSpacePlant, gamma_delta: np.ndarray | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(plant_to_dict(plant, gamma_delta), fh, indent=1)
        fh.write("\n")


def load_plant(path) -> tuple[StateSpacePlant, np.ndarray | None]:
    with open(path) as fh:
        return plant_from_dict(json.load(fh))
