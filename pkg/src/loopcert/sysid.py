"""Model learning: least-squares identification with bootstrap error boxes.

Episodes of (state, input) pairs from a black-box plant are regressed onto a
one-step linear model ``x[t+1] ~ A x[t] + B u[t]``.  The modeling error is
over-approximated by refitting on bootstrap resamples of the episodes and
taking the elementwise maximum deviation from the nominal fit:

    Delta_A = max_j |A_j - A_0|,   Delta_B = max_j |B_j - B_0|.

Every bootstrap fit lies inside the reported box by construction; empirically
the true local linearization falls inside it with high probability once
enough episodes are collected.  The box feeds certification as the gain
matrix ``Gamma_Delta = [Delta_A  Delta_B]`` of the uncertainty channel
``|delta| <= Gamma_Delta |alpha|`` with ``alpha = (x, u)``.

Resampling is per episode (not per transition), matching the episodic
structure of the data collection.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .linsys import StateSpacePlant, make_plant
from .plant import NonlinearPlant

__all__ = [
    "RankDeficient",
    "Episode",
    "LearnedModel",
    "collect",
    "least_squares_fit",
    "bootstrap_uncertainty",
    "uncertain_plant",
    "save_episodes",
    "load_episodes",
]

_COND_LIMIT = 1e12


class RankDeficient(ValueError):
    """The regressor Gram matrix is numerically singular."""


@dataclass(frozen=True)
class Episode:
    """One rollout: ``states`` has one more row than ``inputs``."""

    states: np.ndarray
    inputs: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.states, dtype=float)
        u = np.asarray(self.inputs, dtype=float)
        if x.ndim != 2 or u.ndim != 2 or x.shape[0] != u.shape[0] + 1:
            raise ValueError("states must have exactly one more row than inputs")
        object.__setattr__(self, "states", x)
        object.__setattr__(self, "inputs", u)


@dataclass(frozen=True)
class LearnedModel:
    """Nominal (A0, B0) plus elementwise bootstrap deviation boxes."""

    a0: np.ndarray
    b0: np.ndarray
    delta_a: np.ndarray
    delta_b: np.ndarray

    @property
    def gamma_delta(self) -> np.ndarray:
        return np.hstack([self.delta_a, self.delta_b])


def collect(plant: NonlinearPlant, n_episodes: int, ep_len: int = 30,
            u_amplitude: float = 0.5, seed: int = 0) -> list[Episode]:
    """Roll out ``n_episodes`` from the origin under i.i.d. uniform inputs."""
    if n_episodes < 1:
        raise ValueError("need at least one episode")
    rng = np.random.default_rng(seed)
    n = plant.n
    episodes = []
    for _ in range(n_episodes):
        inputs = rng.uniform(-u_amplitude, u_amplitude, size=(ep_len, 1))
        states = np.empty((ep_len + 1, n))
        states[0] = 0.0
        for t in range(ep_len):
            states[t + 1] = plant.step(states[t], inputs[t])
        episodes.append(Episode(states=states, inputs=inputs))
    return episodes


def _stack(episodes) -> tuple[np.ndarray, np.ndarray]:
    regressors = np.vstack([np.hstack([ep.states[:-1], ep.inputs]) for ep in episodes])
    targets = np.vstack([ep.states[1:] for ep in episodes])
    return regressors, targets


def least_squares_fit(episodes) -> tuple[np.ndarray, np.ndarray]:
    """Minimize ``sum ||x[t+1] - A x[t] - B u[t]||^2`` over all transitions.

    Solved by orthogonal factorization.  Raises :exc:`RankDeficient` when the
    regressor Gram matrix has condition number above 1e12 (the excitation
    does not identify the model).
    """
    regressors, targets = _stack(episodes)
    n = targets.shape[1]
    if regressors.shape[0] < regressors.shape[1]:
        raise RankDeficient("fewer transitions than parameters per state row")
    # column equilibration keeps the singularity test scale-free
    scale = np.max(np.abs(regressors), axis=0)
    if np.any(scale == 0.0):
        raise RankDeficient("a regressor column is identically zero")
    gram = (regressors / scale).T @ (regressors / scale)
    if np.linalg.cond(gram) > _COND_LIMIT:
        raise RankDeficient("regressor Gram matrix is numerically singular")
    theta, *_ = np.linalg.lstsq(regressors, targets, rcond=None)
    theta = theta.T
    return theta[:, :n], theta[:, n:]


def bootstrap_uncertainty(episodes, n_boot: int = 100, seed: int = 0) -> LearnedModel:
    """Nominal fit plus elementwise max deviation over bootstrap refits.

    Episodes are resampled with replacement ``n_boot`` times; each resample
    is refit and its deviation from the full-data fit recorded.  The box
    contains every bootstrap fit by construction.
    """
    if n_boot < 2:
        raise ValueError("need at least two bootstrap resamples")
    episodes = list(episodes)
    a0, b0 = least_squares_fit(episodes)
    delta_a = np.zeros_like(a0)
    delta_b = np.zeros_like(b0)
    rng = np.random.default_rng(seed)
    for _ in range(n_boot):
        picks = rng.integers(0, len(episodes), size=len(episodes))
        a_j, b_j = least_squares_fit([episodes[i] for i in picks])
        delta_a = np.maximum(delta_a, np.abs(a_j - a0))
        delta_b = np.maximum(delta_b, np.abs(b_j - b0))
    return LearnedModel(a0=a0, b0=b0, delta_a=delta_a, delta_b=delta_b)


def save_episodes(path, episodes) -> None:
    """Episodes as CSV rows ``episode,t,x_1..,u_1..`` at full precision.

    The final state of each episode appears with empty input cells.
    """
    episodes = list(episodes)
    n = episodes[0].states.shape[1]
    m = episodes[0].inputs.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "t"] + [f"x_{i + 1}" for i in range(n)]
                        + [f"u_{j + 1}" for j in range(m)])
        for index, ep in enumerate(episodes):
            steps = ep.inputs.shape[0]
            for t in range(steps + 1):
                state = [f"{v:.17g}" for v in ep.states[t]]
                inputs = [f"{v:.17g}" for v in ep.inputs[t]] if t < steps else [""] * m
                writer.writerow([index, t] + state + inputs)


def load_episodes(path) -> list[Episode]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = sum(1 for name in header if name.startswith("x_"))
        rows: dict[int, list] = {}
        for row in reader:
            rows.setdefault(int(row[0]), []).append(row[1:])
    episodes = []
    for index in sorted(rows):
        chunk = sorted(rows[index], key=lambda r: int(r[0]))
        states = np.array([[float(v) for v in r[1:1 + n]] for r in chunk])
        inputs = np.array([[float(v) for v in r[1 + n:]] for r in chunk[:-1]])
        episodes.append(Episode(states=states, inputs=inputs))
    return episodes


def uncertain_plant(model: LearnedModel, *, c=None, d_w=None, b_w=None,
                    x_lim=None, y_lim=None, u_lim=None,
                    w_inf: float = 0.0) -> StateSpacePlant:
    """Wrap a learned model as an uncertain plant.

    The uncertainty output enters the state additively (``B_delta = I``) and
    its input stacks state over control (``alpha = (x, u)``), so
    ``|delta| <= [Delta_A  Delta_B] |alpha|`` covers every linear model inside
    the learned box.  Pair with ``model.gamma_delta`` for certification.
    """
    n, m = model.a0.shape[0], model.b0.shape[1]
    c_alpha = np.vstack([np.eye(n), np.zeros((m, n))])
    d_alpha_u = np.vstack([np.zeros((n, m)), np.eye(m)])
    return make_plant(model.a0, model.b0, b_w=b_w, b_delta=np.eye(n), c=c, d_w=d_w,
                      c_alpha=c_alpha, d_alpha_u=d_alpha_u,
                      x_lim=x_lim, y_lim=y_lim, u_lim=u_lim, w_inf=w_inf)
