"""Shared fixtures: the cart-pole stack and random-system generators."""

import numpy as np
import pytest

from loopcert import linsys, neural, plant, policysynth
from loopcert.certify import check_lemma1

# One clone is trained per session and shared by every test that needs the
# cart-pole policy; the config is the reference configuration used across
# the suite (wide enough sampling box for the loop-amplified coordinates).
CLONE_CONFIG = policysynth.CloneConfig(
    hidden=(16, 16, 16),
    box_radius=(1.0, 1.0, 0.25, 0.6),
    n_samples=4000,
    steps=3000,
    seed=7,
)


@pytest.fixture(scope="session")
def cartpole():
    return plant.cartpole_linearized()


@pytest.fixture(scope="session")
def cartpole_nl():
    return plant.cartpole_nonlinear()


@pytest.fixture(scope="session")
def lqr_gain(cartpole):
    _, k = policysynth.dare_solve(cartpole.a, cartpole.b, np.eye(4), [[1.0]])
    return k


@pytest.fixture(scope="session")
def kd(lqr_gain):
    return -lqr_gain


@pytest.fixture(scope="session")
def cloned_policy(lqr_gain):
    return policysynth.behavior_clone(lqr_gain, CLONE_CONFIG).net


def scalar_plant(a=0.5, w_inf=0.1, **kwargs):
    """The scalar reference loop: x+ = a x + u + w, y = x."""
    return linsys.make_plant([[a]], [[1.0]], b_w=[[1.0]], w_inf=w_inf, **kwargs)


def linear_policy(gain=-0.2):
    return neural.mlp([(np.array([[float(gain)]]), np.array([0.0]))])


def single_relu_policy():
    """pi(y) = relu(y): one ReLU neuron behind an identity readout."""
    return neural.mlp([
        (np.array([[1.0]]), np.array([0.0])),
        (np.array([[1.0]]), np.array([0.0])),
    ])


def random_relu_net(rng, max_hidden_layers=3, max_width=16, d_in=None, d_out=None):
    d_in = int(rng.integers(1, 5)) if d_in is None else d_in
    d_out = int(rng.integers(1, 4)) if d_out is None else d_out
    widths = [int(rng.integers(1, max_width + 1))
              for _ in range(int(rng.integers(1, max_hidden_layers + 1)))]
    dims = [d_in] + widths + [d_out]
    pairs = [(rng.normal(size=(b, a)) / np.sqrt(a), rng.normal(size=b) * 0.5)
             for a, b in zip(dims[:-1], dims[1:])]
    return neural.mlp(pairs)


def random_stable_plant(rng, n_max=4, with_uncertainty=True):
    """Random Schur-stable plant with all channels populated."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, 3))
    p = int(rng.integers(1, 3))
    r = int(rng.integers(1, 3))
    if with_uncertainty:
        q = int(rng.integers(1, 3))
        s = int(rng.integers(1, 3))
    else:
        q = s = 0
    a = rng.normal(size=(n, n))
    rho = linsys.spectral_radius(a)
    a = a * (rng.uniform(0.2, 0.9) / max(rho, 1e-9))
    return linsys.make_plant(
        a, rng.normal(size=(n, m)),
        b_w=rng.normal(size=(n, p)),
        b_delta=rng.normal(size=(n, q)),
        c=rng.normal(size=(r, n)),
        d_w=rng.normal(size=(r, p)) * 0.3,
        c_alpha=rng.normal(size=(s, n)),
        d_alpha_u=rng.normal(size=(s, m)) * 0.3,
        d_alpha_w=rng.normal(size=(s, p)) * 0.3,
    )


def valid_small_gains(maps, rng):
    """(gamma_pi, gamma_delta) with both small-gain conditions satisfied."""
    norm_ad = linsys.l1_norm(maps.alpha_delta)
    if norm_ad > 0 and maps.dims[3] > 0:
        gamma_delta = float(rng.uniform(0.0, 0.8)) / norm_ad
    else:
        gamma_delta = float(rng.uniform(0.0, 1.0))
    probe = check_lemma1(maps, 1.0, gamma_delta, 1.0, np.inf)
    denom = probe.beta2  # beta2 at gamma_pi = 1
    if denom > 0:
        gamma_pi = float(rng.uniform(0.05, 0.9)) / denom
    else:
        gamma_pi = float(rng.uniform(0.1, 2.0))
    return gamma_pi, gamma_delta
