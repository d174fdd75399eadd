"""Transfer-matrix algebra against closed-form geometric-series oracles."""

import numpy as np
import pytest

from loopcert import linsys
from loopcert.linsys import (
    NotSchurStable,
    abs_transfer,
    close_loop,
    hinf_norm,
    impulse_response,
    l1_norm,
    make_plant,
    spectral_radius,
)

from conftest import random_stable_plant, scalar_plant


class TestSpectralRadius:
    def test_diagonal(self):
        assert spectral_radius(np.diag([0.3, -0.9])) == pytest.approx(0.9, rel=1e-10)

    def test_identity(self):
        assert spectral_radius(np.eye(3)) == pytest.approx(1.0, rel=1e-10)

    def test_cartpole_closed_loop_vs_companion_roots(self, cartpole, lqr_gain):
        a_cl = cartpole.a - cartpole.b @ lqr_gain
        rho = spectral_radius(a_cl)
        assert rho < 1.0
        # independent oracle: roots of the characteristic polynomial
        oracle = np.max(np.abs(np.roots(np.poly(a_cl))))
        assert rho == pytest.approx(oracle, rel=1e-10)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            spectral_radius(np.ones((2, 3)))


class TestImpulseResponse:
    def test_scalar_geometric(self):
        phi = impulse_response([[0.5]], [[1.0]], [[1.0]], [[0.0]], eps_trunc=1e-9)
        assert phi.impulse[0, 0, 0] == 0.0
        for t in range(1, 6):
            assert phi.impulse[t, 0, 0] == pytest.approx(0.5 ** (t - 1))
        # the geometric series sums to 2; the truncated total must bracket it
        total = abs_transfer(phi)[0, 0]
        assert 2.0 <= total <= 2.0 + 1e-9

    def test_tightening_eps_never_decreases_below_exact(self):
        previous = np.inf
        for eps in (1e-3, 1e-6, 1e-9, 1e-12):
            total = abs_transfer(impulse_response([[0.5]], [[1.0]], [[1.0]], [[0.0]], eps))[0, 0]
            assert 2.0 <= total <= previous + 1e-15
            previous = total

    def test_deadbeat_exact(self):
        phi = impulse_response(np.zeros((2, 2)), np.eye(2), np.eye(2), np.zeros((2, 2)))
        assert phi.length == 2
        assert phi.tail_bound == 0.0
        assert np.array_equal(phi.impulse[1], np.eye(2))

    def test_static_system(self):
        phi = impulse_response([[0.5]], np.zeros((1, 2)), [[1.0]], [[1.0, -2.0]])
        assert phi.tail_bound == 0.0
        assert np.array_equal(phi.impulse[0], [[1.0, -2.0]])

    def test_unstable_raises(self):
        with pytest.raises(NotSchurStable):
            impulse_response([[1.0]], [[1.0]], [[1.0]], [[0.0]])


class TestAbsTransferAndL1:
    def test_scalar_value(self):
        phi = impulse_response([[0.5]], [[1.0]], [[1.0]], [[0.0]])
        assert l1_norm(phi) == pytest.approx(2.0, abs=1e-6)

    def test_static_gain_abs(self):
        phi = impulse_response(np.zeros((1, 1)), np.zeros((1, 2)), np.zeros((1, 1)),
                               [[1.0, -2.0]])
        assert np.array_equal(abs_transfer(phi), [[1.0, 2.0]])

    def test_static_max_row_sum(self):
        phi = impulse_response(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)),
                               [[1.0, -2.0], [0.5, 0.5]])
        assert l1_norm(phi) == pytest.approx(3.0)

    def test_zero_system(self):
        phi = impulse_response([[0.5]], [[0.0]], [[1.0]], [[0.0]])
        assert l1_norm(phi) == 0.0

    def test_simulated_outputs_respect_abs_bound(self):
        # |y[t]| <= abs(Phi) w_bar for any |w| <= w_bar; 100 random systems
        # simulated in lockstep for 10^4 steps.
        rng = np.random.default_rng(0)
        count, steps, n, p, r = 100, 10_000, 4, 2, 2
        a_all = np.empty((count, n, n))
        b_all = rng.normal(size=(count, n, p))
        c_all = rng.normal(size=(count, r, n))
        d_all = rng.normal(size=(count, r, p)) * 0.5
        bounds = np.empty((count, r))
        w_bar = rng.uniform(0.1, 2.0, size=(count, p))
        for i in range(count):
            a = rng.normal(size=(n, n))
            a_all[i] = a * (rng.uniform(0.2, 0.9) / max(linsys.spectral_radius(a), 1e-9))
            phi = impulse_response(a_all[i], b_all[i], c_all[i], d_all[i])
            bounds[i] = abs_transfer(phi) @ w_bar[i]
        x = np.zeros((count, n))
        worst = np.zeros((count, r))
        for _ in range(steps):
            w = rng.uniform(-w_bar, w_bar)
            y = np.einsum("irn,in->ir", c_all, x) + np.einsum("irp,ip->ir", d_all, w)
            worst = np.maximum(worst, np.abs(y))
            x = np.einsum("inm,im->in", a_all, x) + np.einsum("inp,ip->in", b_all, w)
        assert np.all(worst <= bounds + 1e-9)


class TestHinfNorm:
    def test_scalar_peak_at_dc(self):
        assert hinf_norm([[0.5]], [[1.0]], [[1.0]], [[0.0]]) == pytest.approx(2.0, abs=1e-3)

    def test_scalar_peak_at_nyquist(self):
        assert hinf_norm([[-0.5]], [[1.0]], [[1.0]], [[0.0]]) == pytest.approx(2.0, abs=1e-3)

    def test_static_is_largest_singular_value(self):
        d = np.array([[1.0, 2.0], [0.0, 1.0]])
        expected = np.linalg.svd(d, compute_uv=False)[0]
        got = hinf_norm(np.zeros((1, 1)), np.zeros((1, 2)), np.zeros((2, 1)), d)
        assert got == pytest.approx(expected, rel=1e-9)

    def test_scalar_analytic_vs_l1(self):
        # no ordering asserted between the norms; each matches its own value
        phi = impulse_response([[0.5]], [[1.0]], [[1.0]], [[0.0]])
        assert l1_norm(phi) == pytest.approx(2.0, abs=1e-6)
        assert hinf_norm([[0.5]], [[1.0]], [[1.0]], [[0.0]]) == pytest.approx(2.0, abs=1e-6)

    def test_grid_floor(self):
        with pytest.raises(ValueError):
            hinf_norm([[0.5]], [[1.0]], [[1.0]], [[0.0]], grid=32)


class TestCloseLoop:
    def test_open_loop_scalar_norms(self):
        maps = close_loop(scalar_plant(), np.zeros((1, 1)))
        assert l1_norm(maps.yu) == pytest.approx(2.0, abs=1e-6)
        assert l1_norm(maps.yw) == pytest.approx(2.0, abs=1e-6)

    def test_stabilized_unstable_scalar(self):
        plant = make_plant([[1.2]], [[1.0]], b_w=[[1.0]])
        maps = close_loop(plant, [[-0.9]])
        assert abs_transfer(maps.yw)[0, 0] == pytest.approx(1.0 / 0.7, abs=1e-6)

    def test_rejects_unstable_closure(self):
        plant = make_plant([[1.2]], [[1.0]], b_w=[[1.0]])
        with pytest.raises(NotSchurStable):
            close_loop(plant, [[-0.15]])  # a_cl = 1.05

    def test_zero_gain_reproduces_open_loop_maps(self):
        rng = np.random.default_rng(5)
        plant = random_stable_plant(rng)
        maps = close_loop(plant, np.zeros((plant.m, plant.r)))
        direct = {
            "xu": impulse_response(plant.a, plant.b, np.eye(plant.n),
                                   np.zeros((plant.n, plant.m))),
            "yw": impulse_response(plant.a, plant.b_w, plant.c, plant.d_w),
            "alpha_u": impulse_response(plant.a, plant.b, plant.c_alpha, plant.d_alpha_u),
            "alpha_delta": impulse_response(plant.a, plant.b_delta, plant.c_alpha,
                                            np.zeros((plant.s, plant.q))),
        }
        for name, phi in direct.items():
            closed = getattr(maps, name)
            common = min(phi.length, closed.length)
            np.testing.assert_allclose(closed.impulse[:common], phi.impulse[:common],
                                       atol=1e-13)
            assert abs(l1_norm(closed) - l1_norm(phi)) < 1e-8


class TestPlantFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        plant = random_stable_plant(rng)
        path = tmp_path / "plant.json"
        linsys.save_plant(path, plant, gamma_delta=np.abs(rng.normal(size=(plant.q, plant.s))))
        loaded, gamma = linsys.load_plant(path)
        for name in ("a", "b", "b_w", "b_delta", "c", "d_w", "c_alpha",
                     "d_alpha_u", "d_alpha_w", "x_lim", "y_lim", "u_lim"):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(plant, name))
        assert loaded.w_inf == plant.w_inf
        assert gamma is not None and gamma.shape == (plant.q, plant.s)

    def test_missing_uncertainty_defaults_to_zero_width(self, tmp_path):
        path = tmp_path / "plant.json"
        obj = {
            "A": {"rows": 1, "cols": 1, "data": [0.5]},
            "B": {"rows": 1, "cols": 1, "data": [1.0]},
            "Dw": {"rows": 1, "cols": 1, "data": [1.0]},
            "w_inf": 0.1,
        }
        import json

        path.write_text(json.dumps(obj))
        plant, gamma = linsys.load_plant(path)
        assert (plant.q, plant.s) == (0, 0)
        assert gamma is None
        assert np.all(np.isinf(plant.x_lim))

    def test_infinite_limits_serialized_as_null(self, tmp_path):
        path = tmp_path / "plant.json"
        linsys.save_plant(path, scalar_plant())
        assert '"x_lim": [\n  null\n ]' in path.read_text()
