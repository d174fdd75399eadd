"""Network evaluation, interval bounds and relaxation envelopes."""

import numpy as np
import pytest

from loopcert import neural
from loopcert.neural import (
    Box,
    OnKink,
    QuantizationSpec,
    concretize,
    evaluate,
    interval_bounds,
    jacobian_at,
    linear_relaxation,
    magnitude_bound,
    quantized_concretize,
    residual_bounds,
)

from conftest import random_relu_net, single_relu_policy


def _loop_forward(net, y):
    """Independent straight-line re-implementation of the forward pass."""
    z = [float(v) for v in y]
    for layer in net.layers:
        out = []
        for i in range(layer.weight.shape[0]):
            acc = float(layer.bias[i])
            for j in range(layer.weight.shape[1]):
                acc += float(layer.weight[i, j]) * z[j]
            out.append(max(acc, 0.0) if layer.activation == "relu" else acc)
        z = out
    return np.array(z)


class TestEvaluate:
    def test_single_linear_layer(self):
        net = neural.mlp([(np.array([[2.0]]), np.array([1.0]))])
        assert evaluate(net, [3.0]) == pytest.approx([7.0])

    def test_single_relu_clamps(self):
        assert evaluate(single_relu_policy(), [-1.0]) == pytest.approx([0.0])

    def test_matches_loop_reimplementation(self):
        rng = np.random.default_rng(1)
        net = random_relu_net(rng, max_hidden_layers=2, d_in=3, d_out=2)
        for _ in range(100):
            y = rng.normal(size=3)
            np.testing.assert_allclose(evaluate(net, y), _loop_forward(net, y),
                                       rtol=1e-12, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            evaluate(single_relu_policy(), [1.0, 2.0])


class TestIntervalBounds:
    def test_signed_linear_layer(self):
        net = neural.mlp([(np.array([[1.0, -1.0]]), np.array([0.0]))])
        _, (lo, hi) = interval_bounds(net, Box.symmetric([1.0, 1.0]))
        assert lo == pytest.approx([-2.0])
        assert hi == pytest.approx([2.0])

    def test_zero_radius_collapses_to_evaluation(self):
        rng = np.random.default_rng(2)
        net = random_relu_net(rng, d_in=3)
        center = rng.normal(size=3)
        _, (lo, hi) = interval_bounds(net, Box(center, np.zeros(3)))
        np.testing.assert_allclose(lo, evaluate(net, center), atol=1e-12)
        np.testing.assert_allclose(hi, evaluate(net, center), atol=1e-12)

    def test_samples_stay_inside(self):
        rng = np.random.default_rng(3)
        net = random_relu_net(rng, max_hidden_layers=3, d_in=2, d_out=2)
        box = Box(rng.normal(size=2) * 0.3, rng.uniform(0.2, 1.0, size=2))
        pre, (lo, hi) = interval_bounds(net, box)
        ys = rng.uniform(box.center - box.radius, box.center + box.radius,
                         size=(10_000, 2))
        outs = evaluate(net, ys)
        assert np.all(outs >= lo - 1e-9) and np.all(outs <= hi + 1e-9)
        # every layer's sampled pre-activations inside the reported intervals
        z = ys
        for (p_lo, p_hi), layer in zip(pre, net.layers):
            z = z @ layer.weight.T + layer.bias
            assert np.all(z >= p_lo - 1e-9) and np.all(z <= p_hi + 1e-9)
            if layer.activation == "relu":
                z = np.maximum(z, 0.0)


class TestLinearRelaxation:
    def test_single_relu_lines(self):
        lb = linear_relaxation(single_relu_policy(), Box.symmetric([1.0]))
        np.testing.assert_allclose(lb.k_u, [[0.5]])
        np.testing.assert_allclose(lb.b_u, [0.5])
        np.testing.assert_allclose(lb.k_l, [[1.0]])
        np.testing.assert_allclose(lb.b_l, [0.0])
        # grid oracle: the envelope encloses relu on a dense grid
        grid = np.linspace(-1.0, 1.0, 1001)
        vals = np.maximum(grid, 0.0)
        assert np.all(vals <= 0.5 * grid + 0.5 + 1e-12)
        assert np.all(vals >= 1.0 * grid - 1e-12)

    def test_pure_linear_net_is_exact(self):
        w1, b1 = np.array([[1.0, 2.0], [0.5, -1.0]]), np.array([0.1, -0.2])
        w2, b2 = np.array([[1.0, -1.0]]), np.array([0.3])
        net = neural.ReluNetwork((neural.Layer(w1, b1, "linear"),
                                  neural.Layer(w2, b2, "linear")))
        lb = linear_relaxation(net, Box.symmetric([1.0, 1.0]))
        np.testing.assert_allclose(lb.k_l, w2 @ w1)
        np.testing.assert_allclose(lb.k_u, w2 @ w1)
        np.testing.assert_allclose(lb.b_l, w2 @ b1 + b2)
        np.testing.assert_allclose(lb.b_u, w2 @ b1 + b2)

    def test_all_dead_net_constant(self):
        net = neural.mlp([(np.array([[1.0]]), np.array([-10.0])),
                          (np.array([[2.0]]), np.array([0.5]))])
        lb = linear_relaxation(net, Box.symmetric([1.0]))
        np.testing.assert_allclose(lb.k_l, [[0.0]])
        np.testing.assert_allclose(lb.k_u, [[0.0]])
        np.testing.assert_allclose(lb.b_l, [0.5])
        np.testing.assert_allclose(lb.b_u, [0.5])

    def test_soundness_on_random_nets(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            net = random_relu_net(rng)
            d = net.input_dim
            box = Box(rng.normal(size=d) * 0.5, rng.uniform(0.05, 1.5, size=d))
            lb = linear_relaxation(net, box)
            ys = rng.uniform(box.center - box.radius, box.center + box.radius,
                             size=(2000, d))
            outs = evaluate(net, ys)
            assert np.all(outs <= ys @ lb.k_u.T + lb.b_u + 1e-9)
            assert np.all(outs >= ys @ lb.k_l.T + lb.b_l - 1e-9)


class TestConcretize:
    def test_single_relu(self):
        box = Box.symmetric([1.0])
        u_min, u_max = concretize(linear_relaxation(single_relu_policy(), box), box)
        assert u_min == pytest.approx([-1.0])
        assert u_max == pytest.approx([1.0])
        assert magnitude_bound(u_min, u_max) == pytest.approx([1.0])

    def test_zero_radius_is_exact(self):
        rng = np.random.default_rng(5)
        net = random_relu_net(rng, d_in=3)
        y0 = rng.normal(size=3)
        box = Box(y0, np.zeros(3))
        u_min, u_max = concretize(linear_relaxation(net, box), box)
        np.testing.assert_allclose(u_min, evaluate(net, y0), atol=1e-10)
        np.testing.assert_allclose(u_max, evaluate(net, y0), atol=1e-10)

    def test_linear_gain(self):
        net = neural.mlp([(np.array([[2.0]]), np.array([0.0]))])
        box = Box.symmetric([0.5])
        u_min, u_max = concretize(linear_relaxation(net, box), box)
        assert magnitude_bound(u_min, u_max) == pytest.approx([1.0])


class TestResidualBounds:
    def test_exactly_linear_residual_vanishes(self):
        net = neural.mlp([(np.array([[0.7, -0.3]]), np.array([0.0]))])
        u0, u_full = residual_bounds(net, Box.symmetric([2.0, 1.0]),
                                     np.array([[0.7, -0.3]]))
        assert u0 == pytest.approx([0.0], abs=1e-12)
        assert u_full == pytest.approx([1.7])

    def test_single_relu_half_gain(self):
        # true max |relu(y) - y/2| over [-1, 1] is 0.5; any sound value >= 0.5
        box = Box.symmetric([1.0])
        u0, u_full = residual_bounds(single_relu_policy(), box, [[0.5]])
        grid = np.linspace(-1.0, 1.0, 1001)
        oracle = np.max(np.abs(np.maximum(grid, 0.0) - 0.5 * grid))
        assert oracle == pytest.approx(0.5)
        assert u0[0] >= oracle - 1e-12
        assert u_full == pytest.approx([1.0])

    def test_midpoint_gain_beats_full_bound(self):
        box = Box.symmetric([1.0])
        lb = linear_relaxation(single_relu_policy(), box)
        midpoint = (lb.k_u + lb.k_l) / 2.0
        u0, u_full = residual_bounds(single_relu_policy(), box, midpoint)
        assert u0[0] < u_full[0]

    def test_zero_gain_matches_concretize(self):
        rng = np.random.default_rng(6)
        net = random_relu_net(rng, d_in=2, d_out=2)
        box = Box(np.zeros(2), rng.uniform(0.1, 1.0, size=2))
        u0, u_full = residual_bounds(net, box, np.zeros((2, 2)))
        np.testing.assert_array_equal(u0, u_full)
        lb = linear_relaxation(net, box)
        np.testing.assert_array_equal(u_full, magnitude_bound(*concretize(lb, box)))


class TestJacobian:
    def test_linear_net(self):
        w1 = np.array([[1.0, 2.0], [0.0, 1.0]])
        w2 = np.array([[1.0, -1.0]])
        net = neural.ReluNetwork((neural.Layer(w1, np.zeros(2), "linear"),
                                  neural.Layer(w2, np.zeros(1), "linear")))
        np.testing.assert_allclose(jacobian_at(net, [0.3, -0.4]), w2 @ w1)

    def test_single_relu_pattern(self):
        net = single_relu_policy()
        np.testing.assert_allclose(jacobian_at(net, [1.0]), [[1.0]])
        np.testing.assert_allclose(jacobian_at(net, [-1.0]), [[0.0]])

    def test_on_kink_raises(self):
        with pytest.raises(OnKink):
            jacobian_at(single_relu_policy(), [0.0])

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        net = random_relu_net(rng, d_in=3, d_out=2)
        step = 1e-6
        checked = 0
        while checked < 20:
            y0 = rng.normal(size=3)
            try:
                jac = jacobian_at(net, y0)
            except OnKink:
                continue
            fd = np.empty_like(jac)
            for j in range(3):
                e = np.zeros(3)
                e[j] = step
                fd[:, j] = (evaluate(net, y0 + e) - evaluate(net, y0 - e)) / (2 * step)
            np.testing.assert_allclose(jac, fd, atol=1e-5)
            checked += 1


class TestQuantization:
    def test_widening(self):
        net = single_relu_policy()
        box = Box.symmetric([1.0])
        lb = linear_relaxation(net, box)
        u_min, u_max = quantized_concretize(lb, box, QuantizationSpec(0.1))
        assert u_min == pytest.approx([-1.05])
        assert u_max == pytest.approx([1.05])

    def test_vanishing_step_recovers_plain_bounds(self):
        net = single_relu_policy()
        box = Box.symmetric([1.0])
        lb = linear_relaxation(net, box)
        plain = concretize(lb, box)
        tiny = quantized_concretize(lb, box, QuantizationSpec(1e-15))
        np.testing.assert_allclose(tiny[0], plain[0], atol=1e-12)
        np.testing.assert_allclose(tiny[1], plain[1], atol=1e-12)

    def test_quantized_outputs_inside_widened_bounds(self):
        rng = np.random.default_rng(8)
        net = random_relu_net(rng, d_in=2, d_out=1)
        box = Box(np.zeros(2), rng.uniform(0.2, 1.0, size=2))
        spec = QuantizationSpec(0.1)
        lb = linear_relaxation(net, box)
        lo, hi = quantized_concretize(lb, box, spec)
        ys = rng.uniform(box.center - box.radius, box.center + box.radius,
                         size=(10_000, 2))
        outs = spec.apply(evaluate(net, ys))
        assert np.all(outs >= lo - 1e-12) and np.all(outs <= hi + 1e-12)

    def test_rounding_error_bound(self):
        spec = QuantizationSpec(0.3)
        u = np.linspace(-2.0, 2.0, 1001)
        assert np.max(np.abs(spec.apply(u) - u)) <= 0.15 + 1e-12


class TestRelaxationProperties:
    """Corpus-level soundness, interval dominance and box monotonicity."""

    def _corpus(self, seed=0, count=20):
        rng = np.random.default_rng(seed)
        for _ in range(count):
            net = random_relu_net(rng)
            d = net.input_dim
            center = rng.normal(size=d) * 0.5
            radius = rng.uniform(0.05, 1.5, size=d)
            yield net, Box(center, radius), rng

    def test_magnitude_never_looser_than_intervals(self):
        for net, box, _ in self._corpus(seed=10):
            lb = linear_relaxation(net, box)
            relaxed = magnitude_bound(*concretize(lb, box))
            _, (lo, hi) = interval_bounds(net, box)
            assert np.all(relaxed <= magnitude_bound(lo, hi) + 1e-9)

    def test_shrinking_box_never_loosens(self):
        for net, box, _ in self._corpus(seed=11):
            prev = magnitude_bound(*concretize(linear_relaxation(net, box), box))
            for factor in (0.5, 0.25):
                small = Box(box.center, box.radius * factor)
                cur = magnitude_bound(*concretize(linear_relaxation(net, small), small))
                assert np.all(cur <= prev + 1e-9)
                prev = cur


class TestPolicyFiles:
    def test_round_trip_bit_faithful(self, tmp_path):
        rng = np.random.default_rng(12)
        net = random_relu_net(rng)
        path = tmp_path / "policy.json"
        neural.save_policy(path, net, QuantizationSpec(0.25), metadata={"note": "t"})
        loaded, quant = neural.load_policy(path)
        assert quant is not None and quant.step == 0.25
        for original, copy in zip(net.layers, loaded.layers):
            np.testing.assert_array_equal(original.weight, copy.weight)
            np.testing.assert_array_equal(original.bias, copy.bias)
            assert original.activation == copy.activation

    def test_no_quantization_round_trip(self, tmp_path):
        path = tmp_path / "policy.json"
        neural.save_policy(path, single_relu_policy())
        _, quant = neural.load_policy(path)
        assert quant is None
