"""Network data model, forward pass, error evaluation, init, OWO."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from oigmlp import (Dataset, MlpParams, classification_error, correlations,
                    forward, mse, net_control_init, owo_solve,
                    pad_params_for_new_inputs)
from oigmlp import data as datamod
from conftest import naive_forward


def small_params(n_in, n_hid, n_out, rng, activation="sigmoid"):
    return MlpParams(W=rng.standard_normal((n_hid, n_in + 1)),
                     W_oi=rng.standard_normal((n_out, n_in + 1)),
                     W_oh=rng.standard_normal((n_out, n_hid)),
                     activation=activation)


class TestDataset:
    def test_bias_column_enforced(self):
        with pytest.raises(ValueError):
            Dataset(np.array([[1.0, 0.5]]), np.array([[1.0]]))

    def test_from_arrays_appends_bias(self):
        ds = Dataset.from_arrays(np.array([[2.0], [3.0]]), np.array([1.0, 2.0]))
        assert ds.n_inputs == 1 and ds.n_outputs == 1 and ds.n_patterns == 2
        assert np.all(ds.inputs[:, -1] == 1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Dataset.from_arrays(np.array([[np.inf]]), np.array([[0.0]]))


class TestForward:
    def test_zero_weights(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((4, 2)), rng.standard_normal((4, 1)))
        params = MlpParams(W=np.zeros((3, 3)), W_oi=np.zeros((1, 3)),
                           W_oh=np.zeros((1, 3)), activation="relu")
        cache = forward(params, ds)
        assert np.all(cache.outputs == 0.0)
        assert np.all(cache.act == 0.0)

    def test_relu_cutoff(self):
        ds = Dataset(np.array([[-3.0, 1.0]]), np.array([[0.0]]))
        params = MlpParams(W=np.array([[1.0, 0.0]]), W_oi=np.zeros((1, 2)),
                           W_oh=np.array([[2.0]]), activation="relu")
        cache = forward(params, ds)
        assert cache.net[0, 0] == -3.0
        assert cache.act[0, 0] == 0.0
        assert cache.act_deriv[0, 0] == 0.0
        assert cache.outputs[0, 0] == 0.0

    @pytest.mark.parametrize("activation", ["sigmoid", "relu"])
    def test_matches_per_pattern_loop(self, rng, activation):
        ds = Dataset.from_arrays(rng.standard_normal((3, 2)), rng.standard_normal((3, 2)))
        params = small_params(2, 3, 2, rng, activation)
        cache = forward(params, ds)
        assert_allclose(cache.outputs, naive_forward(params, ds.inputs), atol=1e-12)

    def test_shape_mismatch(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((3, 2)), rng.standard_normal((3, 1)))
        params = small_params(3, 2, 1, rng)
        with pytest.raises(ValueError):
            forward(params, ds)


class TestErrors:
    def test_mse_zero_when_exact(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((4, 2)), np.zeros((4, 1)))
        params = MlpParams(W=np.zeros((2, 3)), W_oi=np.zeros((1, 3)),
                           W_oh=np.zeros((1, 2)))
        assert mse(forward(params, ds), ds) == 0.0

    def test_mse_single_pattern(self):
        ds = Dataset(np.array([[0.0, 1.0]]), np.array([[2.0]]))
        params = MlpParams(W=np.zeros((1, 2)), W_oi=np.zeros((1, 2)),
                           W_oh=np.zeros((1, 1)))
        assert mse(forward(params, ds), ds) == 4.0

    def test_mse_matches_double_sum(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((3, 2)), rng.standard_normal((3, 2)))
        params = small_params(2, 2, 2, rng)
        cache = forward(params, ds)
        total = 0.0
        for p in range(3):
            for i in range(2):
                total += (ds.targets[p, i] - cache.outputs[p, i]) ** 2
        assert_allclose(mse(cache, ds), total / 3, atol=1e-12)

    def test_duplicating_patterns_preserves_mse(self, rng):
        X = rng.standard_normal((5, 2))
        T = rng.standard_normal((5, 1))
        ds = Dataset.from_arrays(X, T)
        ds2 = Dataset.from_arrays(np.vstack([X, X]), np.vstack([T, T]))
        params = small_params(2, 3, 1, rng)
        assert_allclose(mse(forward(params, ds), ds),
                        mse(forward(params, ds2), ds2), rtol=1e-12)


class TestClassificationError:
    def test_exact_outputs(self):
        T = np.eye(3)
        ds = Dataset.from_arrays(np.zeros((3, 1)), T)
        cache = forward(MlpParams(W=np.zeros((1, 2)), W_oi=np.zeros((3, 2)),
                                  W_oh=np.zeros((3, 1))), ds)
        cache = type(cache)(net=cache.net, act=cache.act,
                            act_deriv=cache.act_deriv, outputs=T.copy())
        assert classification_error(cache, ds) == 0.0

    def test_tie_break_to_lowest_index(self):
        # constant outputs predict class 0; errors are all class-1 patterns
        T = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        ds = Dataset.from_arrays(np.zeros((4, 1)), T)
        params = MlpParams(W=np.zeros((1, 2)), W_oi=np.zeros((2, 2)),
                           W_oh=np.zeros((2, 1)))
        assert classification_error(forward(params, ds), ds) == 0.5

    def test_matches_brute_force(self, rng):
        T = np.eye(3)[rng.integers(0, 3, size=10)]
        ds = Dataset.from_arrays(rng.standard_normal((10, 2)), T)
        params = small_params(2, 3, 3, rng)
        cache = forward(params, ds)
        count = sum(int(np.argmax(cache.outputs[p]) != np.argmax(T[p]))
                    for p in range(10))
        assert classification_error(cache, ds) == count / 10

    def test_single_output_rejected(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((4, 2)), np.zeros((4, 1)))
        params = small_params(2, 2, 1, rng)
        with pytest.raises(ValueError):
            classification_error(forward(params, ds), ds)


class TestNetControl:
    def test_net_statistics(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((40, 3)) * 5 + 2,
                                 rng.standard_normal((40, 2)))
        params = net_control_init(ds, n_hidden=6, seed=3)
        net = forward(params, ds).net
        assert_allclose(net.mean(axis=0), 0.5, atol=1e-9)
        assert_allclose(net.std(axis=0), 1.0, atol=1e-9)

    def test_deterministic_per_seed(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((20, 2)), rng.standard_normal((20, 1)))
        a = net_control_init(ds, 4, seed=9)
        b = net_control_init(ds, 4, seed=9)
        assert np.array_equal(a.W, b.W)
        assert np.array_equal(a.W_oi, b.W_oi)
        assert np.array_equal(a.W_oh, b.W_oh)

    def test_seeds_differ_but_statistics_hold(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((30, 2)), rng.standard_normal((30, 1)))
        a = net_control_init(ds, 4, seed=1)
        b = net_control_init(ds, 4, seed=2)
        assert not np.array_equal(a.W, b.W)
        for params in (a, b):
            net = forward(params, ds).net
            assert_allclose(net.mean(axis=0), 0.5, atol=1e-9)
            assert_allclose(net.std(axis=0), 1.0, atol=1e-9)

    def test_constant_inputs_error_after_redraws(self):
        ds = Dataset.from_arrays(np.full((10, 1), 7.0), np.zeros((10, 1)))
        with pytest.raises(ValueError, match="zero variance"):
            net_control_init(ds, 2, seed=0)


class TestCorrelations:
    def test_single_pattern_outer_product(self):
        ds = Dataset(np.array([[1.0, 1.0]]), np.array([[1.0]]))
        pair = correlations(forward(MlpParams(W=np.zeros((1, 2)),
                                              W_oi=np.zeros((1, 2)),
                                              W_oh=np.zeros((1, 1)),
                                              activation="relu"), ds), ds)
        # basis = [1, 1, relu(0)=0]; R = outer([1,1,0]) and C = [1,1,0]
        expected = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        assert_allclose(pair.R, expected, atol=1e-15)
        assert_allclose(pair.C, np.array([[1.0], [1.0], [0.0]]), atol=1e-15)

    def test_matches_brute_force_sum(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((6, 2)), rng.standard_normal((6, 2)))
        params = small_params(2, 2, 2, rng)
        cache = forward(params, ds)
        pair = correlations(cache, ds)
        basis = np.hstack([ds.inputs, cache.act])
        R = np.zeros((5, 5))
        C = np.zeros((5, 2))
        for p in range(6):
            R += np.outer(basis[p], basis[p])
            C += np.outer(basis[p], ds.targets[p])
        assert_allclose(pair.R, R / 6, atol=1e-12)
        assert_allclose(pair.C, C / 6, atol=1e-12)

    def test_duplication_invariance(self, rng):
        X = rng.standard_normal((5, 2))
        T = rng.standard_normal((5, 1))
        params = small_params(2, 2, 1, rng)
        ds = Dataset.from_arrays(X, T)
        ds2 = Dataset.from_arrays(np.vstack([X, X]), np.vstack([T, T]))
        p1 = correlations(forward(params, ds), ds)
        p2 = correlations(forward(params, ds2), ds2)
        assert_allclose(p1.R, p2.R, rtol=1e-12)
        assert_allclose(p1.C, p2.C, rtol=1e-12)


class TestOwoSolve:
    def test_exact_fit_for_linear_targets(self, rng):
        table = datamod.synthesize_regression("linear", 50, seed=4, n_inputs=3)
        ds = table.to_dataset()
        params = net_control_init(ds, 4, seed=0)
        assert mse(forward(params, ds), ds) <= 1e-9

    def test_dead_units_frozen_bypass_still_fits(self, rng):
        table = datamod.synthesize_regression("linear", 40, seed=8, n_inputs=2)
        ds = table.to_dataset()
        W = np.hstack([0.1 * rng.standard_normal((3, 2)), -20.0 * np.ones((3, 1))])
        params = MlpParams(W=W, W_oi=np.zeros((1, 3)), W_oh=np.ones((1, 3)),
                           activation="relu")
        solved = owo_solve(params, ds)
        assert np.all(solved.W_oh == 0.0)  # dead activations are dependent
        assert mse(forward(solved, ds), ds) <= 1e-9

    def test_matches_normal_equations_oracle(self, rng):
        ds = Dataset.from_arrays(rng.standard_normal((30, 3)), rng.standard_normal((30, 2)))
        params = small_params(3, 4, 2, rng)
        solved = owo_solve(params, ds)
        cache = forward(params, ds)
        basis = np.hstack([ds.inputs, cache.act])
        direct, *_ = np.linalg.lstsq(basis, ds.targets, rcond=None)
        best = float(np.sum((ds.targets - basis @ direct) ** 2) / 30)
        achieved = mse(forward(solved, ds), ds)
        assert abs(achieved - best) <= 1e-7 * max(1.0, best)

    def test_never_increases_mse(self, rng):
        for _ in range(10):
            ds = Dataset.from_arrays(rng.standard_normal((15, 2)),
                                     rng.standard_normal((15, 2)))
            params = small_params(2, 3, 2, rng)
            before = mse(forward(params, ds), ds)
            after = mse(forward(owo_solve(params, ds), ds), ds)
            assert after <= before + 1e-9


class TestPadParams:
    def test_padded_network_computes_same_function(self, rng):
        X = rng.standard_normal((8, 3))
        T = rng.standard_normal((8, 1))
        ds = Dataset.from_arrays(X, T)
        params = small_params(3, 2, 1, rng)
        padded = pad_params_for_new_inputs(params, 2)
        X_aug = np.hstack([X, X[:, :1], X[:, 1:2]])
        ds_aug = Dataset.from_arrays(X_aug, T)
        assert_allclose(forward(padded, ds_aug).outputs,
                        forward(params, ds).outputs, atol=1e-15)
