"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from oigmlp import Dataset, MlpParams, forward, mse, net_control_init
from oigmlp import data as datamod


def naive_forward(params: MlpParams, inputs: np.ndarray) -> np.ndarray:
    """Per-pattern, per-unit loop evaluation of the network."""
    n_patterns = inputs.shape[0]
    n_hidden = params.W.shape[0]
    n_out = params.W_oi.shape[0]
    outputs = np.zeros((n_patterns, n_out))
    for p in range(n_patterns):
        act = np.zeros(n_hidden)
        for k in range(n_hidden):
            net = sum(params.W[k, n] * inputs[p, n] for n in range(inputs.shape[1]))
            if params.activation == "relu":
                act[k] = max(0.0, net)
            else:
                act[k] = 1.0 / (1.0 + np.exp(-net))
        for i in range(n_out):
            y = sum(params.W_oi[i, n] * inputs[p, n] for n in range(inputs.shape[1]))
            y += sum(params.W_oh[i, k] * act[k] for k in range(n_hidden))
            outputs[p, i] = y
    return outputs


def central_diff_input_gradient(params: MlpParams, data: Dataset,
                                h: float = 1e-6) -> np.ndarray:
    """Central finite differences of the MSE w.r.t. every input weight."""
    fd = np.zeros_like(params.W)
    for k in range(params.W.shape[0]):
        for n in range(params.W.shape[1]):
            for sign in (1.0, -1.0):
                W = params.W.copy()
                W[k, n] += sign * h
                e = mse(forward(params.with_input_weights(W), data), data)
                fd[k, n] += sign * e
    return fd / (2.0 * h)


def gradient_match(analytic: np.ndarray, fd: np.ndarray, rel: float,
                   floor_frac: float = 5e-2) -> float:
    """Worst relative deviation, with small entries measured against the
    matrix scale (finite differences are noise-limited near zero)."""
    scale = np.max(np.abs(fd))
    if scale == 0.0:
        return float(np.max(np.abs(analytic), initial=0.0))
    denom = np.abs(fd) + floor_frac * scale
    return float(np.max(np.abs(analytic - fd) / denom))


def random_spd(order: int, rng: np.random.Generator) -> np.ndarray:
    B = rng.standard_normal((order + 4, order))
    return B.T @ B / (order + 4)


def random_instance(rng: np.random.Generator, activation: str = "sigmoid",
                    max_dim: int = 6, max_patterns: int = 20):
    """A random small network/dataset pair.

    Input weights are net-controlled so sigmoid units stay in their active
    range; output weights are random (not least-squares fitted) so residuals
    and gradients keep O(1) scale for finite-difference comparisons.
    """
    n_in = int(rng.integers(1, max_dim + 1))
    n_hid = int(rng.integers(1, max_dim + 1))
    n_out = int(rng.integers(1, max_dim + 1))
    n_pat = int(rng.integers(4, max_patterns + 1))
    X = rng.standard_normal((n_pat, n_in))
    T = rng.standard_normal((n_pat, n_out))
    data = Dataset.from_arrays(X, T)
    controlled = net_control_init(data, n_hid, seed=int(rng.integers(0, 2**31)),
                                  activation=activation)
    params = MlpParams(W=controlled.W,
                       W_oi=rng.standard_normal((n_out, n_in + 1)),
                       W_oh=rng.standard_normal((n_out, n_hid)),
                       activation=activation)
    return params, data


@pytest.fixture
def teacher_data() -> Dataset:
    table = datamod.synthesize_regression("teacher", 120, seed=11,
                                          n_inputs=4, n_outputs=1,
                                          teacher_hidden=5)
    return table.to_dataset()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
