"""Single-hidden-layer MLP with bypass weights: data model and forward pass.

The network maps an augmented input vector (last element fixed to 1, so
thresholds are ordinary weights) through one nonlinear hidden layer and a
linear output layer that also receives the inputs directly.  Output weights
are never trained by gradient descent here; they are re-solved exactly from
correlation matrices (output weight optimization, OWO).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg

ACTIVATIONS = ("sigmoid", "relu")

#: Net-control redraw budget for hidden units whose random net function is
#: constant over the data (zero variance cannot be rescaled).
NET_CONTROL_MAX_REDRAWS = 50


@dataclass(frozen=True)
class Dataset:
    """Training patterns with bias-augmented inputs.

    inputs:  [n_patterns, n_inputs + 1], last column identically 1
    targets: [n_patterns, n_outputs]
    """

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if targets.ndim == 1:
            targets = targets[:, None]
        if inputs.ndim != 2 or targets.ndim != 2:
            raise ValueError("inputs and targets must be 2-D")
        if inputs.shape[0] != targets.shape[0] or inputs.shape[0] == 0:
            raise ValueError("inputs and targets must share a positive pattern count")
        if inputs.shape[1] < 2:
            raise ValueError("need at least one real input beside the bias column")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise ValueError("dataset contains non-finite values")
        if not np.all(inputs[:, -1] == 1.0):
            raise ValueError("last input column must be identically 1")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    @classmethod
    def from_arrays(cls, raw_inputs, targets) -> "Dataset":
        """Build a dataset from un-augmented inputs, appending the bias column."""
        raw = np.asarray(raw_inputs, dtype=np.float64)
        if raw.ndim == 1:
            raw = raw[:, None]
        bias = np.ones((raw.shape[0], 1))
        return cls(np.hstack([raw, bias]), targets)

    @property
    def n_patterns(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1] - 1

    @property
    def n_outputs(self) -> int:
        return self.targets.shape[1]


@dataclass(frozen=True)
class MlpParams:
    """All weights of the network.

    W:    [n_hidden, n_inputs + 1]   input weights (last column: thresholds)
    W_oi: [n_outputs, n_inputs + 1]  bypass weights (last column: thresholds)
    W_oh: [n_outputs, n_hidden]      hidden-to-output weights
    """

    W: np.ndarray
    W_oi: np.ndarray
    W_oh: np.ndarray
    activation: str = "sigmoid"

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        W_oi = np.asarray(self.W_oi, dtype=np.float64)
        W_oh = np.asarray(self.W_oh, dtype=np.float64)
        if W.ndim != 2 or W_oi.ndim != 2 or W_oh.ndim != 2:
            raise ValueError("weight arrays must be 2-D")
        if W_oh.shape != (W_oi.shape[0], W.shape[0]):
            raise ValueError("inconsistent weight shapes")
        if W_oi.shape[1] != W.shape[1]:
            raise ValueError("W and W_oi must agree on the input dimension")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        for name, arr in (("W", W), ("W_oi", W_oi), ("W_oh", W_oh)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "W_oi", W_oi)
        object.__setattr__(self, "W_oh", W_oh)

    @property
    def n_hidden(self) -> int:
        return self.W.shape[0]

    def with_input_weights(self, W) -> "MlpParams":
        return replace(self, W=np.asarray(W, dtype=np.float64))

    def with_output_weights(self, W_oi, W_oh) -> "MlpParams":
        return replace(self, W_oi=np.asarray(W_oi, dtype=np.float64),
                       W_oh=np.asarray(W_oh, dtype=np.float64))


@dataclass(frozen=True)
class ForwardCache:
    """Per-pattern intermediate values of one forward pass."""

    net: np.ndarray        # [n_patterns, n_hidden]
    act: np.ndarray        # [n_patterns, n_hidden]
    act_deriv: np.ndarray  # [n_patterns, n_hidden]
    outputs: np.ndarray    # [n_patterns, n_outputs]


@dataclass(frozen=True)
class CorrelationPair:
    """Autocorrelation R and cross-correlation C of the augmented hidden basis."""

    R: np.ndarray  # [n_units, n_units], n_units = n_inputs + 1 + n_hidden
    C: np.ndarray  # [n_units, n_outputs]


def _activate(net: np.ndarray, activation: str):
    if activation == "relu":
        act = np.maximum(net, 0.0)
        deriv = (net > 0.0).astype(np.float64)
    else:
        # Numerically stable logistic, branch on sign of the net function.
        act = np.empty_like(net)
        pos = net >= 0
        act[pos] = 1.0 / (1.0 + np.exp(-net[pos]))
        e = np.exp(net[~pos])
        act[~pos] = e / (1.0 + e)
        deriv = act * (1.0 - act)
    return act, deriv


def forward(params: MlpParams, data: Dataset) -> ForwardCache:
    """Run the network over all patterns."""
    if params.W.shape[1] != data.inputs.shape[1]:
        raise ValueError("weight matrix does not match the input dimension")
    if params.W_oi.shape[0] != data.n_outputs:
        raise ValueError("output weights do not match the target dimension")
    net = data.inputs @ params.W.T
    act, deriv = _activate(net, params.activation)
    outputs = data.inputs @ params.W_oi.T + act @ params.W_oh.T
    return ForwardCache(net=net, act=act, act_deriv=deriv, outputs=outputs)


def mse(cache: ForwardCache, data: Dataset) -> float:
    """Mean-squared error: summed over outputs, averaged over patterns."""
    diff = data.targets - cache.outputs
    return float(np.sum(diff * diff) / data.n_patterns)


def classification_error(cache: ForwardCache, data: Dataset) -> float:
    """Fraction of patterns whose argmax output misses the argmax target.

    Ties break toward the lowest index on both sides.
    """
    if data.n_outputs < 2:
        raise ValueError("classification error needs one-hot targets (>= 2 outputs)")
    predicted = np.argmax(cache.outputs, axis=1)
    actual = np.argmax(data.targets, axis=1)
    return float(np.mean(predicted != actual))


def correlations(cache: ForwardCache, data: Dataset) -> CorrelationPair:
    """Correlation matrices of the augmented basis [inputs : hidden activations]."""
    basis = np.hstack([data.inputs, cache.act])
    R = basis.T @ basis / data.n_patterns
    C = basis.T @ data.targets / data.n_patterns
    return CorrelationPair(R=0.5 * (R + R.T), C=C)


def owo_solve(params: MlpParams, data: Dataset,
              tol: float = linalg.DEFAULT_DEPENDENCE_TOL) -> MlpParams:
    """Replace all output weights with the exact least-squares solution.

    Solves C = R @ W_o.T over the augmented basis; basis functions that are
    linearly dependent (constant inputs, dead hidden units, duplicated
    columns) get frozen zero weights.  Never increases the MSE.
    """
    cache = forward(params, data)
    pair = correlations(cache, data)
    factor = linalg.ols_factor(pair.R, tol)
    report = linalg.ols_solve(pair.R, pair.C, factor)
    n_aug = data.n_inputs + 1
    return params.with_output_weights(report.solution[:, :n_aug],
                                      report.solution[:, n_aug:])


def net_control_init(data: Dataset, n_hidden: int, seed: int,
                     target_mean: float = 0.5, target_std: float = 1.0,
                     activation: str = "sigmoid",
                     tol: float = linalg.DEFAULT_DEPENDENCE_TOL) -> MlpParams:
    """Random input weights rescaled so every hidden net function has the
    prescribed mean and standard deviation over the data, then OWO for the
    output weights.

    Each hidden unit's non-threshold weights are drawn standard normal and
    scaled by target_std over the empirical std of the raw net function; the
    threshold is then set to hit target_mean.  Units whose raw net function
    is constant over the data are redrawn up to a cap.  Deterministic per
    seed (PCG64 generator).
    """
    if n_hidden < 1:
        raise ValueError("n_hidden must be positive")
    rng = np.random.default_rng(seed)
    n_aug = data.n_inputs + 1
    raw_inputs = data.inputs[:, :-1]
    W = np.zeros((n_hidden, n_aug))
    for k in range(n_hidden):
        for attempt in range(NET_CONTROL_MAX_REDRAWS + 1):
            w = rng.standard_normal(data.n_inputs)
            raw_net = raw_inputs @ w
            std = float(raw_net.std())
            if std > 1e-12:
                break
        else:
            raise ValueError(
                f"hidden unit {k}: net function has zero variance after "
                f"{NET_CONTROL_MAX_REDRAWS} redraws (constant inputs?)")
        scale = target_std / std
        W[k, :-1] = scale * w
        W[k, -1] = target_mean - scale * float(raw_net.mean())
    params = MlpParams(W=W,
                       W_oi=np.zeros((data.n_outputs, n_aug)),
                       W_oh=np.zeros((data.n_outputs, n_hidden)),
                       activation=activation)
    return owo_solve(params, data, tol=tol)


def pad_params_for_new_inputs(params: MlpParams, n_new: int) -> MlpParams:
    """Extend a network with extra input columns carrying zero weights.

    The new columns are inserted just before the threshold column, matching
    datasets whose inputs were augmented with additional (e.g. linearly
    dependent) columns.  The padded network computes exactly the same
    function on the augmented data as the original did on the base data.
    """
    if n_new < 0:
        raise ValueError("n_new must be nonnegative")

    def pad(mat):
        return np.hstack([mat[:, :-1], np.zeros((mat.shape[0], n_new)), mat[:, -1:]])

    return replace(params, W=pad(params.W), W_oi=pad(params.W_oi))
