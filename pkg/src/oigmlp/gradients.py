"""Input-weight gradients and the transformation machinery around them.

Sign convention used everywhere in this package: gradient matrices are
NEGATIVE gradients of the MSE including its 2/N_v factor, so a plain update
W <- W + z * G with z > 0 descends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .network import Dataset, ForwardCache, MlpParams, forward


@dataclass(frozen=True)
class HwoGradient:
    """Whitened (hidden weight optimization) gradient with frozen columns.

    Columns flagged in ``dependent_mask`` belong to inputs that are linear
    combinations of the bias and earlier inputs; they are exactly zero, so
    the weights they feed never move.
    """

    g_hwo: np.ndarray
    dependent_mask: np.ndarray


@dataclass(frozen=True)
class HwoTransform:
    """Reusable right-multiplier that maps a gradient to its whitened form.

    ``matrix`` is the (pseudo-)inverse of the input autocorrelation built
    from triangular orthonormalization coefficients; rows and columns at
    dependent positions are exactly zero.
    """

    matrix: np.ndarray
    dependent_mask: np.ndarray


def bp_gradient(params: MlpParams, cache: ForwardCache, data: Dataset) -> np.ndarray:
    """Negative MSE gradient for the input weights, shape [n_hidden, n_in+1].

    Hidden deltas carry the output residual back through W_oh and the
    activation derivative; the pattern average against the inputs gives the
    full matrix in one pass.
    """
    if cache.outputs.shape != data.targets.shape:
        raise ValueError("cache does not match dataset")
    delta = 2.0 * cache.act_deriv * ((data.targets - cache.outputs) @ params.W_oh)
    return delta.T @ data.inputs / data.n_patterns


def input_autocorrelation(data: Dataset) -> np.ndarray:
    """Pattern-averaged Gram matrix of the augmented inputs, order n_in + 1."""
    R = data.inputs.T @ data.inputs / data.n_patterns
    return 0.5 * (R + R.T)


def hwo_transform(R_i, tol: float = linalg.DEFAULT_DEPENDENCE_TOL) -> HwoTransform:
    """Factor the input autocorrelation into a whitened-gradient multiplier.

    The orthonormalization visits the bias column (the last index of R_i)
    first, then the remaining inputs in order.  With that ordering the bias
    is never the direction declared dependent: an appended input that is a
    linear combination of earlier inputs plus a constant is the one that
    gets frozen, and hidden thresholds stay trainable.  On a nonsingular
    R_i the resulting matrix is just its inverse, where the ordering is
    irrelevant.
    """
    R = linalg.check_square_symmetric(R_i, name="R_i")
    n = R.shape[0]
    perm = np.concatenate([[n - 1], np.arange(n - 1)])
    factor = linalg.ols_factor(R[np.ix_(perm, perm)], tol)
    mapped = factor.coeffs.T @ factor.coeffs
    inv = np.empty(n, dtype=int)
    inv[perm] = np.arange(n)
    mask = np.empty(n, dtype=bool)
    mask[perm] = factor.dependent_mask
    return HwoTransform(matrix=mapped[np.ix_(inv, inv)], dependent_mask=mask)


def hwo_gradient(G, R_i, tol: float = linalg.DEFAULT_DEPENDENCE_TOL) -> HwoGradient:
    """Map the gradient through the inverse input autocorrelation via OLS.

    Equivalent to G @ inv(R_i) when R_i is nonsingular, but computed from
    the triangular orthonormalization coefficients, which zeroes the columns
    of linearly dependent inputs exactly instead of leaving noise there.
    """
    return hwo_gradient_from_transform(G, hwo_transform(R_i, tol))


def hwo_gradient_from_transform(G, transform: HwoTransform) -> HwoGradient:
    """Same as :func:`hwo_gradient` with the transform precomputed."""
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[1] != transform.matrix.shape[0]:
        raise ValueError("gradient columns must match the transform order")
    return HwoGradient(g_hwo=G @ transform.matrix,
                       dependent_mask=transform.dependent_mask.copy())


def transform_gradient(G, Rmat) -> np.ndarray:
    """Gradient of the equivalent input-transformed network, G @ Rmat."""
    G = np.asarray(G, dtype=np.float64)
    Rmat = np.asarray(Rmat, dtype=np.float64)
    if G.ndim != 2 or Rmat.ndim != 2 or G.shape[1] != Rmat.shape[0]:
        raise ValueError("shape mismatch between gradient and transform")
    return G @ Rmat


def mean_removal_transform(data: Dataset) -> np.ndarray:
    """Affine transform matrix that centers every non-bias input.

    Identity except for the last column, which subtracts the per-input data
    means; applied to an augmented pattern it yields zero-mean inputs with
    the bias element still 1.
    """
    n_aug = data.n_inputs + 1
    A = np.eye(n_aug)
    A[:-1, -1] = -data.inputs[:, :-1].mean(axis=0)
    return A


def optimal_learning_factor(params: MlpParams, data: Dataset, direction,
                            iteration: int = 0,
                            cache: ForwardCache | None = None) -> float:
    """Newton step size along a fixed input-weight direction.

    Ratio of the (negated) directional first derivative of the MSE to the
    Gauss-Newton directional second derivative, both at step 0.  The
    Gauss-Newton form is a sum of squares, so the denominator is never
    negative.  When the denominator vanishes relative to the numerator the
    line is locally flat and a bounded decaying step 0.1 / (1 + iteration)
    is returned instead.
    """
    direction = np.asarray(direction, dtype=np.float64)
    if direction.shape != params.W.shape:
        raise ValueError("direction must match the input weight shape")
    if not np.any(direction):
        raise ValueError("direction must be nonzero")
    if cache is None:
        cache = forward(params, data)
    G = bp_gradient(params, cache, data)
    numerator = float(np.sum(G * direction))
    dir_net = data.inputs @ direction.T
    dY = (cache.act_deriv * dir_net) @ params.W_oh.T
    denominator = 2.0 * float(np.sum(dY * dY)) / data.n_patterns
    if denominator <= 1e-12 * abs(numerator) or denominator <= 0.0:
        if numerator == 0.0:
            return 0.0
        return 0.1 / (1.0 + iteration)
    return numerator / denominator
