"""Per-input gain optimization for gradient-based input weight updates.

Instead of one scalar learning factor, each input column n of the update
matrix gets its own gain r(n), found from a Gauss-Newton model of the error
as a function of the gains.  The per-pattern intermediate v(i, m) couples
output i to input m through all hidden units; it is never materialized over
all patterns, only accumulated chunk by chunk.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .network import Dataset, ForwardCache, MlpParams

#: Patterns per accumulation chunk.  Fixed so reductions happen in a
#: deterministic order regardless of dataset size.
CHUNK = 512


def gain_intermediate_v(params: MlpParams, cache: ForwardCache, G,
                        pattern: int, output: int, column: int) -> float:
    """Single element v(i, m) for one pattern: the sensitivity of output i
    to the gain on input column m, summed over hidden units."""
    G = np.asarray(G, dtype=np.float64)
    return float(np.sum(params.W_oh[output]
                        * cache.act_deriv[pattern]
                        * G[:, column]))


def gain_system(params: MlpParams, cache: ForwardCache, data: Dataset, G):
    """Accumulate the gain gradient and Gauss-Newton Hessian in one pass.

    Returns (d_r, H_ig) where d_r(m) is the exact first partial of the MSE
    with respect to gain m at r = 0 and H_ig is the positive semidefinite
    Gauss-Newton second-derivative matrix.  Work is chunked over patterns;
    peak memory is chunk * n_outputs * (n_inputs + 1).
    """
    G = np.asarray(G, dtype=np.float64)
    if G.shape != params.W.shape:
        raise ValueError("gradient must match the input weight shape")
    n_aug = data.n_inputs + 1
    n_v = data.n_patterns
    d_acc = np.zeros(n_aug)
    h_acc = np.zeros((n_aug, n_aug))
    for start in range(0, n_v, CHUNK):
        stop = min(start + CHUNK, n_v)
        X = data.inputs[start:stop]
        deriv = cache.act_deriv[start:stop]
        resid = data.targets[start:stop] - cache.outputs[start:stop]
        # v[p, i, m] = sum_k W_oh[i, k] * deriv[p, k] * G[k, m]
        v = np.einsum("ik,pk,km->pim", params.W_oh, deriv, G, optimize=True)
        t = X[:, None, :] * v
        d_acc += np.einsum("pi,pim->m", resid, t, optimize=True)
        h_acc += np.einsum("pim,piu->mu", t, t, optimize=True)
    d_r = (-2.0 / n_v) * d_acc
    H = (2.0 / n_v) * h_acc
    return d_r, 0.5 * (H + H.T)


def gain_gradient(params: MlpParams, cache: ForwardCache, data: Dataset, G) -> np.ndarray:
    """First partials of the MSE with respect to the input gains at r = 0."""
    return gain_system(params, cache, data, G)[0]


def gain_hessian(params: MlpParams, cache: ForwardCache, data: Dataset, G) -> np.ndarray:
    """Gauss-Newton Hessian of the MSE with respect to the input gains."""
    return gain_system(params, cache, data, G)[1]


def solve_gains(H_ig, d_r, tol: float = linalg.DEFAULT_DEPENDENCE_TOL) -> np.ndarray:
    """Solve H_ig @ r = d_r, freezing singular directions to r = 0.

    Linearly dependent inputs make H_ig singular; the OLS path assigns those
    positions zero gain instead of amplifying noise.
    """
    d_r = np.asarray(d_r, dtype=np.float64).ravel()
    factor = linalg.ols_factor(H_ig, tol)
    report = linalg.ols_solve(H_ig, d_r[:, None], factor)
    return report.solution[0]


def apply_gain_update(params: MlpParams, G_used, r) -> MlpParams:
    """Column-scaled weight update W <- W + r(n) * G_used(:, n).

    A uniform gain vector reduces to the ordinary learning-factor update
    W + z * G.
    """
    G_used = np.asarray(G_used, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64).ravel()
    if G_used.shape != params.W.shape or r.shape[0] != G_used.shape[1]:
        raise ValueError("shapes of gradient and gains must match the weights")
    return params.with_input_weights(params.W + G_used * r[None, :])
