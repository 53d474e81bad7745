"""Orthogonal-least-squares factorization and the linear solvers built on it.

Every linear system in the training stack (output weights, HWO gradients,
input-gain systems) is solved through the same sequential orthonormalization
of basis functions.  The factorization works on the Gram/autocorrelation
matrix alone, detects linearly dependent basis functions as it goes, and
freezes them by zeroing their coefficient rows, so downstream solutions carry
exact zeros at dependent positions instead of noise-scale garbage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Default relative threshold for declaring a basis function linearly
#: dependent on its predecessors.  Relative to the diagonal entry, so the
#: detection is invariant to the units of the underlying data.
DEFAULT_DEPENDENCE_TOL = 1e-8


def check_square_symmetric(R, name: str = "matrix", rtol: float = 1e-8) -> np.ndarray:
    """Validate a symmetric matrix argument and return it mirrored to f64.

    Raises ValueError for non-square, non-finite, or asymmetric input.
    Symmetry is enforced exactly on the returned copy (average of the two
    triangles), so callers can rely on bitwise R[i, j] == R[j, i].
    """
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"{name} must be square, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError(f"{name} contains non-finite entries")
    scale = np.max(np.abs(R)) if R.size else 0.0
    if np.max(np.abs(R - R.T), initial=0.0) > rtol * max(scale, 1.0):
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (R + R.T)


@dataclass(frozen=True)
class OlsFactor:
    """Triangular orthonormalization coefficients for a Gram matrix.

    ``coeffs`` is lower triangular; row m expresses the m-th orthonormal
    basis function in terms of original basis functions 1..m.  Rows of
    basis functions found linearly dependent on their predecessors are
    entirely zero and flagged in ``dependent_mask``.
    """

    order: int
    coeffs: np.ndarray
    dependent_mask: np.ndarray
    tolerance_used: float

    @property
    def dependent_count(self) -> int:
        return int(np.count_nonzero(self.dependent_mask))


@dataclass(frozen=True)
class LinearSolveReport:
    """Result of a frozen-basis linear solve."""

    solution: np.ndarray
    residual_norm: float
    dependent_count: int


def ols_factor(R, tol: float = DEFAULT_DEPENDENCE_TOL) -> OlsFactor:
    """Sequentially orthonormalize the basis functions behind a Gram matrix.

    For basis function m the recursion first projects onto the previously
    built orthonormal functions (c_i), accumulates the expansion back onto
    the original basis (b_k), and normalizes by the square root of the
    residual energy r(m,m) - sum(c_i^2).  When that residual falls to or
    below tol * r(m,m) the basis function carries no new information: its
    row is zeroed and it is flagged dependent, which freezes it in every
    downstream solve.  The threshold is relative to the function's own
    energy, so detection does not depend on the units or overall scale of
    the system; a nonpositive diagonal (zero-energy function, or input that
    is not PSD) is always dependent.

    Deterministic: identical inputs produce bit-identical factors.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    R = check_square_symmetric(R, name="R")
    n = R.shape[0]
    coeffs = np.zeros((n, n), dtype=np.float64)
    dependent = np.zeros(n, dtype=bool)

    for m in range(n):
        c = coeffs[:m] @ R[:, m]  # projections onto orthonormal rows 0..m-1
        residual = R[m, m] - float(c @ c)
        if R[m, m] <= 0.0 or residual <= tol * R[m, m]:
            dependent[m] = True
            continue
        row = -(coeffs[:m].T @ c)
        row[m] = 1.0
        coeffs[m] = row / math.sqrt(residual)

    return OlsFactor(order=n, coeffs=coeffs, dependent_mask=dependent,
                     tolerance_used=float(tol))


def orthonormal_weights(factor: OlsFactor, C) -> np.ndarray:
    """Linear mapping weights in the orthonormal system, shape [M, order].

    Entry (i, m) is the weight of output i on the m-th orthonormal basis
    function; columns at dependent positions are zero.
    """
    C = _check_rhs(C, factor.order)
    return (factor.coeffs @ C).T


def ols_solve(R, C, factor: OlsFactor) -> LinearSolveReport:
    """Solve R @ W.T = C through an existing factor of R.

    The orthonormal-system weights are mapped back to the original basis,
    giving ``solution`` of shape [M, order].  Columns at dependent positions
    are exactly zero; on the non-dependent subspace the solution matches a
    dense direct solve of the reduced system.
    """
    R = check_square_symmetric(R, name="R")
    if factor.order != R.shape[0]:
        raise ValueError("factor order does not match R")
    C = _check_rhs(C, R.shape[0])
    w_ortho = factor.coeffs @ C
    solution_t = factor.coeffs.T @ w_ortho
    residual = float(np.linalg.norm(R @ solution_t - C))
    return LinearSolveReport(solution=solution_t.T, residual_norm=residual,
                             dependent_count=factor.dependent_count)


def ols_error_decomposition(targets_energy, orthonormal_wts) -> float:
    """Training error left after a least-squares fit, from energies alone.

    ``targets_energy[i]`` is the mean-square energy of output i over the
    fitting data (sum of squares divided by the number of patterns), in the
    same 1/N_v convention as the Gram matrix the weights came from.  The
    orthonormal weights capture energy additively, so the residual error is
    the target energy minus the sum of squared orthonormal weights, summed
    over outputs.  Never negative beyond numerical slack.
    """
    energy = np.asarray(targets_energy, dtype=np.float64).ravel()
    w = np.asarray(orthonormal_wts, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != energy.shape[0]:
        raise ValueError("orthonormal weights must be [M, order] matching targets_energy")
    return float(np.sum(energy) - np.sum(w * w))


def whitening_from_autocorrelation(R_i, tol: float = DEFAULT_DEPENDENCE_TOL,
                                   reciprocal: bool = False) -> np.ndarray:
    """Square-root factor A of a PSD autocorrelation matrix, A.T @ A = R_i.

    Built from the symmetric eigendecomposition: rows are eigenvectors
    scaled by the square roots of their eigenvalues.  With
    ``reciprocal=True`` the reciprocal square roots are used instead, so
    A.T @ A equals the (pseudo-)inverse of R_i; that variant whitens data
    whose autocorrelation is R_i.  Directions with eigenvalues at or below
    tol times the largest are dropped (zero rows) in both variants.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    R = check_square_symmetric(R_i, name="R_i")
    eigvals, eigvecs = np.linalg.eigh(R)
    top = float(eigvals.max(initial=0.0))
    keep = eigvals > tol * top
    scale = np.zeros_like(eigvals)
    if reciprocal:
        scale[keep] = 1.0 / np.sqrt(eigvals[keep])
    else:
        scale[keep] = np.sqrt(eigvals[keep])
    # Rows in descending eigenvalue order; dropped directions stay zero rows.
    A = (scale[:, None] * eigvecs.T)[::-1].copy()
    return A


def _check_rhs(C, order: int) -> np.ndarray:
    C = np.asarray(C, dtype=np.float64)
    if C.ndim == 1:
        C = C[:, None]
    if C.ndim != 2 or C.shape[0] != order:
        raise ValueError(f"right-hand side must have {order} rows, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("right-hand side contains non-finite entries")
    return C
