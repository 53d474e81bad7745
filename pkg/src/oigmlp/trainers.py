"""The five training algorithms as iteration drivers.

Every trainer starts from the same net-controlled network for a given
(seed, data, n_hidden), records one trace row per iteration *before* that
iteration's update (so row k describes the state after k complete
iterations and k times the per-iteration multiply cost), and keeps a
snapshot of the parameters with the lowest validation error.

Two-stage trainers (owo-bp, oig-bp, oig-hwo) end each iteration with an
exact output-weight solve, so every recorded state carries least-squares
optimal output weights.  Input-weight steps are protected by a descent
guard: if a step raises the training error the step size (or gain vector)
is halved up to 20 times, and skipped entirely if that fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import gains, gradients, linalg, network
from .network import Dataset, MlpParams

ALGORITHMS = ("owo-bp", "oig-bp", "oig-hwo", "scg", "lm")

MAX_HALVINGS = 20
LM_LAMBDA_LIMIT = 1e12
LM_MAX_RETRIES = 16
SCG_SIGMA = 1e-4       # Moller's second-order probe scale
SCG_LAMBDA_INIT = 1e-6  # Moller's initial damping

#: Per-step slack accepted by the descent guard, relative to the error scale.
_GUARD_SLACK = 1e-12


class TrainingAbort(RuntimeError):
    """A run produced non-finite error and cannot continue."""


@dataclass(frozen=True)
class TrainConfig:
    algorithm: str = "oig-hwo"
    n_iterations: int = 1000
    n_hidden: int = 8
    seed: int = 0
    activation: str = "sigmoid"
    lm_lambda_init: float = 0.01
    dependence_tol: float = linalg.DEFAULT_DEPENDENCE_TOL
    early_stop_patience: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.n_iterations < 1 or self.n_hidden < 1:
            raise ValueError("n_iterations and n_hidden must be positive")
        if self.lm_lambda_init <= 0:
            raise ValueError("lm_lambda_init must be positive")
        if self.dependence_tol < 0 or self.early_stop_patience < 0:
            raise ValueError("tolerances and patience must be nonnegative")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    train_mse: float
    val_mse: float
    cum_multiplies: int


@dataclass(frozen=True)
class BestSnapshot:
    iteration: int
    val_mse: float
    params: MlpParams


@dataclass(frozen=True)
class TrainTrace:
    records: list[TraceRecord]
    best: BestSnapshot
    diagnostic: str | None = None

    @property
    def iterations(self) -> np.ndarray:
        return np.array([r.iteration for r in self.records], dtype=int)

    @property
    def train_mse(self) -> np.ndarray:
        return np.array([r.train_mse for r in self.records])

    @property
    def val_mse(self) -> np.ndarray:
        return np.array([r.val_mse for r in self.records])

    @property
    def cum_multiplies(self) -> np.ndarray:
        return np.array([r.cum_multiplies for r in self.records], dtype=np.int64)


# ---------------------------------------------------------------------------
# Multiply accounting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplyModel:
    """Closed-form per-iteration multiply counts for the training algorithms."""

    n_u: int
    n_w: int
    m_ols: int
    m_bp: int
    m_owo_bp: int
    m_oig: int
    m_oig_hwo: int
    m_lm: int
    m_scg: int


def multiply_counts(n_inputs: int, n_outputs: int, n_hidden: int,
                    n_patterns: int) -> MultiplyModel:
    """Evaluate the closed-form multiply counters exactly.

    Fractional coefficients are carried in rational arithmetic and the
    results rounded to nearest at the end (they are exact integers for all
    valid dimensions).  The oig-hwo cost is the oig cost plus the
    per-iteration cost of mapping the gradient through the triangular
    whitening coefficients; the one-time pre-loop factorization of the input
    autocorrelation is not part of the per-iteration count.
    """
    N, M, Nh, Nv = n_inputs, n_outputs, n_hidden, n_patterns
    if min(N, M, Nh, Nv) < 1:
        raise ValueError("all dimensions must be positive")
    Nu = N + Nh + 1
    Nw = M * Nu + Nh * (N + 1)
    m_ols = Nu * (Nu + 1) * (Fraction(M) + Fraction(1, 6) * Nu * (2 * Nu + 1)
                             + Fraction(3, 2))
    m_bp = Nv * (M * Nu + 2 * Nh * (N + 1) + M * (N + 6 * Nh + 4)) + Nw
    m_owo_bp = (Nv * (Fraction(2 * Nh * (N + 2)) + M * (Nu + 1)
                      + M * (N + 6 * Nh + 4) + Fraction(Nu * (Nu + 1), 2))
                + m_ols + Nh * (N + 1))
    m_oig = (m_owo_bp
             + Nv * ((N + 1) * (3 * M * Nh + M * N + 2 * (M + N) + 3)
                     - M * (N + 6 * Nh + 4) - Nh * (N + 1))
             + (N + 1) ** 3)
    m_lm = (m_bp + Nv * (M * Nu * (Nu + 3 * Nh * (N + 1))
                         + 4 * Nh ** 2 * (N + 1) ** 2)
            + Nw ** 3 + Nw ** 2)
    m_scg = 4 * Nv * (Nh * (N + 1) + M * Nu) + 10 * (Nh * (N + 1) + M * Nu)
    m_oig_hwo = m_oig + Nh * (N + 1) * (N + 2)
    as_int = lambda v: int(round(Fraction(v)))
    return MultiplyModel(n_u=Nu, n_w=Nw, m_ols=as_int(m_ols), m_bp=as_int(m_bp),
                         m_owo_bp=as_int(m_owo_bp), m_oig=as_int(m_oig),
                         m_oig_hwo=as_int(m_oig_hwo), m_lm=as_int(m_lm),
                         m_scg=as_int(m_scg))


def per_iteration_cost(algorithm: str, n_inputs: int, n_outputs: int,
                       n_hidden: int, n_patterns: int) -> int:
    model = multiply_counts(n_inputs, n_outputs, n_hidden, n_patterns)
    return {"owo-bp": model.m_owo_bp, "oig-bp": model.m_oig,
            "oig-hwo": model.m_oig_hwo, "scg": model.m_scg,
            "lm": model.m_lm}[algorithm]


# ---------------------------------------------------------------------------
# Shared driver
# ---------------------------------------------------------------------------

def _train_mse(params: MlpParams, data: Dataset) -> float:
    return network.mse(network.forward(params, data), data)


def _drive(config: TrainConfig, data_train: Dataset, data_val: Dataset,
           init_params: MlpParams | None, stepper) -> TrainTrace:
    if init_params is not None:
        params = init_params
    else:
        params = network.net_control_init(
            data_train, config.n_hidden, config.seed,
            activation=config.activation, tol=config.dependence_tol)
    cost = per_iteration_cost(config.algorithm, data_train.n_inputs,
                              data_train.n_outputs, params.n_hidden,
                              data_train.n_patterns)
    records: list[TraceRecord] = []
    best: BestSnapshot | None = None
    diagnostic = None
    for it in range(config.n_iterations):
        cache = network.forward(params, data_train)
        train_mse = network.mse(cache, data_train)
        val_mse = _train_mse(params, data_val)
        if not (math.isfinite(train_mse) and math.isfinite(val_mse)):
            abort = TrainingAbort(f"non-finite MSE at iteration {it}")
            abort.records = records  # partial trace for the caller to persist
            raise abort
        records.append(TraceRecord(it, train_mse, val_mse, it * cost))
        if best is None or val_mse < best.val_mse:
            best = BestSnapshot(it, val_mse, params)
        if config.early_stop_patience and it - best.iteration >= config.early_stop_patience:
            break
        if it == config.n_iterations - 1:
            break
        params, diagnostic = stepper(params, it, cache, train_mse)
        if diagnostic is not None:
            break
    return TrainTrace(records=records, best=best, diagnostic=diagnostic)


def _guarded_update(params: MlpParams, data: Dataset, base_mse: float,
                    make_candidate) -> MlpParams:
    """Try make_candidate(scale) for scale 1, 1/2, ... 2**-20; keep the first
    one that does not increase the training error, else keep params."""
    scale = 1.0
    slack = _GUARD_SLACK * (1.0 + base_mse)
    for _ in range(MAX_HALVINGS + 1):
        candidate = make_candidate(scale)
        if _train_mse(candidate, data) <= base_mse + slack:
            return candidate
        scale *= 0.5
    return params


# ---------------------------------------------------------------------------
# Two-stage trainers
# ---------------------------------------------------------------------------

def train_owo_bp(config: TrainConfig, data_train: Dataset, data_val: Dataset,
                 init_params: MlpParams | None = None) -> TrainTrace:
    """Alternate an exact output-weight solve with one guarded steepest
    descent step on the input weights, scaled by the optimal learning factor."""
    if config.algorithm != "owo-bp":
        raise ValueError("config.algorithm must be 'owo-bp'")

    def step(params, it, cache, train_mse):
        G = gradients.bp_gradient(params, cache, data_train)
        if np.any(G):
            z = gradients.optimal_learning_factor(params, data_train, G,
                                                  iteration=it, cache=cache)
            params = _guarded_update(
                params, data_train, train_mse,
                lambda s: params.with_input_weights(params.W + (s * z) * G))
        params = network.owo_solve(params, data_train, tol=config.dependence_tol)
        return params, None

    return _drive(config, data_train, data_val, init_params, step)


def train_oig_bp(config: TrainConfig, data_train: Dataset, data_val: Dataset,
                 init_params: MlpParams | None = None) -> TrainTrace:
    """Per iteration: gradient, per-input gain system, guarded column-scaled
    update, output-weight solve."""
    if config.algorithm != "oig-bp":
        raise ValueError("config.algorithm must be 'oig-bp'")

    def step(params, it, cache, train_mse):
        G = gradients.bp_gradient(params, cache, data_train)
        params = _oig_step(config, data_train, params, cache, train_mse, G)
        params = network.owo_solve(params, data_train, tol=config.dependence_tol)
        return params, None

    return _drive(config, data_train, data_val, init_params, step)


def train_oig_hwo(config: TrainConfig, data_train: Dataset, data_val: Dataset,
                  init_params: MlpParams | None = None) -> TrainTrace:
    """Like oig-bp, but the gradient is first mapped through the triangular
    whitening coefficients of the input autocorrelation (computed once before
    the loop), which zeroes the columns of linearly dependent inputs."""
    if config.algorithm != "oig-hwo":
        raise ValueError("config.algorithm must be 'oig-hwo'")
    R_i = gradients.input_autocorrelation(data_train)
    transform = gradients.hwo_transform(R_i, config.dependence_tol)

    def step(params, it, cache, train_mse):
        G = gradients.bp_gradient(params, cache, data_train)
        g_hwo = gradients.hwo_gradient_from_transform(G, transform).g_hwo
        params = _oig_step(config, data_train, params, cache, train_mse, g_hwo)
        params = network.owo_solve(params, data_train, tol=config.dependence_tol)
        return params, None

    return _drive(config, data_train, data_val, init_params, step)


def _oig_step(config: TrainConfig, data: Dataset, params: MlpParams, cache,
              train_mse: float, g_used: np.ndarray) -> MlpParams:
    if not np.any(g_used):
        return params
    d_r, h_ig = gains.gain_system(params, cache, data, g_used)
    # d_r is the true partial of E; the Newton step that descends solves
    # against its negation (the PSD Hessian keeps the sign meaningful)
    r = gains.solve_gains(h_ig, -d_r, tol=config.dependence_tol)
    if not np.any(r):
        return params
    return _guarded_update(params, data, train_mse,
                           lambda s: gains.apply_gain_update(params, g_used, s * r))


# ---------------------------------------------------------------------------
# Flat-weight helpers for scg and lm
# ---------------------------------------------------------------------------

def _flatten(params: MlpParams) -> np.ndarray:
    return np.concatenate([params.W.ravel(), params.W_oi.ravel(),
                           params.W_oh.ravel()])


def _unflatten(vec: np.ndarray, template: MlpParams) -> MlpParams:
    shapes = [template.W.shape, template.W_oi.shape, template.W_oh.shape]
    parts = []
    offset = 0
    for shape in shapes:
        size = shape[0] * shape[1]
        parts.append(vec[offset:offset + size].reshape(shape))
        offset += size
    return MlpParams(W=parts[0], W_oi=parts[1], W_oh=parts[2],
                     activation=template.activation)


def _full_gradient(params: MlpParams, data: Dataset, cache=None) -> np.ndarray:
    """True gradient of the MSE with respect to all weights, flattened."""
    if cache is None:
        cache = network.forward(params, data)
    resid = data.targets - cache.outputs
    scale = -2.0 / data.n_patterns
    grad_w = -gradients.bp_gradient(params, cache, data)
    grad_oi = scale * (resid.T @ data.inputs)
    grad_oh = scale * (resid.T @ cache.act)
    return np.concatenate([grad_w.ravel(), grad_oi.ravel(), grad_oh.ravel()])


def fletcher_reeves_beta(g_new: np.ndarray, g_old: np.ndarray) -> float:
    """Ratio of gradient energies from two consecutive iterations."""
    denom = float(g_old @ g_old)
    if denom == 0.0:
        return 0.0
    return float(g_new @ g_new) / denom


# ---------------------------------------------------------------------------
# Scaled conjugate gradient (Moller)
# ---------------------------------------------------------------------------

@dataclass
class _ScgState:
    r: np.ndarray = None
    p: np.ndarray = None
    delta: float = 0.0
    lam: float = SCG_LAMBDA_INIT
    lam_bar: float = 0.0
    success: bool = True
    since_restart: int = 0


def train_scg(config: TrainConfig, data_train: Dataset, data_val: Dataset,
              init_params: MlpParams | None = None) -> TrainTrace:
    """Moller's scaled conjugate gradient over all weights simultaneously.

    Curvature along the search direction comes from a finite-difference
    Hessian-vector probe; the damping term lambda keeps the quadratic model
    positive definite and adapts to how well the model predicted the actual
    error change.  Directions restart at the negative gradient every n_w
    iterations or whenever descent is lost.
    """
    if config.algorithm != "scg":
        raise ValueError("config.algorithm must be 'scg'")
    state = _ScgState(lam=SCG_LAMBDA_INIT)

    def step(params, it, cache, train_mse):
        w = _flatten(params)
        n_w = w.shape[0]
        if state.r is None:
            state.r = -_full_gradient(params, data_train, cache)
            state.p = state.r.copy()
        p, r = state.p, state.r
        if not np.any(r):
            return params, None
        if float(p @ r) <= 0.0 or state.since_restart >= n_w:
            p = r.copy()
            state.p = p
            state.since_restart = 0
            state.success = True
        p_norm2 = float(p @ p)
        if state.success:
            sigma = SCG_SIGMA / math.sqrt(p_norm2)
            grad_probe = _full_gradient(_unflatten(w + sigma * p, params), data_train)
            state.delta = float(p @ (grad_probe + r)) / sigma
        delta = state.delta + (state.lam - state.lam_bar) * p_norm2
        if delta <= 0.0:
            state.lam_bar = 2.0 * (state.lam - delta / p_norm2)
            delta = -delta + state.lam * p_norm2
            state.lam = state.lam_bar
        mu = float(p @ r)
        alpha = mu / delta
        candidate = _unflatten(w + alpha * p, params)
        cand_mse = _train_mse(candidate, data_train)
        if math.isfinite(cand_mse):
            comparison = 2.0 * delta * (train_mse - cand_mse) / (mu * mu)
        else:
            comparison = -math.inf
        if comparison >= 0.0:
            r_new = -_full_gradient(candidate, data_train)
            beta = fletcher_reeves_beta(r_new, r)
            state.p = r_new + beta * p
            state.r = r_new
            state.lam_bar = 0.0
            state.success = True
            state.since_restart += 1
            if comparison >= 0.75:
                state.lam *= 0.25
            params = candidate
        else:
            state.lam_bar = state.lam
            state.success = False
        if comparison < 0.25:
            state.lam += delta * (1.0 - comparison) / p_norm2
        return params, None

    return _drive(config, data_train, data_val, init_params, step)


# ---------------------------------------------------------------------------
# Levenberg-Marquardt
# ---------------------------------------------------------------------------

def gauss_newton_system(params: MlpParams, data: Dataset, cache=None,
                        chunk: int = 256):
    """Gauss-Newton Hessian and negative gradient over all weights.

    H = (2/N_v) J.T @ J and g = (2/N_v) J.T @ e, where J stacks the output
    Jacobians of every (pattern, output) pair and e the residuals.  Built in
    pattern chunks so the full Jacobian is never materialized.
    """
    if cache is None:
        cache = network.forward(params, data)
    n_aug = data.n_inputs + 1
    n_h = params.n_hidden
    m = data.n_outputs
    w_size = n_h * n_aug
    oi_size = m * n_aug
    n_w = w_size + oi_size + m * n_h
    H = np.zeros((n_w, n_w))
    g = np.zeros(n_w)
    for start in range(0, data.n_patterns, chunk):
        stop = min(start + chunk, data.n_patterns)
        X = data.inputs[start:stop]
        deriv = cache.act_deriv[start:stop]
        act = cache.act[start:stop]
        resid = data.targets[start:stop] - cache.outputs[start:stop]
        n_p = stop - start
        J = np.zeros((n_p, m, n_w))
        jw = np.einsum("ik,pk,pn->pikn", params.W_oh, deriv, X,
                       optimize=True).reshape(n_p, m, w_size)
        J[:, :, :w_size] = jw
        for i in range(m):
            lo = w_size + i * n_aug
            J[:, i, lo:lo + n_aug] = X
            lo = w_size + oi_size + i * n_h
            J[:, i, lo:lo + n_h] = act
        Jf = J.reshape(n_p * m, n_w)
        H += Jf.T @ Jf
        g += Jf.T @ resid.reshape(n_p * m)
    scale = 2.0 / data.n_patterns
    H *= scale
    g *= scale
    return 0.5 * (H + H.T), g


def lm_direction(H: np.ndarray, g_neg: np.ndarray, lam: float) -> np.ndarray:
    """Damped Gauss-Newton direction: solve (H + lam * I) d = g_neg."""
    return np.linalg.solve(H + lam * np.eye(H.shape[0]), g_neg)


def train_lm(config: TrainConfig, data_train: Dataset, data_val: Dataset,
             init_params: MlpParams | None = None) -> TrainTrace:
    """Levenberg-Marquardt over all weights with a Gauss-Newton Hessian.

    Each iteration solves the damped system and takes the step only if the
    training error does not increase; the damping drops by 10x after an
    accepted step and grows by 10x after a rejected one.  If the damping
    overflows 1e12 the run terminates early with a diagnostic.
    """
    if config.algorithm != "lm":
        raise ValueError("config.algorithm must be 'lm'")
    state = {"lam": config.lm_lambda_init}

    def step(params, it, cache, train_mse):
        H, g_neg = gauss_newton_system(params, data_train, cache)
        w = _flatten(params)
        lam = state["lam"]
        for _ in range(LM_MAX_RETRIES):
            try:
                d = lm_direction(H, g_neg, lam)
            except np.linalg.LinAlgError:
                d = None
            if d is not None and np.all(np.isfinite(d)):
                candidate = _unflatten(w + d, params)
                cand_mse = _train_mse(candidate, data_train)
                if math.isfinite(cand_mse) and cand_mse <= train_mse:
                    state["lam"] = max(lam * 0.1, 1e-15)
                    return candidate, None
            lam *= 10.0
            if lam > LM_LAMBDA_LIMIT:
                state["lam"] = lam
                return params, (f"lm damping overflow (lambda={lam:.3g}) "
                                f"at iteration {it}")
        state["lam"] = lam
        return params, None

    return _drive(config, data_train, data_val, init_params, step)


_TRAINERS = {"owo-bp": train_owo_bp, "oig-bp": train_oig_bp,
             "oig-hwo": train_oig_hwo, "scg": train_scg, "lm": train_lm}


def train(config: TrainConfig, data_train: Dataset, data_val: Dataset,
          init_params: MlpParams | None = None) -> TrainTrace:
    """Dispatch to the trainer named by config.algorithm."""
    return _TRAINERS[config.algorithm](config, data_train, data_val,
                                       init_params=init_params)
