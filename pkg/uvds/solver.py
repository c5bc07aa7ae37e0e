"""
Alternating optimizer for the attribute-to-feature embedding.

Minimizes

    J = ||X_s - V Q||^2 + alpha ||V - A_s P||^2 + lambda Tr(V^T L V)
        - beta ||Q^T V^T||_{2,1}        s.t. Q Q^T = I

by repeating a V-step (symmetric Sylvester solve), a Q-step (Cayley flow
with Armijo backtracking) and a P-step (least squares).
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from uvds.dataset import Dataset
from uvds.exceptions import (
    ConfigError,
    DivergedError,
    NonFiniteError,
    RankDeficientError,
    ShapeMismatchError,
)
from uvds.graphs import GraphSet
from uvds.kernels import (
    Matrix,
    Vector,
    SymEig,
    center_columns,
    check_finite,
    column_l21,
    default_ridge,
    lstsq,
    nearest_orthogonal,
    orthogonality_error,
    solve_sylvester_symmetric,
    sym_eig,
)
from uvds.logger import INNER_ITERATION_FLAG

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_HALVINGS = 20
REORTHO_DRIFT = 1e-10
# largest share of 2 + 2 alpha the implicit diffusion weight may take in the V-step
IMPLICIT_WEIGHT_SHARE = 0.25


class SolverConfig(BaseModel):
    """Hyper-parameters and stopping rules of one fit."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    lambda_: float = Field(default=0.1, ge=0.0, alias="lambda")
    beta: float = Field(default=0.1, ge=0.0)
    gamma: float = Field(default=1.0, ge=0.0)
    alpha: float = Field(default=1.0, gt=0.0)
    k: int = Field(default=10, ge=1)
    outer_iters: int = Field(default=10, ge=0)
    q_max_iters: int = Field(default=50, ge=1)
    q_tol: float = Field(default=1e-6, gt=0.0)
    tau_init: float = Field(default=0.1, gt=0.0)
    eps_pi: float = Field(default=1e-10, gt=0.0)
    early_stop_tol: float = Field(default=1e-8, ge=0.0)
    refresh_e_inner: bool = True
    seed: int = Field(default=0, ge=0)

    @classmethod
    def build(cls, **values) -> "SolverConfig":
        """Construct from keyword values, reporting failures as ConfigError."""
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(str(e), {"fields": [".".join(map(str, err["loc"])) for err in e.errors()]})

    def with_updates(self, **values) -> "SolverConfig":
        data = self.model_dump(by_alias=True)
        data.update({("lambda" if k == "lambda_" else k): v for k, v in values.items()})
        return SolverConfig.build(**data)


@dataclass
class ModelParams:
    p: Matrix
    q: Matrix
    v: Optional[Matrix] = None


@dataclass(frozen=True)
class DiffusionStats:
    sigma: Vector
    pi: Vector
    pi_variance: float
    gamma_total: float


@dataclass(frozen=True)
class QStepOutcome:
    q: Matrix
    iterations: int
    line_search_failed: bool = False


@dataclass
class FitResult:
    params: ModelParams
    loss_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    line_search_failures: int = 0


def _check_shapes(ds: Dataset, params: ModelParams, operation: str) -> None:
    n, d, m = ds.n_samples, ds.n_features, ds.n_attributes
    if params.p.shape != (m, d):
        raise ShapeMismatchError(operation, f"P {m}x{d}", params.p.shape)
    if params.q.shape != (d, d):
        raise ShapeMismatchError(operation, f"Q {d}x{d}", params.q.shape)
    if params.v is None or params.v.shape != (n, d):
        raise ShapeMismatchError(operation, f"V {n}x{d}", None if params.v is None else params.v.shape)


def graph_term(v: Matrix, lap: Matrix) -> float:
    """Tr(V^T L V)"""
    return float(np.sum(v * (lap @ v)))


def loss(ds: Dataset, gs: GraphSet, params: ModelParams, cfg: SolverConfig) -> float:
    _check_shapes(ds, params, "loss")
    v, q, p = params.v, params.q, params.p
    vq = v @ q
    value = (
        float(np.sum((ds.features - vq) ** 2))
        + cfg.alpha * float(np.sum((v - ds.attributes @ p) ** 2))
        + cfg.lambda_ * graph_term(v, gs.laplacian)
        - cfg.beta * column_l21(vq)
    )
    if not math.isfinite(value):
        raise NonFiniteError("loss")
    return value


def _pi(x: Matrix) -> Vector:
    return np.sqrt(np.sum(x * x, axis=0) / x.shape[0])


def _e_diagonal(v: Matrix, q: Matrix, eps_pi: float) -> Vector:
    n = v.shape[0]
    return 1.0 / (math.sqrt(n) * np.maximum(_pi(v @ q), eps_pi))


def diffusion_weights(v: Matrix, q: Matrix, eps_pi: float) -> Matrix:
    """Diagonal E with e_d = 1 / (sqrt(N) * max(pi_d, eps_pi)), pi taken from X = V Q."""
    return np.diag(_e_diagonal(v, q, eps_pi))


def assemble_v_system(
    ds: Dataset, gs: GraphSet, params: ModelParams, cfg: SolverConfig
) -> Tuple[Matrix, Matrix, Matrix]:
    """
    Operands of the V-step stationarity condition

        V (2 Q Q^T + 2 alpha I - beta Q E Q^T) + (2 lambda L + gamma 1^T 1) V
            = 2 X_s Q^T + 2 alpha A_s P

    returned as (left, right, rhs), with E frozen at the current (V, Q).

    A diffusion weight beta * e_d above IMPLICIT_WEIGHT_SHARE * (2 + 2 alpha)
    makes the frozen-weight iteration oscillate or the right operand
    indefinite. The excess is linearized at the current V instead and
    enters the right-hand side as beta_excess * V Q E_excess Q^T, so the
    right operand keeps eigenvalues of at least
    (1 - IMPLICIT_WEIGHT_SHARE) * (2 + 2 alpha) for any beta. Both forms share
    their fixed points.
    """
    _check_shapes(ds, params, "v_step")
    n, d = ds.n_samples, ds.n_features
    q, p = params.q, params.p
    weights = cfg.beta * _e_diagonal(params.v, q, cfg.eps_pi)
    implicit = np.minimum(weights, IMPLICIT_WEIGHT_SHARE * (2.0 + 2.0 * cfg.alpha))
    excess = weights - implicit

    right = 2.0 * (q @ q.T) + 2.0 * cfg.alpha * np.eye(d) - (q * implicit) @ q.T
    left = 2.0 * cfg.lambda_ * gs.laplacian + cfg.gamma * np.ones((n, n))
    rhs = 2.0 * ds.features @ q.T + 2.0 * cfg.alpha * ds.attributes @ p
    if np.any(excess > 0.0):
        logger.debug(f"V-step: linearizing diffusion weight on {int(np.count_nonzero(excess))} dimensions")
        rhs = rhs + ((params.v @ q) * excess) @ q.T
    return left, right, rhs


def v_step(
    ds: Dataset,
    gs: GraphSet,
    params: ModelParams,
    cfg: SolverConfig,
    left_eig: Optional[SymEig] = None,
) -> Matrix:
    """
    Solve the V-step Sylvester equation with E frozen at the current (V, Q),
    then re-center the columns of V.

    `left_eig` may carry the decomposition of 2 lambda L + gamma 1^T 1, which
    does not change during a fit.
    """
    left, right, rhs = assemble_v_system(ds, gs, params, cfg)
    v = solve_sylvester_symmetric(left, right, rhs, left_eig=left_eig)
    if logger.isEnabledFor(logging.DEBUG):
        residual = np.linalg.norm(v @ right + left @ v - rhs) / max(np.linalg.norm(rhs), 1e-300)
        logger.debug(f"V-step stationarity residual {residual:.3e}")
    v, _ = center_columns(v)
    return v


def q_objective(v: Matrix, q: Matrix, x: Matrix, beta: float, eps_pi: float) -> float:
    """1/2 ||X - V Q||^2 - beta * sum_d sqrt(N) * max(pi_d, eps_pi)"""
    vq = v @ q
    n = v.shape[0]
    l21 = math.sqrt(n) * float(np.sum(np.maximum(_pi(vq), eps_pi)))
    return 0.5 * float(np.sum((x - vq) ** 2)) - beta * l21


def _gradient(v: Matrix, q: Matrix, x: Matrix, beta: float, e: Vector) -> Matrix:
    vq = v @ q
    return v.T @ (vq - x) - beta * (v.T @ (vq * e))


def q_gradient(v: Matrix, q: Matrix, x: Matrix, beta: float, eps_pi: float) -> Matrix:
    """Delta = V^T (V Q - X) - beta V^T V Q E, with E frozen at Q."""
    if v.shape[1] != q.shape[0] or q.shape[0] != q.shape[1]:
        raise ShapeMismatchError("q_gradient", f"Q {v.shape[1]}x{v.shape[1]}", q.shape)
    if x.shape != (v.shape[0], q.shape[1]):
        raise ShapeMismatchError("q_gradient", f"X {v.shape[0]}x{q.shape[1]}", x.shape)
    return _gradient(v, q, x, beta, _e_diagonal(v, q, eps_pi))


def cayley_factor(phi: Matrix, tau: float) -> Matrix:
    """H = (I + tau/2 Phi)^-1 (I - tau/2 Phi); orthogonal for skew-symmetric Phi."""
    eye = np.eye(phi.shape[0])
    half = 0.5 * tau * phi
    return scipy.linalg.solve(eye + half, eye - half, check_finite=False)


def q_step(v: Matrix, q0: Matrix, x: Matrix, cfg: SolverConfig) -> QStepOutcome:
    """
    Cayley gradient flow on the orthogonal group for

        1/2 ||X - V Q||^2 - (beta/2) ||Q^T V^T||_{2,1},

    half of the Q-dependent part of J. Each step backtracks tau from
    tau_init until the Armijo condition holds; if no step is accepted the
    last accepted rotation is returned with `line_search_failed` set.
    """
    beta = 0.5 * cfg.beta
    q = q0.copy()
    e = _e_diagonal(v, q, cfg.eps_pi)
    failed = False
    iterations = 0

    for t in range(cfg.q_max_iters):
        if cfg.refresh_e_inner and t > 0:
            e = _e_diagonal(v, q, cfg.eps_pi)
        delta = _gradient(v, q, x, beta, e)
        phi = delta @ q.T - q @ delta.T
        slope = 0.5 * float(np.sum(phi * phi))
        if slope == 0.0:
            break

        f0 = q_objective(v, q, x, beta, cfg.eps_pi)
        tau = cfg.tau_init
        q_new = None
        for _ in range(MAX_HALVINGS + 1):
            candidate = cayley_factor(phi, tau) @ q
            if q_objective(v, candidate, x, beta, cfg.eps_pi) <= f0 - ARMIJO_C * tau * slope:
                q_new = candidate
                break
            tau *= 0.5
        if q_new is None:
            failed = True
            logger.warning(f"Q-step line search failed at inner iteration {t}; keeping current rotation")
            break

        if orthogonality_error(q_new) > REORTHO_DRIFT:
            q_new = nearest_orthogonal(q_new)
        step = float(np.linalg.norm(q_new - q))
        q = q_new
        iterations = t + 1
        logger.debug(f"Q-step {t}: tau={tau:.3e} |dQ|={step:.3e}", extra={INNER_ITERATION_FLAG: True})
        if step <= cfg.q_tol:
            break

    return QStepOutcome(q=q, iterations=iterations, line_search_failed=failed)


def p_step(a: Matrix, v: Matrix) -> Matrix:
    """P = (A^T A)^-1 A^T V"""
    return lstsq(a, v)


def _p_step_with_fallback(a: Matrix, v: Matrix) -> Matrix:
    try:
        return p_step(a, v)
    except RankDeficientError as e:
        ridge = default_ridge(a)
        logger.warning(f"{e.message}; retrying P-step with ridge {ridge:.3e}")
        return lstsq(a, v, ridge=ridge)


def initial_params(ds: Dataset) -> ModelParams:
    """Q = I, V = X_s, P = lstsq(A_s, V)"""
    v = ds.features.copy()
    return ModelParams(p=_p_step_with_fallback(ds.attributes, v), q=np.eye(ds.n_features), v=v)


def fit(ds: Dataset, gs: GraphSet, cfg: SolverConfig) -> FitResult:
    """
    Run up to `outer_iters` rounds of (V-step, Q-step, P-step).

    loss_trace[0] is J at the initialization, followed by J after every
    outer iteration. Stops early once |J_t - J_{t-1}| <= early_stop_tol * (1 + |J_{t-1}|).
    """
    check_finite(ds.features, "fit")
    check_finite(ds.attributes, "fit")
    params = initial_params(ds)
    result = FitResult(params=params, loss_trace=[loss(ds, gs, params, cfg)])
    logger.info(
        f"Fitting N={ds.n_samples} D={ds.n_features} M={ds.n_attributes} "
        f"lambda={cfg.lambda_} beta={cfg.beta} gamma={cfg.gamma} alpha={cfg.alpha}; J0={result.loss_trace[0]:.6e}"
    )
    if cfg.outer_iters == 0:
        return result

    left, _, _ = assemble_v_system(ds, gs, params, cfg)
    left_eig = sym_eig(left)

    for it in range(1, cfg.outer_iters + 1):
        started = time.perf_counter()
        params.v = v_step(ds, gs, params, cfg, left_eig=left_eig)
        outcome = q_step(params.v, params.q, ds.features, cfg)
        params.q = outcome.q
        if outcome.line_search_failed:
            result.line_search_failures += 1
        params.p = _p_step_with_fallback(ds.attributes, params.v)

        try:
            value = loss(ds, gs, params, cfg)
        except NonFiniteError:
            raise DivergedError(it)
        previous = result.loss_trace[-1]
        result.loss_trace.append(value)
        result.iterations = it
        logger.info(
            f"Outer iteration {it}: J={value:.6e} (Q-step {outcome.iterations} its, "
            f"{time.perf_counter() - started:.3f}s)"
        )
        if cfg.early_stop_tol > 0 and abs(value - previous) <= cfg.early_stop_tol * (1.0 + abs(previous)):
            result.converged = True
            logger.info(f"Converged after {it} outer iterations")
            break

    return result


def diffusion_stats(v: Matrix, q: Matrix) -> DiffusionStats:
    """Per-dimension variances of X = V Q and the spread Pi of their square roots (V centered)."""
    x = v @ q
    n = x.shape[0]
    sigma = np.sum(x * x, axis=0) / n
    pi = np.sqrt(sigma)
    return DiffusionStats(
        sigma=sigma,
        pi=pi,
        pi_variance=float(np.mean((pi - pi.mean()) ** 2)),
        gamma_total=float(n * np.sum(sigma)),
    )


def pi_statistic(features: Matrix) -> float:
    """
    Pi of a feature matrix after centering its columns and scaling them to a
    mean per-dimension variance of one.

    Pi only ranks how evenly a fixed total variance is spread, so features
    with different overall scale are compared at equal total variance. Zero
    for constant input.
    """
    centered, _ = center_columns(features)
    stats = diffusion_stats(centered, np.eye(centered.shape[1]))
    mean_variance = float(np.mean(stats.sigma))
    if mean_variance <= 0.0:
        return 0.0
    return stats.pi_variance / mean_variance
