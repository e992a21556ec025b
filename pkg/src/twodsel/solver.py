"""Block coordinate proximal descent (BCPD) and the block coordinate descent reference.

Both factor blocks reduce to the same computation. With ``V`` fixed the model
is a grouped GLM in ``U`` on the projected design ``Z_i = X_i V^T`` (rows of
``U`` are the groups); with ``U`` fixed it is a grouped GLM in ``V^T`` on
``Z_i = X_i^T U`` (rows of ``V^T`` are the columns of ``V``). Every update in
this module goes through :func:`_prox_step` on such a design.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, DivergenceError, ValidationError
from .glm import FactorModel, eta_gradient, nll_from_eta
from .prox import penalty_value, row_soft_threshold

log = logging.getLogger(__name__)

STEPSIZE_MODES = ("analytic", "backtracking")


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and stepsize policy.

    ``backtrack_start`` is the fraction of the analytic Lipschitz constant the
    backtracking search starts from; the constant is then divided by
    ``backtrack_shrink`` until the block surrogate bounds the likelihood.
    ``inner_tol``/``inner_max_iter`` only apply to :func:`bcd_fit` and to
    :func:`prox_gradient_fit`.
    """

    epsilon: float = 1e-4
    max_iter: int = 1500
    stepsize_mode: str = "analytic"
    backtrack_shrink: float = 0.5
    min_objective_decrease: float = 0.0
    backtrack_start: float = 0.1
    inner_tol: float = 1e-6
    inner_max_iter: int = 5000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if self.max_iter < 1 or self.inner_max_iter < 1:
            raise ValidationError("iteration limits must be at least 1")
        if self.stepsize_mode not in STEPSIZE_MODES:
            raise ValidationError(f"stepsize_mode must be one of {STEPSIZE_MODES}")
        if not 0 < self.backtrack_shrink < 1:
            raise ValidationError("backtrack_shrink must lie in (0, 1)")
        if not 0 < self.backtrack_start <= 1:
            raise ValidationError("backtrack_start must lie in (0, 1]")
        if self.min_objective_decrease < 0:
            raise ValidationError("min_objective_decrease must be nonnegative")
        if not self.inner_tol > 0:
            raise ValidationError("inner_tol must be positive")


# Defaults for the selection pipeline and the comparison methods. The analytic
# constants guarantee descent but are very loose; along a lambda path they stall
# long before the supports settle, so the pipeline backtracks from a thousandth
# of the analytic constant instead.
PIPELINE_CONFIG = SolverConfig(stepsize_mode="backtracking", backtrack_start=1e-3)


@dataclass
class FitResult:
    """Outcome of a factorized fit.

    ``objective_trace[0]`` is the objective at the initial point, so the
    trace has ``iterations + 1`` entries. ``lu_trace``/``lv_trace`` hold the
    stepsize constants actually used and ``step_sq_trace`` the squared
    parameter movement of each iteration (both blocks, intercept included).
    """

    model: FactorModel
    B: np.ndarray
    objective_trace: list
    q_trace: list
    iterations: int
    converged: bool
    nll: float
    penalty: float
    lu_trace: list = field(default_factory=list)
    lv_trace: list = field(default_factory=list)
    step_sq_trace: list = field(default_factory=list)

    @property
    def objective(self):
        return self.objective_trace[-1]

    def to_dict(self):
        return {
            "U": self.model.U.tolist(),
            "V": self.model.V.tolist(),
            "beta": self.model.beta,
            "B": self.B.tolist(),
            "objective_trace": list(self.objective_trace),
            "q_trace": list(self.q_trace),
            "lu_trace": list(self.lu_trace),
            "lv_trace": list(self.lv_trace),
            "iterations": self.iterations,
            "converged": self.converged,
            "nll": self.nll,
            "penalty": self.penalty,
        }


def convergence_metric(B_prev, B_curr, F_prev, F_curr):
    """Largest of the relative change in ``B`` and the relative change in the objective."""
    dB = np.linalg.norm(np.asarray(B_curr) - np.asarray(B_prev)) / (1.0 + np.linalg.norm(B_prev))
    dF = abs(F_curr - F_prev) / (1.0 + F_prev)
    return float(max(dB, dF))


def _lipschitz_from_design(Z, family):
    norms = np.sqrt(np.einsum("nij,nij->n", Z, Z))
    return float(np.sqrt(2.0) * np.sum(family.lipschitz_weights(Z.shape[0]) * (1.0 + norms) ** 2))


def _eta(Z, C, beta):
    return beta + np.tensordot(Z, C, axes=([1, 2], [0, 1]))


def _prox_step(Z, y, family, C, beta, eta, f, L, lam, gamma, group_norms, config, analytic_L):
    """One linearized proximal step on ``(C, beta)`` for the design ``Z``.

    The constant ``L`` is raised until ``f(new) <= f + <g, d> + L/2 |d|^2``.
    With an analytic ``L`` this holds in exact arithmetic and the loop only
    guards against rounding; in backtracking mode ``L`` starts below the
    analytic value and never ends above it.
    """
    d = eta_gradient(eta, y, family)
    gC = np.tensordot(d, Z, axes=1)
    gb = float(d.sum())
    slack = 1e-12 * (1.0 + abs(f))
    while True:
        C_new = row_soft_threshold(C - gC / L, lam / (L * group_norms), gamma)
        b_new = beta - gb / L
        eta_new = _eta(Z, C_new, b_new)
        f_new = nll_from_eta(eta_new, y, family)
        dC = C_new - C
        db = b_new - beta
        sq = float(np.sum(dC * dC) + db * db)
        bound = f + float(np.sum(gC * dC)) + gb * db + 0.5 * L * sq
        if f_new <= bound + slack:
            return C_new, b_new, eta_new, f_new, L, sq
        # past the analytic constant only as a safeguard against rounding
        L = L / config.backtrack_shrink if L >= analytic_L else min(L / config.backtrack_shrink, analytic_L)


def _start_L(analytic_L, config):
    if config.stepsize_mode == "backtracking":
        return analytic_L * config.backtrack_start
    return analytic_L


def _check_inputs(data, init, weights):
    s, t = data.X.shape[1:]
    if init.shape != (s, t):
        raise DimensionError(f"initial factors give a {init.shape} matrix, predictors are {(s, t)}")
    if weights.shape != (s, t):
        raise DimensionError(f"weights cover {weights.shape} groups, predictors are {(s, t)}")


def _objective(model, f, weights, penalty):
    return f + penalty_value(model.U, model.V, weights, penalty)


def _check_finite(F, k):
    if not np.isfinite(F):
        raise DivergenceError(f"objective is not finite at iteration {k}", iteration=k)


def bcpd_fit(data, init, weights, penalty, config=None):
    """Fit the penalized factor model by block coordinate proximal descent.

    Each iteration takes one proximal-gradient step on ``(U, beta)`` with
    ``V`` fixed (stepsize from ``lipschitz_u`` at the previous ``V``) and one
    on ``(V, beta)`` with the new ``U`` fixed (stepsize from ``lipschitz_v``
    at the new ``U``), then stops once the convergence metric drops to
    ``config.epsilon``.
    """
    config = config or SolverConfig()
    _check_inputs(data, init, weights)
    X, y, family = data.X, data.y, data.family
    Xt = data.transposed().X
    lam, gamma = penalty.lam, penalty.gamma

    U = init.U.copy()
    V = init.V.copy()
    beta = init.beta
    B = U @ V
    eta = _eta(X, B, beta)
    f = nll_from_eta(eta, y, family)
    F = _objective(FactorModel(U, V, beta), f, weights, penalty)
    _check_finite(F, 0)

    trace, q_trace, lu_trace, lv_trace, step_trace = [F], [], [], [], []
    converged = False
    k = 0
    for k in range(1, config.max_iter + 1):
        Zu = X @ V.T
        Lu_bar = _lipschitz_from_design(Zu, family)
        U, beta, eta, f, Lu, sq_u = _prox_step(
            Zu, y, family, U, beta, eta, f, _start_L(Lu_bar, config), lam, gamma,
            weights.row_norms, config, Lu_bar,
        )
        Zv = Xt @ U
        Lv_bar = _lipschitz_from_design(Zv, family)
        Vt, beta, eta, f, Lv, sq_v = _prox_step(
            Zv, y, family, V.T, beta, eta, f, _start_L(Lv_bar, config), lam, gamma,
            weights.col_norms, config, Lv_bar,
        )
        V = np.ascontiguousarray(Vt.T)

        B_new = U @ V
        F_new = f + penalty_value(U, V, weights, penalty)
        _check_finite(F_new, k)
        if F_new > F + config.min_objective_decrease + 1e-10 * (1.0 + abs(F)):
            log.warning("objective increased at iteration %d: %.12g -> %.12g", k, F, F_new)
        q = convergence_metric(B, B_new, F, F_new)
        B, F = B_new, F_new
        trace.append(F)
        q_trace.append(q)
        lu_trace.append(Lu)
        lv_trace.append(Lv)
        step_trace.append(sq_u + sq_v)
        if q <= config.epsilon:
            converged = True
            break

    model = FactorModel(U, V, beta)
    return FitResult(
        model=model, B=B, objective_trace=trace, q_trace=q_trace, iterations=k,
        converged=converged, nll=f, penalty=F - f, lu_trace=lu_trace,
        lv_trace=lv_trace, step_sq_trace=step_trace,
    )


@dataclass
class GroupedFit:
    """Result of :func:`prox_gradient_fit` on a single grouped block."""

    C: np.ndarray
    beta: float
    nll: float
    objective: float
    iterations: int
    converged: bool


def prox_gradient_fit(Z, y, family, C0, beta0, group_norms, lam, gamma, config=None,
                      tol=None, max_iter=None):
    """Minimize ``nll(beta + <C, Z_i>) + lam*gamma*sum_j ||c_j|| / group_norms[j]``.

    Plain proximal gradient with the analytic constant of the design (or
    backtracking below it). Stops when the relative change of ``C`` and of
    the objective falls to ``tol`` (``config.inner_tol`` by default).
    """
    config = config or SolverConfig()
    tol = config.inner_tol if tol is None else tol
    max_iter = config.inner_max_iter if max_iter is None else max_iter
    group_norms = np.asarray(group_norms, dtype=float)
    C = np.array(C0, dtype=float)
    beta = float(beta0)
    eta = _eta(Z, C, beta)
    f = nll_from_eta(eta, y, family)

    def pen(M):
        return lam * gamma * float(np.sum(np.linalg.norm(M, axis=1) / group_norms))

    F = f + pen(C)
    _check_finite(F, 0)
    L_bar = _lipschitz_from_design(Z, family)
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        C_new, beta, eta, f, _, _ = _prox_step(
            Z, y, family, C, beta, eta, f, _start_L(L_bar, config), lam, gamma,
            group_norms, config, L_bar,
        )
        F_new = f + pen(C_new)
        _check_finite(F_new, k)
        q = convergence_metric(C, C_new, F, F_new)
        C, F = C_new, F_new
        if q <= tol:
            converged = True
            break
    return GroupedFit(C=C, beta=beta, nll=f, objective=F, iterations=k, converged=converged)


def bcd_fit(data, init, weights, penalty, config=None):
    """Reference solver: alternate near-exact minimization over ``(U, beta)`` and ``(V, beta)``.

    Each block subproblem is convex and is solved by :func:`prox_gradient_fit`
    to ``config.inner_tol``. Much slower than :func:`bcpd_fit`; meant for
    cross-checking it.
    """
    config = config or SolverConfig()
    _check_inputs(data, init, weights)
    X, y, family = data.X, data.y, data.family
    Xt = data.transposed().X
    lam, gamma = penalty.lam, penalty.gamma

    U = init.U.copy()
    V = init.V.copy()
    beta = init.beta
    B = U @ V
    f = nll_from_eta(_eta(X, B, beta), y, family)
    F = f + penalty_value(U, V, weights, penalty)
    _check_finite(F, 0)

    trace, q_trace = [F], []
    converged = False
    k = 0
    for k in range(1, config.max_iter + 1):
        sub = prox_gradient_fit(X @ V.T, y, family, U, beta, weights.row_norms, lam, gamma, config)
        U, beta = sub.C, sub.beta
        sub = prox_gradient_fit(Xt @ U, y, family, V.T, beta, weights.col_norms, lam, gamma, config)
        V, beta, f = np.ascontiguousarray(sub.C.T), sub.beta, sub.nll

        B_new = U @ V
        F_new = f + penalty_value(U, V, weights, penalty)
        _check_finite(F_new, k)
        q = convergence_metric(B, B_new, F, F_new)
        B, F = B_new, F_new
        trace.append(F)
        q_trace.append(q)
        if q <= config.epsilon:
            converged = True
            break

    return FitResult(
        model=FactorModel(U, V, beta), B=B, objective_trace=trace, q_trace=q_trace,
        iterations=k, converged=converged, nll=f, penalty=F - f,
    )


def objective(model, data, weights, penalty):
    """Penalized objective ``nll + penalty`` at ``model``."""
    f = nll_from_eta(_eta(data.X, model.B, model.beta), data.y, data.family)
    return f + penalty_value(model.U, model.V, weights, penalty)


