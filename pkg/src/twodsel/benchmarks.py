"""Comparison methods: sequential row/column adaptive group LASSO and the rank-1 pipeline.

The grouped fits are the factorized model with one factor pinned to the
identity: for row groups ``B = C I_t`` and only the rows of ``C`` are
penalized (group size ``t``, so ``gamma = sqrt(t)``). Column groups are the
same problem on the transposed predictors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .glm import eta_gradient
from .selection import (
    SelectionReport,
    information_criterion,
    null_intercept,
    select,
)
from .solver import PIPELINE_CONFIG, prox_gradient_fit

log = logging.getLogger(__name__)

GROUPINGS = ("rows", "cols")


@dataclass
class GroupedGLMProblem:
    """Full-coefficient GLM with row or column groups, optionally restricted by ``active_mask``.

    ``active_mask`` lists the indices of the *other* dimension that are kept:
    for ``grouping="cols"`` after a row stage it holds the surviving rows.
    """

    data: object
    grouping: str = "rows"
    active_mask: object = None

    def __post_init__(self):
        if self.grouping not in GROUPINGS:
            raise ValidationError(f"grouping must be one of {GROUPINGS}")
        if self.active_mask is not None:
            other = self.data.X.shape[2 if self.grouping == "rows" else 1]
            mask = np.asarray(self.active_mask, dtype=int).reshape(-1)
            if mask.size and (mask.min() < 0 or mask.max() >= other):
                raise ValidationError("active_mask index out of range")
            self.active_mask = mask

    def design(self):
        """Predictor stack with the groups along axis 1."""
        X = self.data.X if self.grouping == "rows" else self.data.X.transpose(0, 2, 1)
        if self.active_mask is not None:
            X = X[:, :, self.active_mask]
        return np.ascontiguousarray(X)


@dataclass
class GroupedFitResult:
    C: np.ndarray  # groups along axis 0; restricted to active_mask on axis 1
    beta: float
    active_groups: list
    nll: float
    converged: bool


def grouped_glm_fit(problem, lam, weights=None, config=None, C0=None, beta0=None):
    """Adaptive group-LASSO fit of ``beta + <C, X_i>``; ``weights`` are the unpenalized group norms."""
    config = config or PIPELINE_CONFIG
    Z = problem.design()
    g, m = Z.shape[1:]
    data = problem.data
    weights = np.ones(g) if weights is None else np.maximum(np.asarray(weights, dtype=float), 1e-6)
    C0 = np.zeros((g, m)) if C0 is None else C0
    beta0 = null_intercept(data) if beta0 is None else beta0
    tol = min(config.epsilon, config.inner_tol)
    fit = prox_gradient_fit(Z, data.y, data.family, C0, beta0, weights, lam, np.sqrt(m), config,
                            tol=tol, max_iter=config.max_iter)
    active = np.flatnonzero((fit.C != 0).any(axis=1)).tolist()
    return GroupedFitResult(fit.C, fit.beta, active, fit.nll, fit.converged)


def grouped_weights(problem, config=None):
    """Group norms of the unpenalized fit of the same problem."""
    fit = grouped_glm_fit(problem, 0.0, None, config)
    return np.maximum(np.linalg.norm(fit.C, axis=1), 1e-6), fit


def grouped_lambda_grid(problem, weights, n_lambda=50, ratio=1e-3):
    """From the smallest lambda that keeps every group at zero, down ``ratio`` of it."""
    Z = problem.design()
    data = problem.data
    beta0 = null_intercept(data)
    d = eta_gradient(np.full(data.n, beta0), data.y, data.family)
    G = np.tensordot(d, Z, axes=1)
    top = float(np.max(np.linalg.norm(G, axis=1) * weights) / np.sqrt(Z.shape[2]))
    if not top > 0:
        return [0.0]
    return np.geomspace(top, top * ratio, n_lambda).tolist()


def grouped_select(problem, config=None, ic_kind="aic", n_lambda=50):
    """Lambda by information criterion along a warm-started path; df = active coefficients + 1."""
    weights, _ = grouped_weights(problem, config)
    m = problem.design().shape[2]
    best, table = None, []
    C, beta = None, None
    for lam in grouped_lambda_grid(problem, weights, n_lambda):
        fit = grouped_glm_fit(problem, lam, weights, config, C, beta)
        C, beta = fit.C, fit.beta
        df = len(fit.active_groups) * m + 1
        ic = information_criterion(fit.nll, df, problem.data.n, ic_kind)
        table.append({"lambda": lam, "nll": fit.nll, "df": df, "ic": ic,
                      "grouping": problem.grouping})
        if best is None or (ic, -lam) < (best[0], -best[1]):
            best = (ic, lam, fit)
    return best[2], best[1], table


def _sequential(data, first, config=None, ic_kind="aic", n_lambda=50):
    s, t = data.X.shape[1:]
    stage1 = GroupedGLMProblem(data, first)
    fit1, lam1, table = grouped_select(stage1, config, ic_kind, n_lambda)
    survivors = fit1.active_groups
    notes = []
    B_hat = np.zeros((s, t))
    if not survivors:
        notes.append(f"stage 1 ({first}) removed every group; stage 2 skipped")
        other = []
        lam2 = None
    else:
        second = "cols" if first == "rows" else "rows"
        stage2 = GroupedGLMProblem(data, second, active_mask=survivors)
        fit2, lam2, table2 = grouped_select(stage2, config, ic_kind, n_lambda)
        table += table2
        other = fit2.active_groups
        # fit2.C has the stage-2 groups on axis 0 and the stage-1 survivors on axis 1
        if first == "rows":
            B_hat[np.ix_(survivors, np.arange(t))] = fit2.C.T
        else:
            B_hat[np.ix_(np.arange(s), survivors)] = fit2.C
    rows, cols = (survivors, other) if first == "rows" else (other, survivors)
    return SelectionReport(
        B_hat=B_hat, active_rows=sorted(rows), active_cols=sorted(cols), chosen_rank=None,
        chosen_lambda=lam1 if lam2 is None else lam2, ic_table=table, ic_kind=ic_kind,
        notes=notes,
    )


def benchmark_row_col(data, config=None, ic_kind="aic", n_lambda=50):
    """Row groups first, then column groups on the surviving rows."""
    return _sequential(data, "rows", config, ic_kind, n_lambda)


def benchmark_col_row(data, config=None, ic_kind="aic", n_lambda=50):
    """Column groups first, then row groups on the surviving columns."""
    return _sequential(data, "cols", config, ic_kind, n_lambda)


def benchmark_structured_lasso(data, config=None, ic_kind="aic", n_lambda=50, **kwargs):
    """The main pipeline restricted to rank one."""
    return select(data, ranks=(1,), config=config, ic_kind=ic_kind, n_lambda=n_lambda, **kwargs)


def run_method(method, data, config=None, ranks=(1, 2, 3, 4), ic_kind="aic", n_lambda=50):
    if method == "proposed":
        return select(data, ranks=ranks, config=config, ic_kind=ic_kind, n_lambda=n_lambda)
    if method == "row_col":
        return benchmark_row_col(data, config, ic_kind, n_lambda)
    if method == "col_row":
        return benchmark_col_row(data, config, ic_kind, n_lambda)
    if method == "structured":
        return benchmark_structured_lasso(data, config, ic_kind, n_lambda)
    raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")


METHODS = ("proposed", "row_col", "col_row", "structured")
