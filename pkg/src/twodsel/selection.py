"""Initialization, adaptive weights, lambda paths and rank/lambda selection by AIC/BIC."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .glm import BINOMIAL, NORMAL, FactorModel, eta_from_B, eta_gradient
from .prox import AdaptiveWeights, PenaltySpec
from .solver import PIPELINE_CONFIG, _lipschitz_from_design, bcpd_fit

log = logging.getLogger(__name__)

IC_KINDS = ("aic", "bic")


@dataclass
class InitResult:
    model: FactorModel
    B_tilde: np.ndarray
    clamped: np.ndarray  # entries whose univariate fit did not converge


def _univariate_slopes(data, max_steps=50, tol=1e-8, clamp=10.0):
    """Slope of ``y ~ a + b x_jk`` for every entry ``(j, k)``, fitted jointly by Newton's method."""
    X, y, family = data.X, data.y, data.family
    n, s, t = X.shape
    x = X.reshape(n, s * t)
    if family.kind == NORMAL:
        xc = x - x.mean(axis=0)
        sxx = np.einsum("ni,ni->i", xc, xc)
        sxy = xc.T @ (y - y.mean())
        with np.errstate(invalid="ignore", divide="ignore"):
            b = np.where(sxx > 1e-12 * n, sxy / sxx, 0.0)
        return b.reshape(s, t), np.zeros((s, t), dtype=bool)

    trials = family.trials if family.kind == BINOMIAL else np.ones(n)
    p0 = np.clip(y.sum() / trials.sum(), 1e-6, 1 - 1e-6)
    a = np.full(s * t, np.log(p0 / (1 - p0)))
    b = np.zeros(s * t)
    converged = np.zeros(s * t, dtype=bool)
    for _ in range(max_steps):
        eta = a + x * b
        mu = trials[:, None] / (1.0 + np.exp(-eta))
        w = mu * (1.0 - mu / trials[:, None])
        r = y[:, None] - mu
        ga, gb = r.sum(axis=0), (r * x).sum(axis=0)
        haa, hab, hbb = w.sum(axis=0), (w * x).sum(axis=0), (w * x * x).sum(axis=0)
        det = haa * hbb - hab**2
        ok = det > 1e-12 * np.maximum(haa * hbb, 1e-300)
        da = np.where(ok, (hbb * ga - hab * gb) / np.where(ok, det, 1.0), ga / np.maximum(haa, 1e-12))
        db = np.where(ok, (haa * gb - hab * ga) / np.where(ok, det, 1.0), 0.0)
        a = a + np.where(converged, 0.0, da)
        b = b + np.where(converged, 0.0, db)
        converged |= np.maximum(np.abs(da), np.abs(db)) < tol * (1.0 + np.abs(b))
        if converged.all():
            break
    bad = ~converged | ~np.isfinite(b) | (np.abs(b) > clamp)
    b = np.where(np.isfinite(b), np.clip(b, -clamp, clamp), 0.0)
    return b.reshape(s, t), bad.reshape(s, t)


def null_intercept(data):
    """Link of the mean response, the intercept of the intercept-only model."""
    family, y = data.family, data.y
    if family.kind == NORMAL:
        return float(y.mean())
    total = family.trials.sum() if family.kind == BINOMIAL else y.size
    mu = float(np.clip(y.sum() / total, 1e-6, 1 - 1e-6))
    return float(np.log(mu / (1 - mu)))


def init_heuristic(data, rank, split_singular_values=False, clamp=10.0):
    """Starting factors from the SVD of entrywise univariate GLM slopes.

    ``U0`` holds the leading ``rank`` left singular vectors and ``V0`` the
    leading right singular vectors (as rows). With ``split_singular_values``
    the square roots of the singular values are folded into both factors so
    that ``U0 V0`` is the truncated SVD of the slope matrix.
    """
    s, t = data.X.shape[1:]
    if not 1 <= rank <= min(s, t):
        raise ValidationError(f"rank must lie in [1, {min(s, t)}], got {rank}")
    B_tilde, bad = _univariate_slopes(data, clamp=clamp)
    if bad.any():
        warnings.warn(
            f"{int(bad.sum())} univariate fits did not converge; slopes clamped to +/-{clamp}",
            RuntimeWarning, stacklevel=2,
        )
    left, sv, right = np.linalg.svd(B_tilde)
    U0 = left[:, :rank].copy()
    V0 = right[:rank, :].copy()
    if split_singular_values:
        root = np.sqrt(sv[:rank])
        U0 *= root
        V0 *= root[:, None]
    return InitResult(FactorModel(U0, V0, null_intercept(data)), B_tilde, bad)


def adaptive_weights(data, rank, init, config=None):
    """Row norms of ``U`` and column norms of ``V`` from the unpenalized fit, floored at 1e-6."""
    fit = bcpd_fit(data, init, AdaptiveWeights.uniform(*data.X.shape[1:]),
                   PenaltySpec.for_rank(0.0, rank), config)
    return AdaptiveWeights.from_factors(fit.model.U, fit.model.V), fit


def information_criterion(nll, df, n, kind="aic"):
    if df < 0:
        raise ValidationError("df must be nonnegative")
    kind = kind.lower()
    if kind == "aic":
        return 2.0 * nll + 2.0 * df
    if kind == "bic":
        return 2.0 * nll + df * np.log(n)
    raise ValidationError(f"ic kind must be one of {IC_KINDS}")


def degrees_of_freedom(rank, n_rows, n_cols):
    """Free parameters of a rank-``rank`` matrix on an ``n_rows x n_cols`` support, plus intercept.

    The rank is capped by the support size, so an empty support gives 1.
    """
    r = min(rank, n_rows, n_cols)
    return r * (n_rows + n_cols - r) + 1


def active_sets(B):
    nonzero = np.asarray(B) != 0  # not norms: tiny entries would underflow to a zero norm
    rows = np.flatnonzero(nonzero.any(axis=1))
    cols = np.flatnonzero(nonzero.any(axis=0))
    return rows.tolist(), cols.tolist()


def lambda_max(data, weights, init, config=None):
    """Smallest lambda at which the first BCPD iteration from ``init`` zeroes every group.

    Row ``j`` is zeroed by the ``U`` step iff
    ``||L_u u_j - g_j|| * ||u_hat_j|| / gamma <= lambda``. Once ``U = 0`` the
    ``V`` gradient vanishes and column ``k`` is zeroed iff
    ``L_v(0) ||v_k|| * ||v_hat_k|| / gamma <= lambda``. In backtracking mode
    the analytic constants are an upper bound, so the value is conservative.
    """
    X, y, family = data.X, data.y, data.family
    gamma = np.sqrt(init.rank)
    Zu = X @ init.V.T
    Lu = _lipschitz_from_design(Zu, family)
    d = eta_gradient(eta_from_B(X, init.B, init.beta), y, family)
    gU = np.tensordot(d, Zu, axes=1)
    row_need = np.linalg.norm(Lu * init.U - gU, axis=1) * weights.row_norms / gamma
    Lv0 = float(np.sqrt(2.0) * family.lipschitz_weights(data.n).sum())
    col_need = Lv0 * np.linalg.norm(init.V, axis=0) * weights.col_norms / gamma
    return float(max(row_need.max(), col_need.max()))


def gradient_lambda_max(data, weights, init):
    """Largest weighted group-gradient norm at ``init``: ``max ||g_group|| * ||w_group|| / gamma``."""
    X, y, family = data.X, data.y, data.family
    gamma = np.sqrt(init.rank)
    d = eta_gradient(eta_from_B(X, init.B, init.beta), y, family)
    G = np.tensordot(d, X, axes=1)
    rows = np.linalg.norm(G @ init.V.T, axis=1) * weights.row_norms
    cols = np.linalg.norm(init.U.T @ G, axis=0) * weights.col_norms
    return float(max(rows.max(), cols.max()) / gamma)


def lambda_grid(data, weights, init, n_lambda=50, ratio=1e-3):
    """``n_lambda`` log-spaced values from :func:`gradient_lambda_max` down to ``ratio`` times it."""
    top = gradient_lambda_max(data, weights, init)
    if not top > 0:
        warnings.warn("gradient vanishes at the initial point; lambda grid is {0}",
                      RuntimeWarning, stacklevel=2)
        return [0.0]
    if n_lambda == 1:
        return [top]
    return np.geomspace(top, top * ratio, n_lambda).tolist()


@dataclass
class SelectionReport:
    B_hat: np.ndarray
    active_rows: list
    active_cols: list
    chosen_rank: int | None
    chosen_lambda: float
    ic_table: list
    fit: object = None
    ic_kind: str = "aic"
    notes: list = field(default_factory=list)

    def to_dict(self):
        out = {
            "B_hat": np.asarray(self.B_hat).tolist(),
            "active_rows": list(self.active_rows),
            "active_cols": list(self.active_cols),
            "chosen_rank": self.chosen_rank,
            "chosen_lambda": self.chosen_lambda,
            "ic_kind": self.ic_kind,
            "ic_table": [dict(row) for row in self.ic_table],
            "notes": list(self.notes),
        }
        if self.fit is not None and hasattr(self.fit, "to_dict"):
            out["fit"] = self.fit.to_dict()
        return out


def _warm_start(previous, init):
    # from B = 0 both factor gradients vanish, so a zero solution cannot seed the next lambda
    if previous is None or not np.any(previous.B):
        return init
    return previous.model


def fit_path(data, rank, config=None, ic_kind="aic", n_lambda=50, lambdas=None,
             split_singular_values=False, warm_start=True):
    """Fit one rank over a decreasing lambda path; returns ``(rows, fits)`` for the IC table."""
    config = config or PIPELINE_CONFIG
    init = init_heuristic(data, rank, split_singular_values=split_singular_values).model
    weights, _ = adaptive_weights(data, rank, init, config)
    if lambdas is None:
        lambdas = lambda_grid(data, weights, init, n_lambda=n_lambda)
    rows, fits = [], []
    previous = None
    for lam in sorted(lambdas, reverse=True):
        start = _warm_start(previous, init) if warm_start else init
        row = {"rank": rank, "lambda": float(lam)}
        try:
            fit = bcpd_fit(data, start, weights, PenaltySpec.for_rank(lam, rank), config)
        except (ArithmeticError, ValueError) as exc:
            log.warning("rank %d lambda %.4g failed: %s", rank, lam, exc)
            row.update(error=str(exc))
            rows.append(row)
            fits.append(None)
            continue
        a = int(np.count_nonzero((fit.model.U != 0).any(axis=1)))
        b = int(np.count_nonzero((fit.model.V != 0).any(axis=0)))
        df = degrees_of_freedom(rank, a, b)
        row.update(nll=fit.nll, df=df, ic=information_criterion(fit.nll, df, data.n, ic_kind),
                   iterations=fit.iterations, converged=fit.converged)
        rows.append(row)
        fits.append(fit)
        previous = fit
    return rows, fits


def select(data, ranks=(1, 2, 3, 4), config=None, ic_kind="aic", n_lambda=50, lambdas=None,
           split_singular_values=False):
    """Choose rank and lambda jointly by minimizing the information criterion.

    Ties go to the smaller rank, then to the larger lambda.
    """
    ic_kind = ic_kind.lower()
    if ic_kind not in IC_KINDS:
        raise ValidationError(f"ic kind must be one of {IC_KINDS}")
    s, t = data.X.shape[1:]
    ranks = sorted(set(int(r) for r in ranks))
    if not ranks or ranks[0] < 1 or ranks[-1] > min(s, t):
        raise ValidationError(f"ranks must lie in [1, {min(s, t)}]")
    table, best = [], None
    for rank in ranks:
        try:
            rows, fits = fit_path(data, rank, config, ic_kind, n_lambda, lambdas,
                                  split_singular_values)
        except (ArithmeticError, ValueError) as exc:
            log.warning("rank %d failed: %s", rank, exc)
            table.append({"rank": rank, "error": str(exc)})
            continue
        for row, fit in zip(rows, fits):
            table.append(row)
            if fit is None:
                continue
            key = (row["ic"], rank, -row["lambda"])
            if best is None or key < best[0]:
                best = (key, row, fit)
    if best is None:
        raise ArithmeticError("every (rank, lambda) cell failed")
    _, row, fit = best
    rows_, cols_ = active_sets(fit.B)
    return SelectionReport(
        B_hat=fit.B, active_rows=rows_, active_cols=cols_, chosen_rank=row["rank"],
        chosen_lambda=row["lambda"], ic_table=table, fit=fit, ic_kind=ic_kind,
    )


def resample_selection(data, selector, resamples, subsample, seed=0):
    """Selection rates (percent) of every row and column over random subsamples.

    ``selector(subset) -> SelectionReport``. Subsample ``r`` is drawn without
    replacement from an independent stream derived from ``seed``, so equal
    seeds give equal rate tables.
    """
    n, s, t = data.X.shape
    if not 1 <= subsample <= n:
        raise ValidationError(f"subsample must lie in [1, {n}]")
    if resamples < 1:
        raise ValidationError("resamples must be at least 1")
    row_hits = np.zeros(s)
    col_hits = np.zeros(t)
    for r in range(resamples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))
        index = np.sort(rng.choice(n, size=subsample, replace=False))
        report = selector(data.subset(index))
        row_hits[list(report.active_rows)] += 1
        col_hits[list(report.active_cols)] += 1
    return 100.0 * row_hits / resamples, 100.0 * col_hits / resamples
