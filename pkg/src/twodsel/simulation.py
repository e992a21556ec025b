"""Synthetic data for selection-accuracy studies and the replication harness.

Default scenario: 10 x 10 predictors, true rank 3, and the 1st, 3rd, 5th, 7th
and 9th rows of ``U`` plus the 2nd, 4th, 6th, 8th and 10th columns of ``V``
set to zero. Indices are stored 0-based, so the zero rows are ``(0, 2, 4, 6, 8)``
and the zero columns ``(1, 3, 5, 7, 9)``.

Responses come from a logistic model on ``X_i + E_i``. By default the
response is the success probability itself (``response="probability"``),
fitted with the fractional Bernoulli likelihood; ``response="bernoulli"``
draws 0/1 outcomes instead. The estimators see ``X_i + E_i`` by default
(``noisy_fit=False`` hands them the clean ``X_i``, which turns the predictor
noise into unobserved variation in the response).
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import ValidationError
from .glm import DataSet, ResponseFamily
from .solver import PIPELINE_CONFIG

log = logging.getLogger(__name__)

CORRELATIONS = ("iid", "row_correlated")
RESPONSES = ("probability", "bernoulli")



@dataclass(frozen=True)
class ScenarioSpec:
    correlation: str = "iid"
    nsr: float = 0.0
    n: int = 100
    s: int = 10
    t: int = 10
    true_rank: int = 3
    zero_rows: tuple = (0, 2, 4, 6, 8)
    zero_cols: tuple = (1, 3, 5, 7, 9)
    seed: int = 0
    rho: float = 0.5
    noisy_fit: bool = True
    response: str = "probability"

    def __post_init__(self):
        if self.correlation not in CORRELATIONS:
            raise ValidationError(f"correlation must be one of {CORRELATIONS}")
        if self.response not in RESPONSES:
            raise ValidationError(f"response must be one of {RESPONSES}")
        if not self.nsr >= 0:
            raise ValidationError("nsr must be nonnegative")
        if min(self.n, self.s, self.t, self.true_rank) < 1:
            raise ValidationError("n, s, t and true_rank must be positive")
        object.__setattr__(self, "zero_rows", tuple(int(j) for j in self.zero_rows))
        object.__setattr__(self, "zero_cols", tuple(int(k) for k in self.zero_cols))
        if any(not 0 <= j < self.s for j in self.zero_rows):
            raise ValidationError(f"zero_rows out of range for s={self.s}")
        if any(not 0 <= k < self.t for k in self.zero_cols):
            raise ValidationError(f"zero_cols out of range for t={self.t}")

    @property
    def crucial_rows(self):
        return tuple(j for j in range(self.s) if j not in self.zero_rows)

    @property
    def crucial_cols(self):
        return tuple(k for k in range(self.t) if k not in self.zero_cols)

    @property
    def label(self):
        return f"{self.correlation}/nsr={self.nsr:g}/n={self.n}"

    def to_dict(self):
        d = asdict(self)
        d["zero_rows"] = list(self.zero_rows)
        d["zero_cols"] = list(self.zero_cols)
        return d


def replication_rng(seed, index):
    """Independent generator for replication ``index`` of a study seeded by ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def gen_coefficients(spec, rng):
    """Uniform(-1, 1) factors with the designated rows/columns zeroed; returns ``(U, V, B)``."""
    U = rng.random((spec.s, spec.true_rank)) * 2 - 1
    V = rng.random((spec.true_rank, spec.t)) * 2 - 1
    U[list(spec.zero_rows), :] = 0.0
    V[:, list(spec.zero_cols)] = 0.0
    return U, V, U @ V


def row_covariance(s, rho=0.5):
    idx = np.arange(s)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def gen_predictors(spec, rng):
    """Predictor stack ``X (n, s, t)`` and additive noise ``E`` of the same shape.

    Noise entries are N(0, sigma^2) with ``sigma = nsr * sum_i ||X_i||_F / n``
    evaluated on the drawn ``X``.
    """
    Z = rng.standard_normal((spec.n, spec.s, spec.t))
    if spec.correlation == "row_correlated":
        chol = np.linalg.cholesky(row_covariance(spec.s, spec.rho))
        X = np.einsum("jk,nkt->njt", chol, Z)
    else:
        X = Z
    if spec.nsr == 0:
        return X, np.zeros_like(X)
    sigma = spec.nsr * np.linalg.norm(X, axis=(1, 2)).sum() / spec.n
    return X, sigma * rng.standard_normal(X.shape)


def gen_responses(B, X, E, rng, beta=0.0, response="probability"):
    """``sigmoid(beta + <B, X_i + E_i>)``, or Bernoulli draws from it when ``response="bernoulli"``."""
    p = expit(beta + np.tensordot(X + E, B, axes=([1, 2], [0, 1])))
    if response == "probability":
        return p
    return (rng.random(p.shape) < p).astype(float)


def simulate(spec, index=0):
    """One replication: returns ``(data, B_true)`` with ``data`` holding what the estimators see."""
    rng = replication_rng(spec.seed, index)
    _, _, B = gen_coefficients(spec, rng)
    X, E = gen_predictors(spec, rng)
    y = gen_responses(B, X, E, rng, response=spec.response)
    fit_X = X + E if spec.noisy_fit else X
    family = ResponseFamily.bernoulli(fractional=spec.response == "probability")
    return DataSet(fit_X, y, family), B


@dataclass
class MetricsSummary:
    tp_pct: float
    tn_pct: float
    fp_pct: float
    fn_pct: float
    accuracy_mean: float
    accuracy_sd: float
    replications: int
    failures: int = 0
    single_sample: bool = False
    accuracies: list = field(default_factory=list)


def selection_metrics(active_rows, active_cols, spec):
    """Per-replication confusion counts and accuracy over all ``s + t`` groups."""
    rows = set(int(j) for j in active_rows)
    cols = set(int(k) for k in active_cols)
    crucial = [("r", j) for j in spec.crucial_rows] + [("c", k) for k in spec.crucial_cols]
    null = [("r", j) for j in spec.zero_rows] + [("c", k) for k in spec.zero_cols]
    selected = {("r", j) for j in rows} | {("c", k) for k in cols}
    tp = sum(g in selected for g in crucial)
    tn = sum(g not in selected for g in null)
    tp_pct = 100.0 * tp / len(crucial) if crucial else 100.0
    tn_pct = 100.0 * tn / len(null) if null else 100.0
    return {
        "tp": tp,
        "tn": tn,
        "tp_pct": tp_pct,
        "tn_pct": tn_pct,
        "fp_pct": 100.0 - tn_pct,
        "fn_pct": 100.0 - tp_pct,
        "accuracy": 100.0 * (tp + tn) / (spec.s + spec.t),
    }


def summarize(rows, failures=0):
    """Aggregate per-replication metric dicts; the SD of a single replication is reported as 0."""
    if not rows:
        nan = float("nan")
        return MetricsSummary(nan, nan, nan, nan, nan, nan, 0, failures)
    acc = np.array([r["accuracy"] for r in rows])
    tp = float(np.mean([r["tp_pct"] for r in rows]))
    tn = float(np.mean([r["tn_pct"] for r in rows]))
    single = len(rows) == 1
    return MetricsSummary(
        tp_pct=tp,
        tn_pct=tn,
        fp_pct=100.0 - tn,
        fn_pct=100.0 - tp,
        accuracy_mean=float(acc.mean()),
        accuracy_sd=0.0 if single else float(acc.std(ddof=1)),
        replications=len(rows),
        failures=failures,
        single_sample=single,
        accuracies=acc.tolist(),
    )


def run_study(spec, methods=("proposed",), replications=20, config=None, ranks=(1, 2, 3, 4),
              ic_kind="aic", n_lambda=50, on_replication=None):
    """Fit every method on ``replications`` fresh data sets drawn from ``spec``.

    ``methods`` may name any key of :data:`twodsel.benchmarks.METHODS`;
    ``config`` defaults to :data:`twodsel.solver.PIPELINE_CONFIG`. Returns
    ``(summaries, records)``: one :class:`MetricsSummary` per method and one
    record per (replication, method), failures included.
    """
    from .benchmarks import run_method

    if replications < 1:
        raise ValidationError("replications must be at least 1")
    config = PIPELINE_CONFIG if config is None else config
    per_method = {m: [] for m in methods}
    failures = {m: 0 for m in methods}
    records = []
    for rep in range(replications):
        data, _ = simulate(spec, rep)
        for method in methods:
            start = time.perf_counter()
            record = {"scenario": spec.label, "method": method, "replication": rep}
            try:
                report = run_method(method, data, config=config, ranks=ranks, ic_kind=ic_kind,
                                    n_lambda=n_lambda)
            except Exception as exc:  # a failed replication is recorded, not fatal
                log.warning("%s replication %d failed: %s", method, rep, exc)
                failures[method] += 1
                record.update(error=str(exc), seconds=time.perf_counter() - start)
                records.append(record)
                continue
            metrics = selection_metrics(report.active_rows, report.active_cols, spec)
            per_method[method].append(metrics)
            record.update(metrics)
            record.update(
                rank=report.chosen_rank, lam=report.chosen_lambda,
                active_rows=list(report.active_rows), active_cols=list(report.active_cols),
                seconds=time.perf_counter() - start,
            )
            records.append(record)
            if on_replication is not None:
                on_replication(record)
    summaries = {m: summarize(per_method[m], failures[m]) for m in methods}
    return summaries, records
