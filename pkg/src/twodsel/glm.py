"""Exponential-family matrix GLM with a factorized coefficient matrix.

The systematic part is ``g(mu_i) = beta + <U V, X_i>`` where ``<A, B>`` is the
sum of elementwise products and ``g`` is the canonical link of the family
(logit for Bernoulli/binomial, identity for normal).

Negative log-likelihoods drop every additive term that does not depend on
``(U, V, beta)``: the binomial coefficient and ``n/2 log(2 pi sigma^2)``.
Objective values are therefore comparable within a fit, not across families.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import DimensionError, ValidationError

BERNOULLI = "bernoulli"
BINOMIAL = "binomial"
NORMAL = "normal"
FAMILIES = (BERNOULLI, BINOMIAL, NORMAL)


@dataclass(frozen=True)
class ResponseFamily:
    """Response distribution: ``kind`` plus binomial trials or normal sigma.

    ``trials`` is an integer array with one entry per sample (binomial only).
    ``sigma`` is the fixed normal standard deviation; it is never estimated.
    ``fractional`` lets a Bernoulli family take responses anywhere in
    ``[0, 1]`` (proportions such as a defect fraction); the likelihood is then
    the Bernoulli cross-entropy, with unchanged gradients and constants.
    """

    kind: str = BERNOULLI
    trials: np.ndarray | None = None
    sigma: float = 1.0
    fractional: bool = False

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValidationError(f"unknown family {self.kind!r}; expected one of {FAMILIES}")
        if self.kind == BINOMIAL:
            if self.trials is None:
                raise ValidationError("binomial family requires per-sample trials")
            trials = np.asarray(self.trials)
            if trials.ndim != 1 or not np.all(np.isfinite(trials)):
                raise ValidationError("trials must be a 1-d finite array")
            if np.any(trials < 1) or np.any(trials != np.round(trials)):
                raise ValidationError("trials must be positive integers")
            object.__setattr__(self, "trials", trials.astype(float))
        if self.kind == NORMAL and not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError("sigma must be positive for the normal family")

    @classmethod
    def bernoulli(cls, fractional=False):
        return cls(BERNOULLI, fractional=fractional)

    @classmethod
    def binomial(cls, trials, n=None):
        """Binomial family; a scalar ``trials`` is broadcast to ``n`` samples."""
        trials = np.asarray(trials, dtype=float)
        if trials.ndim == 0:
            if n is None:
                raise ValidationError("uniform trials need the sample count n")
            trials = np.full(n, float(trials))
        return cls(BINOMIAL, trials=trials)

    @classmethod
    def normal(cls, sigma=1.0):
        return cls(NORMAL, sigma=float(sigma))

    def subset(self, index):
        if self.kind == BINOMIAL:
            return ResponseFamily(BINOMIAL, trials=self.trials[index])
        return self

    # per-sample pieces shared by the likelihood, gradients and constants

    def mean(self, eta):
        if self.kind == BERNOULLI:
            return expit(eta)
        if self.kind == BINOMIAL:
            return self.trials * expit(eta)
        return eta

    @property
    def scale(self):
        """Multiplier ``w`` applied to residuals (``1/sigma^2`` for normal)."""
        return 1.0 / self.sigma**2 if self.kind == NORMAL else 1.0

    def lipschitz_weights(self, n):
        """Per-sample factor entering the Lipschitz sums."""
        if self.kind == BINOMIAL:
            return self.trials
        return np.full(n, self.scale)

    def link(self, mu):
        if self.kind == NORMAL:
            return float(mu)
        return float(np.log(mu / (1.0 - mu)))

    def validate_responses(self, y):
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise ValidationError("responses must be finite")
        if self.kind == BERNOULLI:
            if self.fractional and not np.all((y >= 0) & (y <= 1)):
                raise ValidationError("fractional Bernoulli responses must lie in [0, 1]")
            if not self.fractional and not np.all((y == 0) | (y == 1)):
                raise ValidationError("Bernoulli responses must be 0 or 1")
        if self.kind == BINOMIAL:
            if self.trials.shape != y.shape:
                raise DimensionError(
                    f"{self.trials.shape[0]} trial counts for {y.shape[0]} responses"
                )
            if np.any(y < 0) or np.any(y > self.trials) or np.any(y != np.round(y)):
                raise ValidationError("binomial responses must be integers in [0, trials]")


@dataclass
class DataSet:
    """``n`` predictor matrices of shape ``(s, t)`` stacked as ``X[n, s, t]`` and responses ``y[n]``."""

    X: np.ndarray
    y: np.ndarray
    family: ResponseFamily = field(default_factory=ResponseFamily)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 3:
            raise DimensionError(f"predictors must be an (n, s, t) stack, got shape {X.shape}")
        if min(X.shape) < 1:
            raise DimensionError(f"empty predictor stack {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DimensionError(f"{X.shape[0]} predictor matrices for {y.shape[0]} responses")
        if not np.all(np.isfinite(X)):
            raise ValidationError("predictor entries must be finite")
        self.family.validate_responses(y)
        self.X = X
        self.y = y

    @property
    def dims(self):
        return self.X.shape

    @property
    def n(self):
        return self.X.shape[0]

    def subset(self, index):
        index = np.asarray(index)
        return DataSet(self.X[index], self.y[index], self.family.subset(index))

    def transposed(self):
        """Same samples with every ``X_i`` replaced by ``X_i^T``."""
        return DataSet(np.ascontiguousarray(self.X.transpose(0, 2, 1)), self.y, self.family)


@dataclass
class FactorModel:
    """Factors ``U (s x r)`` and ``V (r x t)`` plus intercept ``beta``."""

    U: np.ndarray
    V: np.ndarray
    beta: float = 0.0

    def __post_init__(self):
        self.U = np.atleast_2d(np.asarray(self.U, dtype=float))
        self.V = np.atleast_2d(np.asarray(self.V, dtype=float))
        self.beta = float(self.beta)
        if self.U.shape[1] != self.V.shape[0]:
            raise DimensionError(f"U is {self.U.shape} but V is {self.V.shape}")
        if self.U.shape[1] < 1:
            raise DimensionError("rank must be at least 1")

    @property
    def rank(self):
        return self.U.shape[1]

    @property
    def shape(self):
        return self.U.shape[0], self.V.shape[1]

    @property
    def B(self):
        return self.U @ self.V

    def copy(self):
        return FactorModel(self.U.copy(), self.V.copy(), self.beta)

    @classmethod
    def zeros(cls, s, t, r, beta=0.0):
        return cls(np.zeros((s, r)), np.zeros((r, t)), beta)


def _check_shapes(model, shape):
    if model.shape != tuple(shape):
        raise DimensionError(f"model coefficient shape {model.shape} != predictor shape {tuple(shape)}")


def linear_predictor(model, X):
    """``beta + <U V, X>`` for one predictor matrix, or a vector for an ``(n, s, t)`` stack."""
    X = np.asarray(X, dtype=float)
    _check_shapes(model, X.shape[-2:])
    return model.beta + np.tensordot(X, model.B, axes=([-2, -1], [0, 1]))


def bilinear_predictor(a, b, X):
    """``a^T X b``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    if X.shape != (a.size, b.size):
        raise DimensionError(f"X has shape {X.shape}, vectors have lengths {a.size}, {b.size}")
    return float(a @ X @ b)


# Array-level kernels. The solvers call these directly to avoid rebuilding models.

def eta_from_B(X, B, beta):
    return beta + np.tensordot(X, B, axes=([1, 2], [0, 1]))


def nll_from_eta(eta, y, family):
    if family.kind == BERNOULLI:
        return float(np.sum(np.logaddexp(0.0, eta) - y * eta))
    if family.kind == BINOMIAL:
        return float(np.sum(family.trials * np.logaddexp(0.0, eta) - y * eta))
    r = y - eta
    return float(0.5 * family.scale * (r @ r))


def eta_gradient(eta, y, family):
    """Derivative of the negative log-likelihood with respect to each ``eta_i``."""
    return -family.scale * (y - family.mean(eta))


def negative_log_likelihood(model, data):
    _check_shapes(model, data.X.shape[1:])
    return nll_from_eta(eta_from_B(data.X, model.B, model.beta), data.y, data.family)


def gradients(model, data):
    """Block gradients ``(grad_U, grad_V, grad_beta)`` of the negative log-likelihood."""
    _check_shapes(model, data.X.shape[1:])
    eta = eta_from_B(data.X, model.B, model.beta)
    d = eta_gradient(eta, data.y, data.family)
    G = np.tensordot(d, data.X, axes=1)
    return G @ model.V.T, model.U.T @ G, float(d.sum())


def _lipschitz(projected, data):
    # projected[i] is X_i V^T (or U^T X_i); sum of c_i (1 + ||.||_F)^2
    norms = np.sqrt(np.einsum("nij,nij->n", projected, projected))
    c = data.family.lipschitz_weights(data.n)
    return float(np.sqrt(2.0) * np.sum(c * (1.0 + norms) ** 2))


def lipschitz_u(V, data):
    """Gradient Lipschitz constant of the ``(U, beta)`` block for fixed ``V``.

    Uses ``sqrt(2) sum_i c_i (1 + ||X_i V^T||_F)^2``, which dominates every
    reading of the printed constant (the ``1 + X_i V^T`` factor there adds a
    scalar to a matrix; bounding it by ``1 + ||X_i V^T||_F`` keeps descent).
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape[1] != data.X.shape[2]:
        raise DimensionError(f"V has {V.shape[1]} columns, predictors have {data.X.shape[2]}")
    return _lipschitz(data.X @ V.T, data)


def lipschitz_v(U, data):
    """Gradient Lipschitz constant of the ``(V, beta)`` block for fixed ``U``."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[0] != data.X.shape[1]:
        raise DimensionError(f"U has {U.shape[0]} rows, predictors have {data.X.shape[1]}")
    return _lipschitz(np.einsum("sr,nst->nrt", U, data.X), data)
