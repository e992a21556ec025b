"""Adaptive group-LASSO penalty on rows of U and columns of V, and its prox."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, ValidationError

WEIGHT_FLOOR = 1e-6


@dataclass
class AdaptiveWeights:
    """Norms of the unpenalized row estimates of U and column estimates of V.

    Norms below ``floor`` are clamped so that ``1/||u_hat_j||`` stays finite
    while still penalizing near-null groups heavily.
    """

    row_norms: np.ndarray
    col_norms: np.ndarray
    floor: float = WEIGHT_FLOOR

    def __post_init__(self):
        if not self.floor > 0:
            raise ValidationError("weight floor must be positive")
        self.row_norms = np.maximum(np.asarray(self.row_norms, dtype=float).reshape(-1), self.floor)
        self.col_norms = np.maximum(np.asarray(self.col_norms, dtype=float).reshape(-1), self.floor)

    @classmethod
    def from_factors(cls, U, V, floor=WEIGHT_FLOOR):
        return cls(np.linalg.norm(U, axis=1), np.linalg.norm(V, axis=0), floor)

    @classmethod
    def uniform(cls, s, t):
        return cls(np.ones(s), np.ones(t))

    @property
    def shape(self):
        return self.row_norms.size, self.col_norms.size


@dataclass(frozen=True)
class PenaltySpec:
    lam: float
    gamma: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValidationError(f"lambda must be nonnegative, got {self.lam}")
        if not self.gamma > 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")

    @classmethod
    def for_rank(cls, lam, rank):
        """Penalty with ``gamma = sqrt(rank)``."""
        return cls(float(lam), float(np.sqrt(rank)))


def _check_weights(U, V, weights):
    if weights.shape != (U.shape[0], V.shape[1]):
        raise DimensionError(
            f"weights cover {weights.shape} groups, factors have {(U.shape[0], V.shape[1])}"
        )


def penalty_value(U, V, weights, penalty):
    """``lam * gamma * (sum_j ||u_j|| / ||u_hat_j|| + sum_k ||v_k|| / ||v_hat_k||)``."""
    U = np.atleast_2d(U)
    V = np.atleast_2d(V)
    _check_weights(U, V, weights)
    rows = np.linalg.norm(U, axis=1) / weights.row_norms
    cols = np.linalg.norm(V, axis=0) / weights.col_norms
    return float(penalty.lam * penalty.gamma * (rows.sum() + cols.sum()))


def row_soft_threshold(M, thresholds, gamma):
    """Group soft-thresholding of each row of ``M`` at level ``thresholds[j] * gamma``.

    Rows whose norm does not exceed the level come back as exact zeros.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    levels = np.broadcast_to(np.asarray(thresholds, dtype=float), (M.shape[0],))
    if np.any(levels < 0) or np.any(np.isnan(levels)):
        raise ValidationError("thresholds must be nonnegative")
    levels = levels * gamma
    norms = np.linalg.norm(M, axis=1)
    keep = norms > levels
    shrink = np.zeros_like(norms)
    shrink[keep] = 1.0 - levels[keep] / norms[keep]
    out = M * shrink[:, None]
    out[~keep] = 0.0
    return out


def col_soft_threshold(M, thresholds, gamma):
    """Column-wise counterpart of :func:`row_soft_threshold`."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return row_soft_threshold(M.T, thresholds, gamma).T
