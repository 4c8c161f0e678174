"""Estimators of the global minimum variance (GMV) portfolio.

All estimators return cost-1 portfolios (weights summing to one). The
shrinkage family is

    w(alpha) = alpha * w_sample + (1 - alpha) * b

where ``w_sample`` is the GMV portfolio built from a (generalized) inverse of
the sample covariance and ``b`` is a fixed target portfolio.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError, DegenerateError
from .linalg import CovarianceModel, as_returns, pseudo_inverse, sample_covariance

BUDGET_TOL = 1e-10
DENOMINATOR_TOL = 1e-12


class Regime(str, enum.Enum):
    SUB_CRITICAL = "sub-critical"
    SUPER_CRITICAL = "super-critical"

    @classmethod
    def of(cls, c: float) -> "Regime":
        # c == 1 goes to the pseudo-inverse branch
        return cls.SUB_CRITICAL if c < 1 else cls.SUPER_CRITICAL


@dataclass(frozen=True, eq=False)
class TargetPortfolio:
    weights: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size < 1 or not np.all(np.isfinite(w)):
            raise ConfigurationError("target weights must be a non-empty finite vector")
        if abs(w.sum() - 1.0) > BUDGET_TOL:
            raise ConfigurationError(f"target weights must sum to 1, got {w.sum():.12g}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def naive(cls, p: int) -> "TargetPortfolio":
        return cls(np.full(p, 1.0 / p), "naive")

    @property
    def p(self) -> int:
        return self.weights.size


def as_target(b, p: int) -> TargetPortfolio:
    """Coerce ``None`` (naive), an array, or a TargetPortfolio to a validated target."""
    if b is None:
        return TargetPortfolio.naive(p)
    if not isinstance(b, TargetPortfolio):
        b = TargetPortfolio(b)
    if b.p != p:
        raise DataError(f"target has {b.p} weights but there are {p} assets")
    return b


@dataclass(frozen=True, eq=False)
class ShrinkageEstimate:
    """Output of :func:`bona_fide_shrinkage`.

    ``alpha_raw`` is the unclamped intensity (may fall outside [0, 1] or be
    undefined when the estimated target loss is negative); ``alpha_hat`` is the
    value actually used in ``weights``.
    """

    weights: np.ndarray
    alpha_hat: float
    alpha_raw: float
    r_hat_b: float
    c_ratio: float
    regime: Regime
    traditional: np.ndarray
    target: TargetPortfolio

    def as_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "alpha_hat": self.alpha_hat,
            "alpha_raw": self.alpha_raw if np.isfinite(self.alpha_raw) else None,
            "r_hat_b": self.r_hat_b,
            "c_ratio": self.c_ratio,
            "regime": self.regime.value,
            "traditional": self.traditional.tolist(),
            "target": self.target.weights.tolist(),
            "target_label": self.target.label,
        }


def traditional_gmv(S_inv) -> np.ndarray:
    """GMV weights ``S_inv 1 / (1' S_inv 1)`` for any (generalized) inverse."""
    S_inv = np.asarray(S_inv, dtype=float)
    row_sums = S_inv.sum(axis=1)
    denom = row_sums.sum()
    if not np.isfinite(denom) or abs(denom) <= DENOMINATOR_TOL * np.linalg.norm(S_inv):
        raise DegenerateError("1' S^-1 1 vanishes; the sample GMV portfolio is undefined")
    return row_sums / denom


def out_of_sample_loss(w, Sigma: CovarianceModel) -> float:
    """Relative loss ``(w' Sigma w - sigma2_gmv) / sigma2_gmv``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (Sigma.p,):
        raise DataError(f"weights have shape {w.shape}, expected ({Sigma.p},)")
    return Sigma.relative_loss(w)


def gse_loss(alpha: float, w_sample, b, Sigma: CovarianceModel) -> float:
    """Out-of-sample loss ``w(alpha)' Sigma w(alpha) - sigma2_gmv`` of the shrinkage family."""
    w = alpha * np.asarray(w_sample, dtype=float) + (1.0 - alpha) * np.asarray(b, dtype=float)
    return Sigma.variance(w) - Sigma.gmv_variance


def oracle_alpha(S_generalized_inv, Sigma: CovarianceModel, b=None) -> float:
    """Loss-minimizing intensity given the true covariance.

    ``(b - w)' Sigma b / ((b - w)' Sigma (b - w))`` with ``w`` the sample GMV
    portfolio of ``S_generalized_inv``. Not clamped: it is the exact minimizer
    over the whole real line.
    """
    b = as_target(b, Sigma.p).weights
    w = traditional_gmv(S_generalized_inv)
    d = b - w
    Sd = Sigma.matrix @ d
    denom = float(d @ Sd)
    if denom <= DENOMINATOR_TOL * Sigma.variance(b):
        raise DegenerateError("target coincides with the sample GMV portfolio")
    return float(Sd @ b) / denom


def oracle_shrinkage(S_generalized_inv, Sigma: CovarianceModel, b=None) -> np.ndarray:
    b = as_target(b, Sigma.p).weights
    alpha = oracle_alpha(S_generalized_inv, Sigma, b)
    return alpha * traditional_gmv(S_generalized_inv) + (1.0 - alpha) * b


def estimate_relative_loss(S, S_pinv, b, p: int, n: int) -> float:
    """Consistent estimate of the target's relative loss.

    ``(1 - c) b'Sb 1'S^{-1}1 - 1`` for ``c = p/n < 1`` and
    ``c (c - 1) b'Sb 1'S^+1 - 1`` otherwise. Negative values are possible in
    finite samples.
    """
    if p < 2 or n < 2:
        raise DataError(f"need p >= 2 and n >= 2, got p={p}, n={n}")
    S = np.asarray(S, dtype=float)
    S_pinv = np.asarray(S_pinv, dtype=float)
    b = as_target(b, p).weights
    if S.shape != (p, p) or S_pinv.shape != (p, p):
        raise DataError("covariance and inverse must both be p x p")
    c = p / n
    quad = float(b @ S @ b) * float(S_pinv.sum())
    if c < 1:
        return (1.0 - c) * quad - 1.0
    return c * (c - 1.0) * quad - 1.0


def bona_fide_alpha(r_hat: float, c: float) -> tuple[float, float]:
    """Return ``(clamped, raw)`` estimated intensity for relative-loss estimate ``r_hat``.

    A non-positive ``r_hat`` means the target looks lossless, so the clamped
    value is 0 (the raw formula changes sign there and is not meaningful).
    """
    if c < 1:
        num, den = (1.0 - c) * r_hat, c + (1.0 - c) * r_hat
    else:
        num, den = (c - 1.0) * r_hat, (c - 1.0) ** 2 + c + (c - 1.0) * r_hat
    raw = num / den if den != 0 else float("nan")
    if r_hat <= 0 or not np.isfinite(raw):
        return 0.0, raw
    return float(min(max(raw, 0.0), 1.0)), raw


def bona_fide_shrinkage(Y, b=None, rel_tol: float | None = None) -> ShrinkageEstimate:
    """Data-driven optimal shrinkage estimator of the GMV portfolio, valid for any ``p/n``."""
    Y = as_returns(Y)
    p, n = Y.shape
    if p < 2 or n < 2:
        raise DataError(f"need p >= 2 and n >= 2, got p={p}, n={n}")
    S = sample_covariance(Y)
    return bona_fide_from_covariance(S, pseudo_inverse(S, rel_tol), n, b)


def bona_fide_from_covariance(S, S_pinv, n: int, b=None) -> ShrinkageEstimate:
    """:func:`bona_fide_shrinkage` for a precomputed sample covariance and its pseudo-inverse."""
    p = S.shape[0]
    target = as_target(b, p)
    w_sample = traditional_gmv(S_pinv)
    c = p / n
    r_hat = estimate_relative_loss(S, S_pinv, target, p, n)
    alpha, alpha_raw = bona_fide_alpha(r_hat, c)
    return ShrinkageEstimate(
        weights=alpha * w_sample + (1.0 - alpha) * target.weights,
        alpha_hat=alpha,
        alpha_raw=alpha_raw,
        r_hat_b=r_hat,
        c_ratio=c,
        regime=Regime.of(c),
        traditional=w_sample,
        target=target,
    )


def traditional_estimator(Y, rel_tol: float | None = None) -> np.ndarray:
    """Sample GMV portfolio; uses the Moore-Penrose inverse when ``S`` is singular."""
    return traditional_gmv(pseudo_inverse(sample_covariance(Y), rel_tol))


def frahm_memmel(Y) -> np.ndarray:
    """Frahm-Memmel dominating estimator, a shrinkage towards the naive portfolio.

    Only defined for ``p/n < 1``; the estimated naive-portfolio loss uses the
    sample GMV variance ``1/(1'S^{-1}1)``.
    """
    Y = as_returns(Y)
    p, n = Y.shape
    check_frahm_memmel(p, n)
    S = sample_covariance(Y)
    S_inv, rank = pseudo_inverse(S, return_rank=True)
    return frahm_memmel_from_covariance(S, S_inv, n, rank)


def check_frahm_memmel(p: int, n: int) -> None:
    if p < 2:
        raise DataError(f"need p >= 2, got p={p}")
    if p / n >= 1 or n <= p + 1:
        raise ConfigurationError(
            f"Frahm-Memmel estimator requires n > p + 1 (c < 1), got p={p}, n={n}"
        )


def frahm_memmel_from_covariance(S, S_inv, n: int, rank: int | None = None) -> np.ndarray:
    p = S.shape[0]
    check_frahm_memmel(p, n)
    if rank is not None and rank < p:
        raise DegenerateError("sample covariance is singular; Frahm-Memmel needs S^-1")
    w_sample = traditional_gmv(S_inv)
    sigma2 = 1.0 / float(S_inv.sum())
    r_naive = (float(S.sum()) / p**2 - sigma2) / sigma2
    if r_naive <= DENOMINATOR_TOL:
        raise DegenerateError("estimated relative loss of the naive portfolio vanishes")
    k = (p - 3) / (n - p + 2) / r_naive
    k = min(max(k, 0.0), 1.0)
    return (1.0 - k) * w_sample + k * np.full(p, 1.0 / p)
