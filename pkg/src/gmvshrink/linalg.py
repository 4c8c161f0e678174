"""Dense linear-algebra primitives.

Conventions used throughout the package:

* a returns panel is a ``p x n`` array, rows are assets and columns are
  observations;
* the sample covariance is normalised by ``1/n`` (not ``1/(n-1)``), which is
  what every limit formula in :mod:`gmvshrink.asymptotics` assumes. Most
  statistics libraries (``np.cov``, pandas) default to ``1/(n-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DataError, DegenerateError

ORTHONORMAL_TOL = 1e-10
SYMMETRY_TOL = 1e-12


def as_returns(Y) -> np.ndarray:
    """Validate a ``p x n`` returns panel and return it as a float array."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise DataError(f"returns must be a 2-d (assets x observations) array, got ndim={Y.ndim}")
    if not np.all(np.isfinite(Y)):
        bad = np.argwhere(~np.isfinite(Y))[0]
        raise DataError(f"non-finite return at asset {bad[0]}, observation {bad[1]}")
    return Y


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def check_symmetric(M, tol: float = SYMMETRY_TOL) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DataError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DataError("matrix has non-finite entries")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.T), initial=0.0) > tol * max(scale, np.finfo(float).tiny):
        raise DataError("matrix is not symmetric")
    return M


def sample_covariance(Y) -> np.ndarray:
    """Centred sample covariance ``Y (I - 11'/n) Y' / n``.

    The result has rank at most ``min(p, n - 1)``; for ``p >= n`` it is
    singular and callers need :func:`pseudo_inverse`.
    """
    Y = as_returns(Y)
    n = Y.shape[1]
    if n < 2:
        raise DataError(f"need at least 2 observations, got n={n}")
    Z = Y - Y.mean(axis=1, keepdims=True)
    # rows that are constant up to rounding in the mean are centred to exact zero
    flat = np.all(Y == Y[:, :1], axis=1)
    Z[flat] = 0.0
    return symmetrize(Z @ Z.T / n)


def pseudo_inverse(M, rel_tol: float | None = None, return_rank: bool = False):
    """Moore-Penrose inverse of a symmetric matrix via ``eigh``.

    Eigenvalues not exceeding ``rel_tol * max|eigenvalue|`` are treated as
    zero. The default tolerance is ``p * eps``; at ``p == n`` this is what
    discards the single (numerically tiny) eigenvalue left by centring.
    With ``return_rank=True`` the numerical rank is returned as well.
    """
    M = check_symmetric(M)
    p = M.shape[0]
    if rel_tol is None:
        rel_tol = p * np.finfo(float).eps
    if rel_tol < 0:
        raise ValueError("rel_tol must be non-negative")
    lam, U = np.linalg.eigh(symmetrize(M))
    cutoff = rel_tol * np.max(np.abs(lam), initial=0.0)
    keep = np.abs(lam) > cutoff
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    pinv = symmetrize((U * inv) @ U.T)
    if return_rank:
        return pinv, int(keep.sum())
    return pinv


def haar_orthogonal(p: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a ``p x p`` orthogonal matrix from the Haar measure.

    QR of a standard Gaussian matrix, with the columns of ``Q`` multiplied by
    the signs of ``diag(R)`` so the factorisation is unique and the law is
    exactly Haar.
    """
    if int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p!r}")
    Z = rng.standard_normal((int(p), int(p)))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Population covariance ``V diag(eigenvalues) V'``.

    Keeps the spectral factors around so square roots and inverses are exact.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        V = np.asarray(self.eigenvectors, dtype=float)
        if V.ndim != 2 or V.shape != (lam.size, lam.size):
            raise DataError(
                f"eigenvector matrix shape {V.shape} does not match spectrum length {lam.size}"
            )
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise DataError("all eigenvalues must be positive and finite")
        if np.max(np.abs(V.T @ V - np.eye(lam.size))) > ORTHONORMAL_TOL:
            raise DataError("eigenvectors are not orthonormal")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", V)

    @property
    def p(self) -> int:
        return self.eigenvalues.size

    def _compose(self, f: np.ndarray) -> np.ndarray:
        V = self.eigenvectors
        return symmetrize((V * f) @ V.T)

    @cached_property
    def matrix(self) -> np.ndarray:
        return self._compose(self.eigenvalues)

    @cached_property
    def inverse(self) -> np.ndarray:
        return self._compose(1.0 / self.eigenvalues)

    @cached_property
    def sqrt(self) -> np.ndarray:
        return self._compose(np.sqrt(self.eigenvalues))

    @cached_property
    def inv_sqrt(self) -> np.ndarray:
        return self._compose(1.0 / np.sqrt(self.eigenvalues))

    @cached_property
    def gmv_weights(self) -> np.ndarray:
        w = self.inverse.sum(axis=1)
        return w / w.sum()

    @cached_property
    def gmv_variance(self) -> float:
        """``1 / (1' Sigma^{-1} 1)``."""
        return 1.0 / float(self.inverse.sum())

    def variance(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(w @ self.matrix @ w)

    def relative_loss(self, w) -> float:
        """Relative loss of a portfolio ``w`` against the population GMV variance."""
        return (self.variance(w) - self.gmv_variance) / self.gmv_variance


def build_covariance(spectrum, V) -> CovarianceModel:
    return CovarianceModel(np.asarray(spectrum, dtype=float), np.asarray(V, dtype=float))


def oracle_generalized_inverse(Sigma: CovarianceModel, X) -> np.ndarray:
    """Oracle generalized inverse ``Sigma^{-1/2} (X X'/n)^+ Sigma^{-1/2}``.

    ``X`` is the ``p x n`` matrix of standardized innovations such that the
    sample covariance equals ``Sigma^{1/2} X X' Sigma^{1/2} / n``; pass the
    row-centred innovations to match :func:`sample_covariance` exactly.
    The result is a reflexive generalized inverse of that sample covariance,
    equals its ordinary inverse when ``X X'`` is nonsingular, and equals its
    Moore-Penrose inverse when ``Sigma`` is proportional to the identity.
    """
    if not isinstance(Sigma, CovarianceModel):
        raise TypeError("Sigma must be a CovarianceModel")
    X = as_returns(X)
    p, n = X.shape
    if p != Sigma.p:
        raise DataError(f"innovations have {p} rows but Sigma is {Sigma.p}x{Sigma.p}")
    if np.min(Sigma.eigenvalues) <= np.finfo(float).eps * np.max(Sigma.eigenvalues):
        raise DegenerateError("Sigma is numerically singular")
    gram_pinv = pseudo_inverse(symmetrize(X @ X.T / n))
    W = Sigma.inv_sqrt
    return symmetrize(W @ gram_pinv @ W)
