"""Spectral decomposition of correlation matrices, component projection and
covariance reconstruction.

The eigensolver is a cyclic Jacobi sweep: exact enough for the small asset
counts this package targets, dependency-free, and bitwise deterministic,
which the reproducibility guarantees of the backtest rely on.
"""

from dataclasses import dataclass

import numpy as np

from .data_io import NormalizationStats
from .errors import ContractError

_JACOBI_TOL = 1e-12
_MAX_SWEEPS = 100


@dataclass(frozen=True)
class PcaBasis:
    """Orthonormal eigenvector basis of a correlation matrix.

    Columns of `eigenvectors` are sorted by descending eigenvalue; the sign
    convention (largest-magnitude entry positive) makes the decomposition
    unique.  `stats` carries the normalization used to build the underlying
    correlation matrix so covariances can be mapped back to return units.
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    stats: NormalizationStats
    k: int

    def __post_init__(self):
        u = np.asarray(self.eigenvectors, dtype=float)
        lam = np.asarray(self.eigenvalues, dtype=float)
        object.__setattr__(self, "eigenvectors", u)
        object.__setattr__(self, "eigenvalues", lam)
        n = u.shape[0]
        if u.ndim != 2 or u.shape != (n, n):
            raise ContractError("eigenvectors must be square")
        if lam.shape != (n,):
            raise ContractError("eigenvalues must match the dimension")
        if not (1 <= self.k <= n):
            raise ContractError("k must be between 1 and the dimension")
        if np.max(np.abs(u.T @ u - np.eye(n))) > 1e-8:
            raise ContractError("eigenvectors are not orthonormal")
        if np.any(np.diff(lam) > 1e-12):
            raise ContractError("eigenvalues must be nonincreasing")
        if np.min(lam) < -1e-10:
            raise ContractError("eigenvalues of a correlation matrix cannot be negative")
        if abs(lam.sum() - n) > 1e-6:
            raise ContractError("eigenvalues must sum to the dimension")

    @property
    def dim(self) -> int:
        return self.eigenvectors.shape[0]


@dataclass(frozen=True)
class CovarianceForecast:
    """Sequence of forecast covariance matrices, one per day ahead."""

    horizon: int
    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=float)
        object.__setattr__(self, "matrices", m)
        if m.ndim != 3 or m.shape[0] != self.horizon or m.shape[1] != m.shape[2]:
            raise ContractError("matrices must have shape (horizon, I, I)")
        for s in range(self.horizon):
            sym_err = np.max(np.abs(m[s] - m[s].T))
            if sym_err > 1e-10:
                raise ContractError(f"matrix {s} asymmetric by {sym_err:.2e}")
            if np.min(np.linalg.eigvalsh(m[s])) < -1e-8:
                raise ContractError(f"matrix {s} is not positive semidefinite")


def jacobi_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi
    rotations.  Converges when the off-diagonal Frobenius norm drops below
    1e-12; raw (unsorted) output."""
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off < _JACOBI_TOL:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math_sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    return np.diag(a).copy(), v


def math_sign(x: float) -> float:
    return 1.0 if x >= 0.0 else -1.0


def spectral_decompose(corr: np.ndarray, stats: NormalizationStats | None = None,
                       k: int | None = None) -> PcaBasis:
    """Decompose a correlation matrix into a deterministic PcaBasis.

    Eigenvalues are sorted descending (ties keep original column order) and
    every eigenvector is flipped so its largest-magnitude entry is positive.
    """
    c = np.asarray(corr, dtype=float)
    n = c.shape[0]
    if c.ndim != 2 or c.shape != (n, n):
        raise ContractError("correlation matrix must be square")
    if np.max(np.abs(c - c.T)) > 1e-10:
        raise ContractError("correlation matrix must be symmetric")
    if np.max(np.abs(np.diag(c) - 1.0)) > 1e-8:
        raise ContractError("correlation matrix must have unit diagonal")
    lam, u = jacobi_eigh(c)
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    u = u[:, order]
    for j in range(n):
        peak = int(np.argmax(np.abs(u[:, j])))
        if u[peak, j] < 0.0:
            u[:, j] = -u[:, j]
    if stats is None:
        stats = NormalizationStats(np.zeros(n), np.ones(n))
    if stats.means.size != n:
        raise ContractError("stats dimension does not match the matrix")
    if k is None:
        k = n
    return PcaBasis(u, lam, stats, k)


def correlation_from_normalized(x: np.ndarray) -> np.ndarray:
    """Pearson correlation of already-normalized columns (unit sample
    standard deviation, zero mean): X'X / (n - 1) with the diagonal snapped
    to exactly 1."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ContractError("need at least two rows")
    c = (x.T @ x) / (n - 1)
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, 1.0)
    return c


def to_components(x: np.ndarray, basis: PcaBasis) -> np.ndarray:
    """Rotate normalized returns onto the eigenvector basis: Y = X U.
    Retained components occupy the leading columns."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != basis.dim:
        raise ContractError("column count does not match the basis dimension")
    return x @ basis.eigenvectors


def reconstruct(basis: PcaBasis, component_variances: np.ndarray,
                truncate_to_zero: bool = False) -> CovarianceForecast:
    """Map per-component variance forecasts back to an asset-space covariance
    forecast: Sigma = W U D U' W with W = diag(vols).

    `component_variances` has one row per day ahead and `basis.k` columns.
    Components beyond k keep their in-sample eigenvalue (full-rank, the
    default) or are zeroed out when truncate_to_zero is set.
    """
    dvars = np.asarray(component_variances, dtype=float)
    if dvars.ndim == 1:
        dvars = dvars[None, :]
    tau, k = dvars.shape
    if k != basis.k:
        raise ContractError(f"expected {basis.k} variance columns, got {k}")
    if np.any(dvars < 0.0) or not np.all(np.isfinite(dvars)):
        raise ContractError("component variances must be finite and nonnegative")
    n = basis.dim
    full = np.empty((tau, n))
    full[:, :k] = dvars
    if k < n:
        full[:, k:] = 0.0 if truncate_to_zero else basis.eigenvalues[k:]
    u = basis.eigenvectors
    w = basis.stats.vols
    mats = np.empty((tau, n, n))
    for s in range(tau):
        h = (u * full[s]) @ u.T
        sigma = h * np.outer(w, w)
        mats[s] = 0.5 * (sigma + sigma.T)
    return CovarianceForecast(tau, mats)
