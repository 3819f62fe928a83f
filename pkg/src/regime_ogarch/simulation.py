"""Synthetic panels for the toy experiments: a bivariate square-wave
volatility cycle and a blockwise regime-switching multivariate dataset,
plus the Frobenius covariance-distance metric.

All generators run off numpy's PCG64 so a seed pins the panel bitwise;
the PRNG name is recorded in the sidecar metadata the CLI writes.
"""

from dataclasses import dataclass, field

import numpy as np

from .data_io import ReturnPanel
from .errors import ContractError

PRNG_NAME = "numpy-PCG64"


@dataclass(frozen=True)
class SquareWaveSpec:
    """Two assets whose true volatility alternates low/high each half cycle.

    Within every cycle of `period` days the first period // 2 days are
    tranquil; both assets switch in phase, at their own levels.
    """

    period: int = 100
    vol_low: tuple = (0.5, 1.0)
    vol_high: tuple = (1.0, 2.0)
    correlation: float = 0.1
    length: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.period < 2:
            raise ContractError("period must be at least 2")
        if self.length < 2:
            raise ContractError("length must be at least 2")
        if len(self.vol_low) != 2 or len(self.vol_high) != 2:
            raise ContractError("vol_low and vol_high must be pairs")
        for lo, hi in zip(self.vol_low, self.vol_high):
            if not 0.0 < lo < hi:
                raise ContractError("need 0 < vol_low < vol_high per asset")
        if not -1.0 < self.correlation < 1.0:
            raise ContractError("correlation must lie in (-1, 1)")

    def is_low(self, t: int) -> bool:
        return (t % self.period) < self.period // 2


@dataclass(frozen=True)
class RegimeBlockSpec:
    """Contiguous blocks of i.i.d. zero-mean Gaussian returns, one
    covariance matrix per block."""

    dims: int
    length: int
    block_bounds: tuple
    covariances: tuple
    seed: int = 0
    labels: tuple = ()

    def __post_init__(self):
        bounds = tuple(int(b) for b in self.block_bounds)
        object.__setattr__(self, "block_bounds", bounds)
        covs = tuple(np.asarray(c, dtype=float) for c in self.covariances)
        object.__setattr__(self, "covariances", covs)
        if self.dims < 1 or self.length < 2:
            raise ContractError("need dims >= 1 and length >= 2")
        prev = 0
        for b in bounds:
            if not prev < b < self.length:
                raise ContractError("block bounds must be interior and increasing")
            prev = b
        if len(covs) != len(bounds) + 1:
            raise ContractError("need one covariance per block")
        for c in covs:
            if c.shape != (self.dims, self.dims):
                raise ContractError("covariance dimension mismatch")
            if np.max(np.abs(c - c.T)) > 1e-10:
                raise ContractError("block covariance must be symmetric")
            if np.min(np.linalg.eigvalsh(c)) < -1e-8:
                raise ContractError("block covariance must be PSD")
        labels = tuple(self.labels) if self.labels else tuple(
            f"block_{i}" for i in range(len(covs)))
        if len(labels) != len(covs):
            raise ContractError("need one label per block")
        object.__setattr__(self, "labels", labels)

    def block_of(self, t: int) -> int:
        idx = 0
        for b in self.block_bounds:
            if t >= b:
                idx += 1
        return idx


def _chol_psd(cov: np.ndarray) -> np.ndarray:
    """Lower-triangular factor; eigenvalue clipping repairs tiny negative
    curvature before factoring."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        lam, vec = np.linalg.eigh(cov)
        lam = np.clip(lam, 0.0, None)
        repaired = (vec * lam) @ vec.T
        return np.linalg.cholesky(repaired + 1e-14 * np.eye(cov.shape[0]))


def gen_square_wave(spec: SquareWaveSpec) -> tuple[ReturnPanel, np.ndarray]:
    """Simulate the square-wave panel; also returns the true T x 2 vol path."""
    rng = np.random.default_rng(spec.seed)
    t_len = spec.length
    vols = np.empty((t_len, 2))
    for t in range(t_len):
        low = spec.is_low(t)
        for j in range(2):
            vols[t, j] = spec.vol_low[j] if low else spec.vol_high[j]
    z = rng.standard_normal((t_len, 2))
    rho = spec.correlation
    returns = np.empty((t_len, 2))
    for t in range(t_len):
        cov = np.array([
            [vols[t, 0] ** 2, rho * vols[t, 0] * vols[t, 1]],
            [rho * vols[t, 0] * vols[t, 1], vols[t, 1] ** 2],
        ])
        returns[t] = _chol_psd(cov) @ z[t]
    dates = tuple(f"t{k:06d}" for k in range(t_len))
    panel = ReturnPanel(dates, returns, ("asset_1", "asset_2"))
    return panel, vols


def gen_regime_blocks(spec: RegimeBlockSpec) -> tuple[ReturnPanel, tuple]:
    """Simulate the blockwise panel; also returns the block covariances."""
    rng = np.random.default_rng(spec.seed)
    bounds = (0,) + spec.block_bounds + (spec.length,)
    rows = []
    for i, cov in enumerate(spec.covariances):
        n = bounds[i + 1] - bounds[i]
        z = rng.standard_normal((n, spec.dims))
        rows.append(z @ _chol_psd(cov).T)
    returns = np.vstack(rows)
    dates = tuple(f"t{k:06d}" for k in range(spec.length))
    names = tuple(f"asset_{k + 1}" for k in range(spec.dims))
    return ReturnPanel(dates, returns, names), spec.covariances


def random_block_covariance(dims: int, scale: float, rng,
                            ridge: float = 1e-6) -> np.ndarray:
    """A' A + ridge * I with A entries uniform on [-scale, scale]."""
    a = rng.uniform(-scale, scale, size=(dims, dims))
    return a.T @ a + ridge * np.eye(dims)


def ten_dim_preset(seed: int = 0, dims: int = 10, length: int = 5000,
                   bounds: tuple = (500, 3000), scale_normal: float = 0.5,
                   scale_volatile: float = 2.0) -> RegimeBlockSpec:
    """The three-stage ten-dimensional dataset: normal, volatile, normal,
    with the volatile block's covariance sampled from a wider range."""
    rng = np.random.default_rng(seed)
    covs = (random_block_covariance(dims, scale_normal, rng),
            random_block_covariance(dims, scale_volatile, rng),
            random_block_covariance(dims, scale_normal, rng))
    return RegimeBlockSpec(dims, length, bounds, covs, seed=seed,
                           labels=("normal", "crisis", "normal"))


def covariance_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of the elementwise difference."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractError("matrices must have equal shape")
    return float(np.sqrt(np.sum((a - b) ** 2)))
