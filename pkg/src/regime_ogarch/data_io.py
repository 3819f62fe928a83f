"""Return panels, normalization and rolling-window slicing.

Dates are opaque ordered labels; no calendar arithmetic happens anywhere.
Normalization statistics default to the estimation window only so that
out-of-sample forecasts stay causal; full-sample statistics are available
behind a flag for comparison runs.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (ContractError, DataError, DegenerateAssetError,
                     InsufficientDataError, InvalidPriceError)


@dataclass(frozen=True)
class ReturnPanel:
    """Date-indexed matrix of daily log returns."""

    dates: tuple
    returns: np.ndarray
    asset_names: tuple

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=float)
        object.__setattr__(self, "returns", r)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "asset_names", tuple(self.asset_names))
        if r.ndim != 2:
            raise ContractError("returns must be a T x I matrix")
        t, i = r.shape
        if t < 1:
            raise ContractError("panel needs at least 1 row")
        if i < 1:
            raise ContractError("panel needs at least 1 asset")
        if len(self.dates) != t:
            raise ContractError("dates length must match row count")
        if len(self.asset_names) != i:
            raise ContractError("asset_names length must match column count")
        if not np.all(np.isfinite(r)):
            raise ContractError("panel has missing or non-finite cells")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise ContractError(f"dates not strictly increasing at {b!r}")

    @property
    def n_periods(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    def truncate(self, n_rows: int) -> "ReturnPanel":
        """First n_rows rows as a new panel."""
        return ReturnPanel(self.dates[:n_rows], self.returns[:n_rows].copy(),
                           self.asset_names)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-asset mean and standard deviation used to rescale returns."""

    means: np.ndarray
    vols: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.means, dtype=float)
        v = np.asarray(self.vols, dtype=float)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "vols", v)
        if m.shape != v.shape or m.ndim != 1:
            raise ContractError("means and vols must be equal-length vectors")
        if not np.all(v > 0.0):
            raise ContractError("vols must be strictly positive")


@dataclass(frozen=True)
class WindowSpec:
    """Rolling-window layout: R in-sample rows, tau forecast days, step."""

    in_sample_len: int
    horizon: int = 1
    step: int = 1

    def __post_init__(self):
        if self.in_sample_len < 2:
            raise ContractError("in_sample_len must be at least 2")
        if self.horizon < 1:
            raise ContractError("horizon must be at least 1")
        if self.step < 1:
            raise ContractError("step must be at least 1")


def log_returns(prices, dates=None, asset_names=None) -> ReturnPanel:
    """Elementwise log-difference of a positive price matrix.

    Output row t is ln(p[t+1]) - ln(p[t]); the first price row is consumed.
    Generated labels are used when dates or asset names are not supplied.
    """
    p = np.asarray(prices, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.shape[0] < 2:
        raise ContractError("need at least two price rows")
    if not np.all(np.isfinite(p)):
        raise InvalidPriceError("prices contain non-finite values")
    if np.any(p <= 0.0):
        raise InvalidPriceError("prices must be strictly positive")
    r = np.diff(np.log(p), axis=0)
    t, i = p.shape
    if dates is None:
        dates = [f"t{k:06d}" for k in range(t)]
    if asset_names is None:
        asset_names = [f"asset_{k + 1}" for k in range(i)]
    if len(dates) != t:
        raise ContractError("dates must match the price rows")
    return ReturnPanel(tuple(dates)[1:], r, asset_names)


def normalize(panel: ReturnPanel, window) -> tuple[np.ndarray, NormalizationStats]:
    """Center and rescale every asset by its window mean and unbiased
    standard deviation.  Returns the full-length normalized matrix together
    with the statistics, so out-of-window rows can be projected with the
    same scaling."""
    start, stop = window
    if not (0 <= start < stop <= panel.n_periods):
        raise ContractError(f"window ({start}, {stop}) out of bounds")
    if stop - start < 2:
        raise ContractError("window must contain at least 2 rows")
    sub = panel.returns[start:stop]
    means = sub.mean(axis=0)
    vols = sub.std(axis=0, ddof=1)
    for j, v in enumerate(vols):
        if not v > 0.0:
            raise DegenerateAssetError(panel.asset_names[j])
    x = (panel.returns - means) / vols
    return x, NormalizationStats(means, vols)


def rolling_windows(panel: ReturnPanel, spec: WindowSpec) -> list[tuple[int, int]]:
    """(start, origin) pairs: in-sample rows [start, origin), forecast rows
    [origin, origin + horizon).  Origins advance by `step` and never exceed
    T - horizon."""
    t = panel.n_periods
    r = spec.in_sample_len
    if r + spec.horizon > t:
        raise InsufficientDataError(
            f"need at least {r + spec.horizon} rows, panel has {t}")
    out = []
    origin = r
    while origin + spec.horizon <= t:
        out.append((origin - r, origin))
        origin += spec.step
    return out


def read_panel_csv(path, kind: str = "returns") -> ReturnPanel:
    """Load a `date,<asset...>` CSV of decimal returns or prices.

    Rows must already be sorted by date.  kind="prices" converts to log
    returns; kind="returns" uses the values as-is.
    """
    if kind not in ("returns", "prices"):
        raise ContractError(f"unknown csv kind {kind!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if len(header) < 2 or header[0].strip().lower() != "date":
            raise DataError(f"{path}: header must be 'date,<asset1>,...'")
        names = [h.strip() for h in header[1:]]
        dates = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names) + 1:
                raise DataError(f"{path}:{lineno}: expected {len(names) + 1} fields")
            dates.append(row[0].strip())
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 2:
        raise DataError(f"{path}: need at least two data rows")
    values = np.asarray(rows, dtype=float)
    try:
        if kind == "prices":
            return log_returns(values, dates=dates, asset_names=names)
        return ReturnPanel(dates, values, names)
    except ContractError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_panel_csv(panel: ReturnPanel, path) -> None:
    """Write a panel in the `date,<asset...>` CSV format (returns)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", *panel.asset_names])
        for date, row in zip(panel.dates, panel.returns):
            writer.writerow([date, *(repr(float(v)) for v in row)])
