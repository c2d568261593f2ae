"""Return-series panels: loading, validation, windows and sample moments."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

MIN_WINDOW_LENGTH = 30


@dataclass(frozen=True)
class ReturnPanel:
    """A T x n matrix of per-period relative returns.

    Invariants (enforced at construction): strictly increasing dates, no
    missing cells, at least two assets and two rows, no constant column.
    Instances are immutable and safe to share across workers.
    """

    dates: tuple
    assets: tuple
    returns: np.ndarray = field(repr=False)

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=np.float64)
        object.__setattr__(self, "returns", r)
        if r.ndim != 2:
            raise InputError("returns must be a 2-d matrix")
        t, n = r.shape
        if n < 2:
            raise InputError(f"need at least 2 assets, got {n}")
        if t < 2:
            raise InputError(f"need at least 2 rows, got {t}")
        if len(self.dates) != t:
            raise InputError("dates length does not match row count")
        if len(self.assets) != n:
            raise InputError("assets length does not match column count")
        if len(set(self.assets)) != n:
            raise InputError("asset identifiers must be unique")
        for i in range(1, t):
            if not self.dates[i] > self.dates[i - 1]:
                raise InputError(
                    f"dates not strictly increasing at row {i} ({self.dates[i]!r})")
        if not np.all(np.isfinite(r)):
            bad = np.argwhere(~np.isfinite(r))[0]
            raise InputError(
                f"non-finite value at row {bad[0]} column {self.assets[bad[1]]!r}")
        for j in range(n):
            if np.unique(r[:, j]).size < 2:
                raise InputError(f"constant series in column {self.assets[j]!r}")
        r.setflags(write=False)

    @property
    def n_periods(self):
        return self.returns.shape[0]

    @property
    def n_assets(self):
        return self.returns.shape[1]

    def window(self, start, length):
        """View of rows [start, start + length) as a RollingWindow."""
        return RollingWindow(self, start, length)


@dataclass(frozen=True)
class RollingWindow:
    """A contiguous learning period inside a panel (default length 150)."""

    panel: ReturnPanel
    start: int
    length: int = 150

    def __post_init__(self):
        if self.length < MIN_WINDOW_LENGTH:
            raise InputError(
                f"window length {self.length} below minimum {MIN_WINDOW_LENGTH}")
        if self.start < 0 or self.start + self.length > self.panel.n_periods:
            raise InputError(
                f"window [{self.start}, {self.start + self.length}) outside panel "
                f"of {self.panel.n_periods} rows")

    @property
    def returns(self):
        return self.panel.returns[self.start:self.start + self.length]

    @property
    def assets(self):
        return self.panel.assets


def load_panel(path):
    """Load a CSV panel: first column `date` (ISO-8601), one asset per column.

    Rows are sorted ascending by date; duplicate dates, missing or
    non-numeric cells and constant columns are hard errors reported with
    their row/column location.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if len(header) < 3:
            raise InputError(f"{path}: need a date column plus >= 2 asset columns")
        assets = tuple(h.strip() for h in header[1:])
        dates = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            date = row[0].strip()
            if not date:
                raise InputError(f"{path}: row {lineno} has an empty date")
            vals = []
            for j, cell in enumerate(row[1:]):
                cell = cell.strip()
                if not cell:
                    raise InputError(
                        f"{path}: missing value at row {lineno} column {assets[j]!r}")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}: cannot parse {cell!r} at row {lineno} "
                        f"column {assets[j]!r}") from None
            dates.append(date)
            rows.append(vals)
    if len(set(dates)) != len(dates):
        seen = set()
        for d in dates:
            if d in seen:
                raise InputError(f"{path}: duplicate date {d!r}")
            seen.add(d)
    order = sorted(range(len(dates)), key=lambda i: dates[i])
    dates = tuple(dates[i] for i in order)
    returns = np.asarray([rows[i] for i in order], dtype=np.float64)
    return ReturnPanel(dates=dates, assets=assets, returns=returns)


def save_panel(panel, path):
    """Write a panel back to CSV (round-trips with load_panel)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("date",) + tuple(panel.assets))
        for i, date in enumerate(panel.dates):
            writer.writerow([date] + [repr(float(v)) for v in panel.returns[i]])


def panel_stats(panel):
    """Per-asset sample moments.

    Variance uses the n-1 denominator; skew and kurtosis are the standard
    moment ratios on 1/n central moments, kurtosis non-excess (Gaussian -> 3).
    """
    r = panel.returns
    mean = r.mean(axis=0)
    centred = r - mean
    m2 = np.mean(centred ** 2, axis=0)
    m3 = np.mean(centred ** 3, axis=0)
    m4 = np.mean(centred ** 4, axis=0)
    out = {}
    for j, asset in enumerate(panel.assets):
        out[asset] = {
            "mean": float(mean[j]),
            "variance": float(r[:, j].var(ddof=1)),
            "skew": float(m3[j] / m2[j] ** 1.5),
            "kurtosis": float(m4[j] / m2[j] ** 2),
            "min": float(r[:, j].min()),
            "max": float(r[:, j].max()),
        }
    return out
