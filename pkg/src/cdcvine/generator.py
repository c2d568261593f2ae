"""Seeded two-level factor generator for synthetic return panels.

Assets load on one market factor plus one of ``n_sectors`` sector
factors, with idiosyncratic noise on top:

    r[t, i] = market_beta * M[t] + sector_beta * S[t, sector(i)] + eps[t, i]

Shocks are Gaussian by default; ``shock_df`` switches them to unit-variance
Student-t draws. Sector membership is contiguous blocks, so the generating
partition is known exactly — the generator doubles as the clustering and
conditioning oracle in the tests.
"""

import datetime

import numpy as np

from .errors import InputError
from .panel import ReturnPanel


def factor_labels(n_assets, n_sectors):
    """Contiguous-block sector label per asset, e.g. S0 S0 S1 S1 ..."""
    return tuple(f"S{i * n_sectors // n_assets}" for i in range(n_assets))


def factor_panel(n_assets=12, n_sectors=3, n_periods=1000, seed=0,
                 market_vol=0.010, sector_vol=0.010, idio_vol=0.006,
                 market_beta=1.0, sector_beta=1.0, shock_df=None,
                 start_date="2005-01-03"):
    """Generate a synthetic ReturnPanel from the two-level factor recipe."""
    if n_sectors < 1 or n_assets < 2 or n_assets < n_sectors:
        raise InputError("need n_assets >= n_sectors >= 1")
    if n_periods < 2:
        raise InputError("need at least 2 periods")
    if shock_df is not None and shock_df <= 2:
        raise InputError("shock_df must exceed 2 for finite variance")

    rng = np.random.default_rng(seed)

    def draw(shape):
        if shock_df is None:
            return rng.standard_normal(shape)
        scale = np.sqrt((shock_df - 2.0) / shock_df)
        return rng.standard_t(shock_df, shape) * scale

    market = market_vol * draw(n_periods)
    sectors = sector_vol * draw((n_periods, n_sectors))
    idio = idio_vol * draw((n_periods, n_assets))

    labels = factor_labels(n_assets, n_sectors)
    sector_index = np.asarray([int(lab[1:]) for lab in labels])
    returns = (market_beta * market[:, None]
               + sector_beta * sectors[:, sector_index]
               + idio)

    day0 = datetime.date.fromisoformat(start_date)
    dates = tuple((day0 + datetime.timedelta(days=t)).isoformat()
                  for t in range(n_periods))
    assets = tuple(f"A{i:02d}" for i in range(n_assets))
    return ReturnPanel(dates=dates, assets=assets, returns=returns)
