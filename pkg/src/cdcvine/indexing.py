"""Cluster/market index derivation and the Gaussian noise perturbation.

Construction rules: simple mean, market-cap weighted mean, summed
Kendall-tau weighted mean (severity d), volatility weighted mean (larger
sigma -> larger weight, taken literally from the weighting formula), and
the first principal component of the member matrix.

The noise term I+ = I + eps, eps ~ N(0, (max_t|I_t| / upsilon)^2) i.i.d.,
damps the artificial negative rank correlation that appears when a small
cluster's index tracks a median path between its members; upsilon = 0
disables it.
"""

from dataclasses import dataclass, field

import numpy as np

from .bicop import kendall_tau
from .errors import InputError

SIMPLE_MEAN = "SimpleMean"
MARKET_CAP_WEIGHTED = "MarketCapWeighted"
KENDALL_TAU_WEIGHTED = "KendallTauWeighted"
VOLATILITY_WEIGHTED = "VolatilityWeighted"
FIRST_PRINCIPAL_COMPONENT = "FirstPrincipalComponent"
RULES = (SIMPLE_MEAN, MARKET_CAP_WEIGHTED, KENDALL_TAU_WEIGHTED,
         VOLATILITY_WEIGHTED, FIRST_PRINCIPAL_COMPONENT)

FROM_ASSETS = "FromAssets"
FROM_CLUSTER_INDEXES = "FromClusterIndexes"
MARKET_SOURCES = (FROM_ASSETS, FROM_CLUSTER_INDEXES)


@dataclass(frozen=True)
class IndexSeries:
    """A derived index return series, noise included."""

    values: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)
    rule: str
    upsilon: float
    seed: int
    members: tuple

    def to_dict(self):
        return {
            "rule": self.rule,
            "upsilon": float(self.upsilon),
            "seed": int(self.seed),
            "members": list(self.members),
            "values": [float(x) for x in self.values],
            "raw": [float(x) for x in self.raw],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(values=np.asarray(d["values"], dtype=np.float64),
                   raw=np.asarray(d["raw"], dtype=np.float64),
                   rule=d["rule"], upsilon=d["upsilon"], seed=d["seed"],
                   members=tuple(d["members"]))


def _weighted_mean(members, weights):
    total = float(np.sum(weights))
    if total == 0.0:
        raise InputError("zero total index weight")
    return members @ (np.asarray(weights, dtype=np.float64) / total)


def build_index(rule, members, market_caps=None, severity=1.0):
    """Raw (pre-noise) index values for a T x m member matrix."""
    m = np.asarray(members, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] < 1:
        raise InputError("members must be a T x m matrix with m >= 1")
    if m.shape[1] == 1:
        # Every weighting collapses on a single member; PC1 is the member
        # itself after sign normalisation against the mean.
        return m[:, 0].copy()
    if rule == SIMPLE_MEAN:
        return m.mean(axis=1)
    if rule == MARKET_CAP_WEIGHTED:
        if market_caps is None:
            raise InputError("market caps required for MarketCapWeighted")
        caps = np.asarray(market_caps, dtype=np.float64)
        if caps.shape[0] != m.shape[1]:
            raise InputError("need one market cap per member")
        return _weighted_mean(m, caps)
    if rule == KENDALL_TAU_WEIGHTED:
        n = m.shape[1]
        tau_sum = np.zeros(n)
        for i in range(n):
            for j in range(i + 1, n):
                t = kendall_tau(m[:, i], m[:, j])
                tau_sum[i] += t
                tau_sum[j] += t
        w = tau_sum + severity * (tau_sum - tau_sum.min())
        return _weighted_mean(m, w)
    if rule == VOLATILITY_WEIGHTED:
        sigma = m.std(axis=0, ddof=1)
        if np.any(sigma == 0.0):
            raise InputError("constant member series under VolatilityWeighted")
        return _weighted_mean(m, sigma)
    if rule == FIRST_PRINCIPAL_COMPONENT:
        _, _, vt = np.linalg.svd(m, full_matrices=False)
        idx = m @ vt[0]
        simple = m.mean(axis=1)
        if float(np.dot(idx - idx.mean(), simple - simple.mean())) < 0.0:
            idx = -idx
        return idx
    raise InputError(f"unknown index rule {rule!r}")


def add_noise(raw, upsilon, seed, rule=SIMPLE_MEAN, members=()):
    """Perturb a raw index with seeded Gaussian noise of scale max|I|/upsilon."""
    raw = np.asarray(raw, dtype=np.float64)
    if upsilon < 0.0:
        raise InputError("noise parameter upsilon must be >= 0")
    if upsilon == 0.0:
        values = raw.copy()
    else:
        sigma = float(np.max(np.abs(raw))) / upsilon
        rng = np.random.default_rng(seed)
        values = raw + rng.normal(0.0, sigma, raw.shape[0])
    return IndexSeries(values=values, raw=raw.copy(), rule=rule,
                       upsilon=float(upsilon), seed=int(seed),
                       members=tuple(members))


def derive_seed(base_seed, window_start, ordinal):
    """Deterministic per-index noise seed; ordinal 0 is the market index."""
    ss = np.random.SeedSequence((int(base_seed), int(window_start), int(ordinal)))
    return int(ss.generate_state(1)[0])


def build_hierarchy(window_returns, asset_ids, partition, rule=VOLATILITY_WEIGHTED,
                    upsilon=11.0, market_source=FROM_ASSETS, base_seed=0,
                    window_start=0, market_caps=None, severity=1.0):
    """One noise-adjusted index per cluster plus the market index.

    Noise seeds derive from (base_seed, window_start, ordinal) with the
    market at ordinal 0 and clusters at 1..E, so every rolling window
    redraws its own noise.
    """
    r = np.asarray(window_returns, dtype=np.float64)
    if list(partition.asset_ids) != list(asset_ids):
        raise InputError("partition does not cover the window's assets")
    caps = None
    if market_caps is not None:
        caps = np.asarray([market_caps[a] for a in asset_ids], dtype=np.float64)

    cluster_indexes = []
    for e, members in enumerate(partition.clusters):
        cols = list(members)
        sub_caps = caps[cols] if caps is not None else None
        raw = build_index(rule, r[:, cols], market_caps=sub_caps,
                          severity=severity)
        if np.unique(raw).size < 2:
            raise InputError(f"cluster {e} produced a constant index")
        seed = derive_seed(base_seed, window_start, e + 1)
        cluster_indexes.append(add_noise(
            raw, upsilon, seed, rule=rule,
            members=tuple(asset_ids[i] for i in cols)))

    if market_source == FROM_ASSETS:
        market_raw = build_index(rule, r, market_caps=caps, severity=severity)
        market_members = tuple(asset_ids)
    elif market_source == FROM_CLUSTER_INDEXES:
        idx_matrix = np.column_stack([c.values for c in cluster_indexes])
        cluster_caps = None
        if caps is not None:
            cluster_caps = np.asarray(
                [caps[list(members)].sum() for members in partition.clusters])
        market_raw = build_index(rule, idx_matrix, market_caps=cluster_caps,
                                 severity=severity)
        market_members = tuple(f"cluster:{e}" for e in range(len(cluster_indexes)))
    else:
        raise InputError(f"unknown market source {market_source!r}")
    if np.unique(market_raw).size < 2:
        raise InputError("market index is constant")
    market = add_noise(market_raw, upsilon, derive_seed(base_seed, window_start, 0),
                       rule=rule, members=market_members)
    return market, cluster_indexes
