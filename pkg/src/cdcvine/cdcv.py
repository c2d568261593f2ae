"""The cluster-derived canonical vine (CDCV) model.

Pipeline: cluster the window's assets; derive noise-adjusted cluster and
market indexes; fit marginals and PIT every series; fit tree 1 on the
market root (cluster-index and asset pairs), h-conditioning as it goes;
fit tree 2 between each asset and its own conditioned cluster index; fit
one multivariate copula over the twice-conditioned assets. Conditional
independence across clusters is imposed by never fitting a cross-cluster
pair.
"""

from dataclasses import dataclass, field

import numpy as np

from . import bicop, clustering, indexing, mvcop
from .errors import InputError
from .marginals import (MarginalFit, fit_marginal, marginal_cdf,
                        marginal_logpdf, marginal_quantile, pit)

SCHEMA_VERSION = 1

UNCONDITIONED = "Unconditioned"
MARKET_CONDITIONED = "MarketConditioned"
FULLY_CONDITIONED = "FullyConditioned"
STAGES = (UNCONDITIONED, MARKET_CONDITIONED, FULLY_CONDITIONED)

ROOT_MARKET = "Market"
ROOT_CLUSTER_INDEXES = "ClusterIndexes"
ROOT_JOINT = "JointSimplified"


@dataclass(frozen=True)
class CDCVModel:
    asset_ids: tuple
    window_start: int
    partition: clustering.ClusterPartition
    market_index: indexing.IndexSeries
    cluster_indexes: tuple
    market_marginal: MarginalFit
    cluster_marginals: tuple
    asset_marginals: tuple           # original asset order
    lambda_fits: tuple               # per cluster
    pi_fits: tuple                   # per asset, original asset order
    omega_fits: tuple                # per asset, original asset order
    joint: mvcop.JointCopulaFit
    u_market: np.ndarray = field(repr=False)
    v_clusters: tuple = field(repr=False)
    config: dict = field(default_factory=dict)

    @property
    def n_assets(self):
        return len(self.asset_ids)

    @property
    def n_clusters(self):
        return self.partition.n_clusters

    @property
    def cluster_of(self):
        return self.partition.labels()

    def cluster_major_order(self):
        """Asset indices flattened cluster-by-cluster (Q_joint column order)."""
        return [z for members in self.partition.clusters for z in members]


def _pit_series(fit, values):
    from .marginals import PIT_EPS
    return np.clip(marginal_cdf(fit, values), PIT_EPS, 1.0 - PIT_EPS)


def fit_cdcv(window_returns, asset_ids, *, metric=clustering.KENDALL_TAU_BASED,
             linkage=clustering.ADAPTED_SINGLE, a=None, b=15,
             index_rule=indexing.VOLATILITY_WEIGHTED, upsilon=11.0,
             market_source=indexing.FROM_ASSETS, seed=0, window_start=0,
             families=bicop.PARAMETRIC_FAMILIES, fixed_labels=None,
             market_caps=None, severity=1.0):
    """Fit one CDCV model on a learning window (T x n returns)."""
    r = np.asarray(window_returns, dtype=np.float64)
    if r.ndim != 2 or r.shape[1] < 2:
        raise InputError("window must be a T x n matrix with n >= 2")
    if r.shape[0] < 30:
        raise InputError("window too short for marginal fitting (< 30 rows)")
    asset_ids = tuple(asset_ids)

    if fixed_labels is not None:
        partition = clustering.fixed_partition(asset_ids, fixed_labels)
    else:
        partition = clustering.agglomerate(r, asset_ids, metric=metric,
                                           criterion=linkage, a=a, b=b)

    market, cluster_idx = indexing.build_hierarchy(
        r, asset_ids, partition, rule=index_rule, upsilon=upsilon,
        market_source=market_source, base_seed=seed, window_start=window_start,
        market_caps=market_caps, severity=severity)

    market_marg = fit_marginal(market.values)
    cluster_margs = tuple(fit_marginal(c.values) for c in cluster_idx)
    asset_margs = tuple(fit_marginal(r[:, z]) for z in range(r.shape[1]))

    u_market = _pit_series(market_marg, market.values)
    u_assets = pit(r, asset_margs)

    lambda_fits = []
    v_clusters = []
    pi_fits = [None] * r.shape[1]
    omega_fits = [None] * r.shape[1]
    cond_cols = []
    for e, members in enumerate(partition.clusters):
        u_se = _pit_series(cluster_margs[e], cluster_idx[e].values)
        lam = bicop.select_bicop(u_se, u_market, families=families)
        lambda_fits.append(lam)
        v_se = lam.h(u_se, u_market)
        v_clusters.append(v_se)
        for z in members:
            uz = u_assets[:, z]
            piz = bicop.select_bicop(uz, u_market, families=families)
            pi_fits[z] = piz
            uz = piz.h(uz, u_market)
            omz = bicop.select_bicop(uz, v_se, families=families)
            omega_fits[z] = omz
            uz = omz.h(uz, v_se)
            cond_cols.append(uz)

    joint = mvcop.fit_joint(np.column_stack(cond_cols))

    config = {
        "metric": metric, "linkage": linkage, "a": a, "b": b,
        "index_rule": index_rule, "upsilon": float(upsilon),
        "market_source": market_source, "seed": int(seed),
        "window_start": int(window_start), "families": list(families),
        "fixed_labels": None if fixed_labels is None else list(fixed_labels),
        "severity": float(severity),
    }
    return CDCVModel(asset_ids=asset_ids, window_start=int(window_start),
                     partition=partition, market_index=market,
                     cluster_indexes=tuple(cluster_idx),
                     market_marginal=market_marg,
                     cluster_marginals=cluster_margs,
                     asset_marginals=asset_margs,
                     lambda_fits=tuple(lambda_fits),
                     pi_fits=tuple(pi_fits), omega_fits=tuple(omega_fits),
                     joint=joint, u_market=u_market,
                     v_clusters=tuple(v_clusters), config=config)


def simulate_cdcv(model, n_samples, seed):
    """Simulate asset returns (columns in original asset order).

    Each row draws one in-window time index and unconditions the joint
    copula draw against that row's realised (market, cluster) factor
    values; indexes themselves are never regenerated.
    """
    if n_samples < 1:
        raise InputError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    t_len = model.u_market.shape[0]
    rows = rng.integers(0, t_len, size=n_samples)
    w_joint = mvcop.simulate_joint(model.joint, n_samples, rng)

    out = np.empty((n_samples, model.n_assets))
    u_m = model.u_market[rows]
    col = 0
    for e, members in enumerate(model.partition.clusters):
        v_se = model.v_clusters[e][rows]
        for z in members:
            w = w_joint[:, col]
            col += 1
            w = model.omega_fits[z].h_inv(w, v_se)
            w = model.pi_fits[z].h_inv(w, u_m)
            out[:, z] = marginal_quantile(model.asset_marginals[z], w)
    return out


def _stage_matrices(model, window_returns):
    r = np.asarray(window_returns, dtype=np.float64)
    u1 = pit(r, model.asset_marginals)
    u2 = np.empty_like(u1)
    u3 = np.empty_like(u1)
    labels = model.cluster_of
    for z in range(model.n_assets):
        u2[:, z] = model.pi_fits[z].h(u1[:, z], model.u_market)
        u3[:, z] = model.omega_fits[z].h(u2[:, z], model.v_clusters[labels[z]])
    return {UNCONDITIONED: u1, MARKET_CONDITIONED: u2, FULLY_CONDITIONED: u3}


def _pairwise_spearman(u):
    """All-pairs Spearman rho via one rank matrix + correlation matrix."""
    from scipy.stats import rankdata
    n = u.shape[1]
    ranks = rankdata(u, axis=0)
    if np.any(ranks.std(axis=0) == 0.0):
        raise InputError("constant column in conditioning-stage data")
    corr = np.corrcoef(ranks, rowvar=False)
    return corr[np.triu_indices(n, 1)]


def summarize_rhos(rhos):
    rhos = np.asarray(rhos, dtype=np.float64)
    out = {}
    for prefix, vals in (("", rhos), ("abs_", np.abs(rhos))):
        q = np.percentile(vals, [1, 25, 50, 75, 99])
        out.update({
            f"{prefix}mean": float(vals.mean()),
            f"{prefix}std": float(vals.std(ddof=1)),
            f"{prefix}q1": float(q[0]),
            f"{prefix}q25": float(q[1]),
            f"{prefix}q50": float(q[2]),
            f"{prefix}q75": float(q[3]),
            f"{prefix}q99": float(q[4]),
        })
    return out


@dataclass(frozen=True)
class ConditioningDiagnostics:
    stage: str
    rhos: np.ndarray = field(repr=False)
    summary: dict = field(default_factory=dict)

    def to_dict(self):
        return {"stage": self.stage,
                "summary": {k: float(v) for k, v in sorted(self.summary.items())},
                "n_pairs": int(self.rhos.shape[0])}


def conditioning_diagnostics(model, window_returns):
    """Pairwise Spearman rho across assets at the three conditioning stages."""
    stages = _stage_matrices(model, window_returns)
    out = []
    for stage in STAGES:
        rhos = _pairwise_spearman(stages[stage])
        out.append(ConditioningDiagnostics(stage=stage, rhos=rhos,
                                           summary=summarize_rhos(rhos)))
    return tuple(out)


def parameter_count(model):
    """Copula parameters over all pair fits plus the joint copula."""
    count = 0
    for f in list(model.lambda_fits) + list(model.pi_fits) + list(model.omega_fits):
        count += bicop.N_PARAMS[f.family]
    return count + model.joint.n_params


def selection_summary(models):
    """Family-selection counts/percentages by root class across models."""
    if not models:
        raise InputError("need at least one model")
    bivariate_fams = list(bicop.PARAMETRIC_FAMILIES) + [bicop.INDEPENDENCE]
    counts = {
        ROOT_MARKET: {f: 0 for f in bivariate_fams},
        ROOT_CLUSTER_INDEXES: {f: 0 for f in bivariate_fams},
        ROOT_JOINT: {mvcop.GAUSSIAN: 0, mvcop.STUDENT_T: 0},
    }
    for model in models:
        for f in list(model.lambda_fits) + list(model.pi_fits):
            counts[ROOT_MARKET][f.family] += 1
        for f in model.omega_fits:
            counts[ROOT_CLUSTER_INDEXES][f.family] += 1
        counts[ROOT_JOINT][model.joint.family] += 1
    out = {}
    for root, row in counts.items():
        total = sum(row.values())
        out[root] = {
            "counts": dict(row),
            "percent": {f: (100.0 * c / total if total else 0.0)
                        for f, c in row.items()},
        }
    return out


def cdcv_logdensity(model, market_return, cluster_returns, asset_returns):
    """Joint log-density of (market, cluster indexes, assets) at one point,
    evaluated through the fitted pipeline decomposition."""
    total = float(marginal_logpdf(model.market_marginal, market_return))
    u_m = float(_pit_series(model.market_marginal, np.asarray([market_return]))[0])
    labels = model.cluster_of
    v_se = {}
    for e in range(model.n_clusters):
        s = cluster_returns[e]
        total += float(marginal_logpdf(model.cluster_marginals[e], s))
        u_s = float(_pit_series(model.cluster_marginals[e], np.asarray([s]))[0])
        lam = model.lambda_fits[e]
        total += float(lam.logpdf(u_s, u_m))
        v_se[e] = float(lam.h(u_s, u_m))
    cond = np.empty(model.n_assets)
    for z in range(model.n_assets):
        x = asset_returns[z]
        total += float(marginal_logpdf(model.asset_marginals[z], x))
        u_z = float(_pit_series(model.asset_marginals[z], np.asarray([x]))[0])
        total += float(model.pi_fits[z].logpdf(u_z, u_m))
        u_z = float(model.pi_fits[z].h(u_z, u_m))
        total += float(model.omega_fits[z].logpdf(u_z, v_se[labels[z]]))
        cond[z] = float(model.omega_fits[z].h(u_z, v_se[labels[z]]))
    order = model.cluster_major_order()
    total += float(mvcop.joint_logpdf(model.joint, cond[order])[0])
    return total


def model_to_dict(model):
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "cdcv_model",
        "asset_ids": list(model.asset_ids),
        "window_start": int(model.window_start),
        "config": dict(model.config),
        "partition": model.partition.to_dict(),
        "market_index": model.market_index.to_dict(),
        "cluster_indexes": [c.to_dict() for c in model.cluster_indexes],
        "marginals": {
            "market": model.market_marginal.to_dict(),
            "clusters": [m.to_dict() for m in model.cluster_marginals],
            "assets": [m.to_dict() for m in model.asset_marginals],
        },
        "copulas": {
            "lambda": [f.to_dict() for f in model.lambda_fits],
            "pi": [f.to_dict() for f in model.pi_fits],
            "omega": [f.to_dict() for f in model.omega_fits],
            "joint": model.joint.to_dict(),
        },
        "u_market": [float(x) for x in model.u_market],
        "v_clusters": [[float(x) for x in v] for v in model.v_clusters],
    }


def model_from_dict(d):
    if d.get("kind") != "cdcv_model":
        raise InputError("document is not a serialized CDCV model")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"unsupported schema version {d.get('schema_version')!r}")
    asset_ids = tuple(d["asset_ids"])
    pos = {a: i for i, a in enumerate(asset_ids)}
    part = d["partition"]
    clusters = tuple(tuple(pos[a] for a in members) for members in part["clusters"])
    partition = clustering.ClusterPartition(
        clusters=clusters, asset_ids=asset_ids,
        trace=tuple((x, y, dist) for x, y, dist in part["trace"]),
        reached_stop=part["reached_stop"])
    n_obs = len(d["u_market"])
    return CDCVModel(
        asset_ids=asset_ids,
        window_start=d["window_start"],
        partition=partition,
        market_index=indexing.IndexSeries.from_dict(d["market_index"]),
        cluster_indexes=tuple(indexing.IndexSeries.from_dict(c)
                              for c in d["cluster_indexes"]),
        market_marginal=MarginalFit.from_dict(d["marginals"]["market"]),
        cluster_marginals=tuple(MarginalFit.from_dict(m)
                                for m in d["marginals"]["clusters"]),
        asset_marginals=tuple(MarginalFit.from_dict(m)
                              for m in d["marginals"]["assets"]),
        lambda_fits=tuple(bicop.BivariateCopulaFit.from_dict(f, n_obs=n_obs)
                          for f in d["copulas"]["lambda"]),
        pi_fits=tuple(bicop.BivariateCopulaFit.from_dict(f, n_obs=n_obs)
                      for f in d["copulas"]["pi"]),
        omega_fits=tuple(bicop.BivariateCopulaFit.from_dict(f, n_obs=n_obs)
                         for f in d["copulas"]["omega"]),
        joint=mvcop.JointCopulaFit.from_dict(d["copulas"]["joint"], n_obs=n_obs),
        u_market=np.asarray(d["u_market"], dtype=np.float64),
        v_clusters=tuple(np.asarray(v, dtype=np.float64)
                         for v in d["v_clusters"]),
        config=dict(d["config"]))
