"""Agglomerative clustering of return series.

Distance metrics: Euclidean, Manhattan and the sqrt(2*(1-corr)) family
for Pearson, Kendall-tau and Spearman-rho. Linkage criteria: Single,
Complete, Average, plus AdaptedSingle — single linkage that refuses to
merge two non-singleton clusters and caps cluster size at ``a``; the
cluster-count cap ``b`` is realised as the stopping rule.

Inter-cluster linkage is recomputed from member-pair distances at every
step (no Lance-Williams shortcuts), matching the generic merge loop the
criteria are defined against.
"""

from dataclasses import dataclass, field

import numpy as np

from .bicop import kendall_tau, spearman_rho
from .errors import InputError

EUCLIDEAN = "Euclidean"
MANHATTAN = "Manhattan"
PEARSON_BASED = "PearsonBased"
KENDALL_TAU_BASED = "KendallTauBased"
SPEARMAN_RHO_BASED = "SpearmanRhoBased"
METRICS = (EUCLIDEAN, MANHATTAN, PEARSON_BASED, KENDALL_TAU_BASED,
           SPEARMAN_RHO_BASED)

SINGLE = "Single"
COMPLETE = "Complete"
AVERAGE = "Average"
ADAPTED_SINGLE = "AdaptedSingle"
CRITERIA = (SINGLE, COMPLETE, AVERAGE, ADAPTED_SINGLE)


def distance(metric, x, y):
    """Pairwise dissimilarity between two equal-length series."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise InputError("series must have equal lengths")
    if metric == EUCLIDEAN:
        return float(np.sqrt(np.sum((x - y) ** 2)))
    if metric == MANHATTAN:
        return float(np.sum(np.abs(x - y)))
    if metric in (PEARSON_BASED, KENDALL_TAU_BASED, SPEARMAN_RHO_BASED):
        if np.unique(x).size < 2 or np.unique(y).size < 2:
            raise InputError(f"{metric} distance undefined for constant series")
        if metric == PEARSON_BASED:
            xc, yc = x - x.mean(), y - y.mean()
            corr = float(np.dot(xc, yc)
                         / np.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))
        elif metric == KENDALL_TAU_BASED:
            corr = kendall_tau(x, y)
        else:
            corr = spearman_rho(x, y)
        return float(np.sqrt(max(2.0 * (1.0 - corr), 0.0)))
    raise InputError(f"unknown distance metric {metric!r}")


def distance_matrix(metric, series_matrix):
    """Symmetric element-distance matrix for the columns of a T x n matrix."""
    m = np.asarray(series_matrix, dtype=np.float64)
    n = m.shape[1]
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = distance(metric, m[:, i], m[:, j])
    return d


@dataclass(frozen=True)
class ClusterPartition:
    """Disjoint clusters of asset indices plus the merge trace.

    The trace holds (x, y, linkage) tuples of cluster ids in the merge-loop
    numbering: initial singletons are 0..n-1 and each merge mints the next
    id. ``reached_stop`` is False when no admissible join remained before
    the stopping rule was satisfied.
    """

    clusters: tuple
    asset_ids: tuple
    trace: tuple = ()
    reached_stop: bool = True
    max_size: int | None = None
    max_clusters: int | None = None

    def __post_init__(self):
        seen = []
        for c in self.clusters:
            if len(c) == 0:
                raise InputError("empty cluster")
            seen.extend(c)
        if sorted(seen) != list(range(len(self.asset_ids))):
            raise InputError("clusters must partition the asset set")

    @property
    def n_clusters(self):
        return len(self.clusters)

    def labels(self):
        lab = np.empty(len(self.asset_ids), dtype=np.int64)
        for k, members in enumerate(self.clusters):
            for i in members:
                lab[i] = k
        return lab

    def to_dict(self):
        return {
            "clusters": [[self.asset_ids[i] for i in c] for c in self.clusters],
            "trace": [[int(x), int(y), float(d)] for x, y, d in self.trace],
            "reached_stop": self.reached_stop,
        }


def _linkage_value(criterion, d, members_x, members_y):
    block = d[np.ix_(members_x, members_y)]
    if criterion in (SINGLE, ADAPTED_SINGLE):
        return float(block.min())
    if criterion == COMPLETE:
        return float(block.max())
    if criterion == AVERAGE:
        return float(block.mean())
    raise InputError(f"unknown linkage criterion {criterion!r}")


def _admissible(criterion, members_x, members_y, a):
    if criterion != ADAPTED_SINGLE:
        return True
    if len(members_x) > 1 and len(members_y) > 1:
        return False
    if a is not None and (len(members_x) >= a or len(members_y) >= a):
        return False
    return True


def agglomerate(series_matrix, asset_ids, metric=KENDALL_TAU_BASED,
                criterion=ADAPTED_SINGLE, a=None, b=None,
                distance_threshold=None):
    """Iteratively merge the minimal-linkage admissible pair of clusters.

    Stops when the cluster count reaches ``b``, when the minimal admissible
    linkage exceeds ``distance_threshold`` (if set), when one cluster
    remains, or — flagged via ``reached_stop=False`` — when no admissible
    join exists. Ties break on the lexicographically smallest (x, y)
    cluster-id pair.
    """
    m = np.asarray(series_matrix, dtype=np.float64)
    n = m.shape[1]
    if len(asset_ids) != n:
        raise InputError("asset_ids length must match column count")
    if n < 2:
        raise InputError("need at least 2 series to cluster")
    if criterion not in CRITERIA:
        raise InputError(f"unknown linkage criterion {criterion!r}")
    if criterion == ADAPTED_SINGLE:
        if a is not None and a < 1:
            raise InputError("max cluster size a must be >= 1")
        if b is not None and b < 1:
            raise InputError("max cluster count b must be >= 1")

    d = distance_matrix(metric, m)
    live = {i: [i] for i in range(n)}
    next_id = n
    trace = []
    reached_stop = True

    while True:
        if b is not None and len(live) <= b:
            break
        if len(live) == 1:
            break
        best = None
        ids = sorted(live)
        # Scanning id pairs in lexicographic order makes a strict "<" keep
        # the smallest (x, y) pair among exact linkage ties.
        for xi in range(len(ids)):
            for yi in range(xi + 1, len(ids)):
                x, y = ids[xi], ids[yi]
                if not _admissible(criterion, live[x], live[y], a):
                    continue
                val = _linkage_value(criterion, d, live[x], live[y])
                if best is None or val < best[0]:
                    best = (val, x, y)
        if best is None:
            reached_stop = False
            break
        val, x, y = best
        if distance_threshold is not None and val > distance_threshold:
            break
        live[next_id] = sorted(live.pop(x) + live.pop(y))
        trace.append((x, y, val))
        next_id += 1

    clusters = tuple(tuple(live[i]) for i in sorted(live))
    return ClusterPartition(clusters=clusters, asset_ids=tuple(asset_ids),
                            trace=tuple(trace), reached_stop=reached_stop,
                            max_size=a, max_clusters=b)


def fixed_partition(asset_ids, labels):
    """Partition given externally (e.g. industry sectors); no merge trace.

    Clusters are ordered by sorted distinct label for determinism.
    """
    if len(labels) != len(asset_ids):
        raise InputError("need one label per asset")
    by_label = {}
    for i, lab in enumerate(labels):
        if lab is None or (isinstance(lab, str) and not lab.strip()):
            raise InputError(f"asset {asset_ids[i]!r} has no label")
        by_label.setdefault(lab, []).append(i)
    clusters = tuple(tuple(by_label[lab]) for lab in sorted(by_label))
    return ClusterPartition(clusters=clusters, asset_ids=tuple(asset_ids))
