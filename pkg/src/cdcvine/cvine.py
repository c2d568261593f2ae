"""Full canonical-vine copula: fitting, density, log-likelihood, simulation.

Tree j of a C-vine is a star rooted at the j-th variable of the node
ordering; the pair copula at (tree j, offset k) couples variables j and
j+k given 1..j-1. Conditioning is propagated by overwriting each node's
data with h(node | root) after its pair is fitted, so conditional pair
copulas are fitted as unconditional copulas on h-transformed data (the
simplifying assumption).
"""

from dataclasses import dataclass, field

import numpy as np

from . import bicop
from .errors import InputError


@dataclass(frozen=True)
class CVineModel:
    """Node ordering plus the triangular array of pair fits.

    pairs[j][k] is the copula of variables (ordering[j], ordering[j+1+k])
    given ordering[0..j-1], for j = 0..n-2, k = 0..n-j-2.
    """

    ordering: tuple
    pairs: tuple = field(repr=False)

    def __post_init__(self):
        n = len(self.ordering)
        if sorted(self.ordering) != list(range(n)):
            raise InputError("ordering must be a permutation of 0..n-1")
        if len(self.pairs) != n - 1 or any(
                len(self.pairs[j]) != n - 1 - j for j in range(n - 1)):
            raise InputError("pair array must be triangular with n(n-1)/2 fits")

    @property
    def n(self):
        return len(self.ordering)

    @property
    def loglik(self):
        return float(sum(f.loglik for tree in self.pairs for f in tree))

    def to_dict(self):
        return {
            "ordering": [int(i) for i in self.ordering],
            "pairs": [dict(tree=j, offset=k, **self.pairs[j][k].to_dict())
                      for j in range(self.n - 1)
                      for k in range(self.n - 1 - j)],
        }

    @classmethod
    def from_dict(cls, d):
        order = tuple(d["ordering"])
        n = len(order)
        pairs = [[None] * (n - 1 - j) for j in range(n - 1)]
        for rec in d["pairs"]:
            pairs[rec["tree"]][rec["offset"]] = bicop.BivariateCopulaFit.from_dict(rec)
        return cls(ordering=order, pairs=tuple(tuple(t) for t in pairs))


def _check_upanel(u, n=None):
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] < 2:
        raise InputError("need a T x n matrix with n >= 2 on (0,1)")
    if n is not None and u.shape[1] != n:
        raise InputError(f"expected {n} columns, got {u.shape[1]}")
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise InputError("vine data must lie strictly inside (0, 1)")
    return u


def fit_cvine(u, ordering=None, families=bicop.PARAMETRIC_FAMILIES):
    """Fit a full C-vine by per-tree AIC selection and h-conditioning."""
    u = _check_upanel(u)
    n = u.shape[1]
    if ordering is None:
        ordering = tuple(range(n))
    ordering = tuple(int(i) for i in ordering)
    if sorted(ordering) != list(range(n)):
        raise InputError("ordering must be a permutation of 0..n-1")

    cond = u[:, list(ordering)].copy()
    pairs = []
    for j in range(n - 1):
        root = cond[:, j].copy()
        tree = []
        for k in range(j + 1, n):
            fit = bicop.select_bicop(cond[:, k], root, families=families)
            tree.append(fit)
            cond[:, k] = fit.h(cond[:, k], root)
        pairs.append(tuple(tree))
    return CVineModel(ordering=ordering, pairs=tuple(pairs))


def _ladder_logpdf(model, u):
    """Per-row vine log-density via the conditioning ladder."""
    cond = u[:, list(model.ordering)].copy()
    total = np.zeros(u.shape[0])
    n = model.n
    for j in range(n - 1):
        root = cond[:, j].copy()
        for k in range(j + 1, n):
            fit = model.pairs[j][k - j - 1]
            total += np.atleast_1d(fit.logpdf(cond[:, k], root))
            cond[:, k] = fit.h(cond[:, k], root)
    return total


def cvine_density(model, u):
    """Vine copula density; accepts one u-vector or a T x n matrix."""
    u = np.asarray(u, dtype=np.float64)
    single = u.ndim == 1
    u = _check_upanel(np.atleast_2d(u), model.n)
    dens = np.exp(_ladder_logpdf(model, u))
    return float(dens[0]) if single else dens


def cvine_loglik(model, u):
    u = _check_upanel(np.asarray(u, dtype=np.float64), model.n)
    return float(np.sum(_ladder_logpdf(model, u)))


def simulate_cvine(model, n_samples, seed):
    """Sample the vine by inverting the conditioning ladder (seeded)."""
    if n_samples < 1:
        raise InputError("n_samples must be >= 1")
    n = model.n
    rng = np.random.default_rng(seed)
    w = np.clip(rng.random((n_samples, n)), bicop.EPS_U, 1.0 - bicop.EPS_U)

    x = np.empty_like(w)
    vkk = [None] * n
    x[:, 0] = w[:, 0]
    vkk[0] = w[:, 0]
    for i in range(1, n):
        vi = w[:, i]
        for k in range(i - 1, -1, -1):
            vi = model.pairs[k][i - k - 1].h_inv(vi, vkk[k])
        x[:, i] = vi
        if i == n - 1:
            break
        vij = x[:, i]
        for j in range(i):
            vij = model.pairs[j][i - j - 1].h(vij, vkk[j])
        vkk[i] = vij

    out = np.empty_like(x)
    for pos, var in enumerate(model.ordering):
        out[:, var] = x[:, pos]
    return out
