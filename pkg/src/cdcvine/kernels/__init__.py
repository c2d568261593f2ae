"""Backend dispatch for the numeric hot kernels.

The environment variable ``CDCVINE_KERNELS`` picks the implementation:

* ``auto`` (default) — use numba if it imports, else fall back to numpy;
* ``numba`` — require the jitted backend;
* ``numpy`` — force the pure numpy/scipy path.

Both backends share signatures and clamping semantics.
"""

import os

import numpy as np

_choice = os.environ.get("CDCVINE_KERNELS", "auto").lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"CDCVINE_KERNELS must be auto|numba|numpy, got {_choice!r}")

if _choice in ("auto", "numba"):
    try:
        from . import numba_backend as _impl
    except ImportError:
        if _choice == "numba":
            raise
        from . import numpy_backend as _impl
else:
    from . import numpy_backend as _impl

BACKEND = _impl.BACKEND_NAME


def _arr(x):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)))


def _pair(a, b):
    a, b = np.broadcast_arrays(_arr(a), _arr(b))
    return np.ascontiguousarray(a), np.ascontiguousarray(b)


def norm_cdf(x):
    return _impl.norm_cdf(_arr(x))


def norm_ppf(p):
    return _impl.norm_ppf(_arr(p))


def t_cdf(x, nu):
    return _impl.t_cdf(_arr(x), float(nu))


def t_ppf(p, nu):
    return _impl.t_ppf(_arr(p), float(nu))


def t_ppf_warm(p, nu, x0):
    """t quantile with per-element Newton starts (solutions at a nearby nu)."""
    return _impl.t_ppf_warm(_arr(p), float(nu), _arr(x0))


def t_marginal_nll(x, loc, scale, nu):
    return float(_impl.t_marginal_nll(_arr(x), float(loc), float(scale),
                                      float(nu)))


def skewt_marginal_nll(x, loc, scale, nu, gamma):
    return float(_impl.skewt_marginal_nll(_arr(x), float(loc), float(scale),
                                          float(nu), float(gamma)))


def gauss_logpdf(x, y, rho):
    x, y = _pair(x, y)
    return _impl.gauss_logpdf(x, y, float(rho))


def gauss_h(x, y, rho):
    x, y = _pair(x, y)
    return _impl.gauss_h(x, y, float(rho))


def gauss_hinv(zw, y, rho):
    zw, y = _pair(zw, y)
    return _impl.gauss_hinv(zw, y, float(rho))


def t_logpdf(x, y, rho, nu):
    x, y = _pair(x, y)
    return _impl.t_logpdf(x, y, float(rho), float(nu))


def t_h(x, y, rho, nu):
    x, y = _pair(x, y)
    return _impl.t_h(x, y, float(rho), float(nu))


def t_hinv(q, y, rho, nu):
    q, y = _pair(q, y)
    return _impl.t_hinv(q, y, float(rho), float(nu))


def clayton_logpdf(u, v, theta):
    u, v = _pair(u, v)
    return _impl.clayton_logpdf(u, v, float(theta))


def clayton_h(u, v, theta):
    u, v = _pair(u, v)
    return _impl.clayton_h(u, v, float(theta))


def clayton_hinv(w, v, theta):
    w, v = _pair(w, v)
    return _impl.clayton_hinv(w, v, float(theta))


def frank_logpdf(u, v, theta):
    u, v = _pair(u, v)
    return _impl.frank_logpdf(u, v, float(theta))


def frank_h(u, v, theta):
    u, v = _pair(u, v)
    return _impl.frank_h(u, v, float(theta))


def frank_hinv(w, v, theta):
    w, v = _pair(w, v)
    return _impl.frank_hinv(w, v, float(theta))


def kendall_tau(x, y):
    return float(_impl.kendall_tau(_arr(x), _arr(y)))
