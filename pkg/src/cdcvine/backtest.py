"""Rolling-window VaR backtesting with the Kupiec proportion-of-failures test.

A "hit" is a realised portfolio loss strictly exceeding the predicted
VaR threshold. The within-sample mode evaluates the last day of each
fitting window; the out-of-sample mode evaluates the next day after it.
Steps whose fit fails are skipped (recorded, excluded from the trial
count) rather than aborting an 850-step run.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cdcv import fit_cdcv, simulate_cdcv
from .errors import InputError, NumericalError

WITHIN_SAMPLE = "WithinSample"
OUT_OF_SAMPLE = "OutOfSample"
MODES = (WITHIN_SAMPLE, OUT_OF_SAMPLE)

_STEP_SEED_TAG = 7919


def kupiec_pof(x, trials, q):
    """Kupiec LR_PoF and its chi-square(1 dof) upper-tail p-value.

    LR = -2 ln[ (1-q)^(T-x) q^x / ((1-x/T)^(T-x) (x/T)^x) ], with the
    x = 0 and x = T limits taken by continuity (0 log 0 := 0).
    """
    if not 0 <= x <= trials or trials < 1:
        raise InputError(f"need 0 <= hits <= trials, got {x}/{trials}")
    if not 0.0 < q < 1.0:
        raise InputError(f"exception rate must lie in (0, 1), got {q}")
    x = int(x)
    trials = int(trials)
    rate = x / trials
    ll_null = (trials - x) * math.log(1.0 - q) + x * math.log(q)
    ll_alt = 0.0
    if x < trials:
        ll_alt += (trials - x) * math.log(1.0 - rate)
    if x > 0:
        ll_alt += x * math.log(rate)
    lr = max(-2.0 * (ll_null - ll_alt), 0.0)
    p_value = math.erfc(math.sqrt(lr / 2.0))
    return {"lr_pof": lr, "p_value": p_value}


@dataclass(frozen=True)
class VaRBacktestReport:
    alpha: float
    mode: str
    var_series: tuple = field(repr=False)
    step_indices: tuple = field(repr=False)
    hits: int = 0
    trials: int = 0
    lr_pof: float = 0.0
    p_value: float = 1.0
    skipped: tuple = ()

    @property
    def hit_rate(self):
        return self.hits / self.trials if self.trials else float("nan")

    @property
    def reject_95(self):
        return self.p_value < 0.05

    @property
    def reject_99(self):
        return self.p_value < 0.01

    def to_dict(self):
        return {
            "alpha": float(self.alpha),
            "mode": self.mode,
            "hits": int(self.hits),
            "trials": int(self.trials),
            "hit_rate": float(self.hit_rate),
            "lr_pof": float(self.lr_pof),
            "p_value": float(self.p_value),
            "reject_95": self.reject_95,
            "reject_99": self.reject_99,
            "mean_var": float(np.mean(self.var_series)) if self.var_series else None,
            "var_series": [float(v) for v in self.var_series],
            "step_indices": [int(t) for t in self.step_indices],
            "skipped": [[int(t), msg] for t, msg in self.skipped],
        }


def format_report_table(reports):
    """Aligned text table, one row per alpha level."""
    header = ("alpha", "VaR_a", "Hits", "Hit %", "LR_POF", "p-Value",
              "95% Conf", "99% Conf")
    rows = [header]
    for rep in reports:
        mean_var = float(np.mean(rep.var_series)) if rep.var_series else float("nan")
        rows.append((
            f"{rep.alpha:g}", f"{mean_var:.6f}", str(rep.hits),
            f"{100.0 * rep.hit_rate:.2f}", f"{rep.lr_pof:.3f}",
            f"{rep.p_value:.3f}",
            "Reject H0" if rep.reject_95 else "Accept H0",
            "Reject H0" if rep.reject_99 else "Accept H0",
        ))
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    return "\n".join(lines)


def portfolio_var(model, weights, alpha, n_sims, seed):
    """Empirical alpha-percentile loss of the simulated portfolio return."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[0] != model.n_assets:
        raise InputError("need one weight per asset")
    if abs(float(weights.sum()) - 1.0) > 1e-8:
        raise InputError("weights must sum to 1")
    if n_sims < 1000:
        raise InputError("n_sims must be >= 1000")
    sims = simulate_cdcv(model, n_sims, seed)
    port = sims @ weights
    return float(-np.quantile(port, 1.0 - alpha / 100.0))


def _step_seed(base_seed, t):
    ss = np.random.SeedSequence((int(base_seed), _STEP_SEED_TAG, int(t)))
    return int(ss.generate_state(1)[0])


_WORKER = {}


def _init_worker(returns, asset_ids, window, alphas, n_sims, seed, fit_kwargs,
                 weights):
    _WORKER.update(returns=returns, asset_ids=asset_ids, window=window,
                   alphas=alphas, n_sims=n_sims, seed=seed,
                   fit_kwargs=fit_kwargs, weights=weights)


def _run_step(t):
    w = _WORKER
    start = t - w["window"]
    window_returns = w["returns"][start:t]
    try:
        model = fit_cdcv(window_returns, w["asset_ids"], seed=w["seed"],
                         window_start=start, **w["fit_kwargs"])
        sims = simulate_cdcv(model, w["n_sims"], _step_seed(w["seed"], t))
        port = sims @ w["weights"]
        var_by_alpha = {a: float(-np.quantile(port, 1.0 - a / 100.0))
                        for a in w["alphas"]}
    except (InputError, NumericalError, np.linalg.LinAlgError) as exc:
        return t, None, f"{type(exc).__name__}: {exc}"
    return t, var_by_alpha, None


def rolling_backtest(panel, window_length=150, alphas=(95.0, 99.0),
                     mode=OUT_OF_SAMPLE, n_sims=10_000, seed=0, weights=None,
                     n_jobs=None, fit_kwargs=None):
    """Rolling fit/predict/compare over every step t >= window_length.

    Step t fits rows [t - window_length, t); within-sample compares the
    prediction against row t-1 (the last in-window day), out-of-sample
    against row t. Returns one VaRBacktestReport per alpha.
    """
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}")
    returns = panel.returns
    t_total = returns.shape[0]
    if t_total <= window_length:
        raise InputError(
            f"panel has {t_total} rows; need more than window_length={window_length}")
    if weights is None:
        weights = np.full(panel.n_assets, 1.0 / panel.n_assets)
    weights = np.asarray(weights, dtype=np.float64)
    fit_kwargs = dict(fit_kwargs or {})
    alphas = tuple(float(a) for a in alphas)

    steps = list(range(window_length, t_total))
    init_args = (returns, tuple(panel.assets), window_length, alphas,
                 int(n_sims), int(seed), fit_kwargs, weights)
    if n_jobs is None:
        n_jobs = min(os.cpu_count() or 1, len(steps))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs, initializer=_init_worker,
                                 initargs=init_args) as pool:
            results = list(pool.map(_run_step, steps, chunksize=8))
    else:
        _init_worker(*init_args)
        results = [_run_step(t) for t in steps]

    results.sort(key=lambda r: r[0])
    reports = []
    for alpha in alphas:
        q = 1.0 - alpha / 100.0
        hits = 0
        trials = 0
        var_series = []
        step_indices = []
        skipped = []
        for t, var_by_alpha, err in results:
            if err is not None:
                skipped.append((t, err))
                continue
            realized_row = t - 1 if mode == WITHIN_SAMPLE else t
            realized = float(returns[realized_row] @ weights)
            var = var_by_alpha[alpha]
            var_series.append(var)
            step_indices.append(t)
            trials += 1
            if -realized > var:
                hits += 1
        stats = kupiec_pof(hits, trials, q) if trials else {"lr_pof": 0.0,
                                                            "p_value": 1.0}
        reports.append(VaRBacktestReport(
            alpha=alpha, mode=mode, var_series=tuple(var_series),
            step_indices=tuple(step_indices), hits=hits, trials=trials,
            lr_pof=stats["lr_pof"], p_value=stats["p_value"],
            skipped=tuple(skipped)))
    return reports
