"""Cluster-derived canonical vine (CDCV) copula modelling.

Clusters asset return series, derives noise-perturbed cluster/market
indexes, fits a two-tree canonical-vine copula closed by one joint
multivariate copula, simulates from the fit, and backtests portfolio
VaR with the Kupiec proportion-of-failures test.
"""

from .backtest import (OUT_OF_SAMPLE, WITHIN_SAMPLE, VaRBacktestReport,
                       format_report_table, kupiec_pof, portfolio_var,
                       rolling_backtest)
from .bicop import (BivariateCopulaFit, copula_density, copula_logpdf,
                    fit_bicop, h, h_inv, kendall_tau, select_bicop,
                    spearman_rho)
from .cdcv import (CDCVModel, ConditioningDiagnostics, cdcv_logdensity,
                   conditioning_diagnostics, fit_cdcv, model_from_dict,
                   model_to_dict, parameter_count, selection_summary,
                   simulate_cdcv, summarize_rhos)
from .clustering import (ClusterPartition, agglomerate, distance,
                         distance_matrix, fixed_partition)
from .cvine import (CVineModel, cvine_density, cvine_loglik, fit_cvine,
                    simulate_cvine)
from .errors import CdcvineError, FitError, InputError, NumericalError
from .generator import factor_labels, factor_panel
from .indexing import IndexSeries, add_noise, build_hierarchy, build_index
from .marginals import (MarginalFit, fit_marginal, marginal_cdf, marginal_pdf,
                        marginal_quantile, pit)
from .mvcop import JointCopulaFit, fit_joint, joint_logpdf, simulate_joint
from .panel import ReturnPanel, RollingWindow, load_panel, panel_stats, save_panel

__version__ = "0.1.0"
