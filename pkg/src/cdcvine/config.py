"""Run configuration: spec'd defaults, JSON file, command-line overrides.

Precedence is flag > file > default. The resolved config is embedded in
every output for provenance.
"""

import json
from dataclasses import asdict, dataclass, field

from . import bicop, clustering, indexing
from .backtest import MODES, OUT_OF_SAMPLE
from .errors import InputError

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    data: str | None = None
    out_dir: str = "."
    window: int = 150
    window_start: int = 0
    metric: str = clustering.KENDALL_TAU_BASED
    linkage: str = clustering.ADAPTED_SINGLE
    a: int | None = None
    b: int | None = 15
    index_rule: str = indexing.VOLATILITY_WEIGHTED
    upsilon: float = 11.0
    market_source: str = indexing.FROM_ASSETS
    seed: int = 0
    families: tuple = bicop.PARAMETRIC_FAMILIES
    alphas: tuple = (95.0, 99.0)
    n_sims: int = 10_000
    mode: str = OUT_OF_SAMPLE
    n_jobs: int | None = None
    severity: float = 1.0
    market_caps: str | None = None
    labels: str | None = None

    def __post_init__(self):
        self.families = tuple(self.families)
        self.alphas = tuple(float(a) for a in self.alphas)
        if self.metric not in clustering.METRICS:
            raise InputError(f"unknown metric {self.metric!r}")
        if self.linkage not in clustering.CRITERIA:
            raise InputError(f"unknown linkage {self.linkage!r}")
        if self.index_rule not in indexing.RULES:
            raise InputError(f"unknown index rule {self.index_rule!r}")
        if self.market_source not in indexing.MARKET_SOURCES:
            raise InputError(f"unknown market source {self.market_source!r}")
        if self.mode not in MODES:
            raise InputError(f"unknown mode {self.mode!r}")
        for fam in self.families:
            if fam not in bicop.PARAMETRIC_FAMILIES:
                raise InputError(f"unknown copula family {fam!r}")
        if self.upsilon < 0:
            raise InputError("upsilon must be >= 0")
        if self.window < 30:
            raise InputError("window must be >= 30")

    def to_dict(self):
        d = asdict(self)
        d["families"] = list(self.families)
        d["alphas"] = list(self.alphas)
        return d

    def fit_kwargs(self):
        """Keyword arguments for fit_cdcv (clustering/index/family knobs)."""
        return {
            "metric": self.metric, "linkage": self.linkage,
            "a": self.a, "b": self.b, "index_rule": self.index_rule,
            "upsilon": self.upsilon, "market_source": self.market_source,
            "families": self.families, "severity": self.severity,
        }


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot open config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"config {path} must hold a JSON object")
    return doc


def resolve_config(file_doc=None, overrides=None):
    """Merge defaults, a config-file dict and CLI overrides (None = unset)."""
    values = {}
    known = set(RunConfig.__dataclass_fields__)
    for source in (file_doc or {}), (overrides or {}):
        for key, val in source.items():
            if key not in known:
                raise InputError(f"unknown config key {key!r}")
            if val is not None:
                values[key] = val
    return RunConfig(**values)
