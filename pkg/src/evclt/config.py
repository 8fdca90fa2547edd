"""Config-file schema and loading.

One YAML (or JSON) file drives every CLI command:

.. code-block:: yaml

    seed: 42                       # master seed; EVCLT_SEED overrides it
    design:
      kind: linear                 # linear | power | alternating | geometric
                                   # | bounded | gaussian-iid | constant
      params: {slope: 1.0}
      seed: 0                      # consumed only by gaussian-iid
    model:
      theta: 1.0
      beta: 2.0
      eps:   {family: normal, scale: 1.0}      # + df for student-t
      delta: {family: normal, scale: 1.0}
      alpha: 1.0
    grid: [50, 100, 200, 500, 1000, 2000, 5000, 10000]
    replicates: 5000
    variance_source: "true"        # "true" | "plug-in" (quote the former!)
    tests: [beta-clt]              # beta-clt | theta-clt | coverage
                                   # | negligibility | counterexample
    diagnose:
      conditions: [liu-chen-beta, c6, c7, theta-consistency, c17]
      hierarchy: true
      petrov: true
    lindeberg:
      r_grid: [0.1, 0.5, 1.0]
      method: quadrature           # quadrature | monte-carlo
      mc_budget: 1000000
    defaults:                      # every numeric knob, all optional
      trend_tail_k: 5
      trend_to_zero_threshold: 0.2
      trend_to_infinity_threshold: 50.0
      trend_plateau_rel_change: 0.25
      ks_critical_coefficient: 1.36
      ks_absolute_slack: 0.01
      coverage_nominal: 0.95
      coverage_slack: 0.02
      counterexample_mean_tol: 0.05
      counterexample_ks_min: 0.1
      max_skip_fraction: 0.01
      min_distributional_replicates: 100
      identity_gap_max: 1.0e-10
      chunk_size: 256

Unknown keys anywhere are rejected so typos cannot silently change a run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .asymptotics import CONDITION_IDS, TrendRule
from .design import DesignSequence
from .errors import ConfigError
from .harness import ExperimentConfig, HarnessDefaults, TEST_KINDS
from .model import ErrorDistribution, EVModelSpec

DEFAULT_N_GRID = (50, 100, 200, 500, 1000, 2000, 5000, 10000)
DEFAULT_LINDEBERG_R_GRID = (0.1, 0.5, 1.0)

_TREND_KEYS = {
    "trend_tail_k": ("tail_k", int),
    "trend_to_zero_threshold": ("to_zero_threshold", float),
    "trend_to_infinity_threshold": ("to_infinity_threshold", float),
    "trend_plateau_rel_change": ("plateau_rel_change", float),
}
_HARNESS_KEYS = {
    "ks_critical_coefficient": float,
    "ks_absolute_slack": float,
    "coverage_nominal": float,
    "coverage_slack": float,
    "counterexample_mean_tol": float,
    "counterexample_ks_min": float,
    "max_skip_fraction": float,
    "min_distributional_replicates": int,
    "identity_gap_max": float,
    "chunk_size": int,
}


@dataclass(frozen=True)
class DiagnoseSection:
    conditions: tuple[str, ...] = CONDITION_IDS
    hierarchy: bool = True
    petrov: bool = True

    def to_dict(self) -> dict:
        return {
            "conditions": list(self.conditions),
            "hierarchy": self.hierarchy,
            "petrov": self.petrov,
        }


@dataclass(frozen=True)
class LindebergSection:
    r_grid: tuple[float, ...] = DEFAULT_LINDEBERG_R_GRID
    method: str = "quadrature"
    mc_budget: int = 1_000_000

    def to_dict(self) -> dict:
        return {"r_grid": list(self.r_grid), "method": self.method, "mc_budget": self.mc_budget}


@dataclass(frozen=True)
class AppConfig:
    seed: int
    design: DesignSequence
    model: EVModelSpec
    n_grid: tuple[int, ...]
    replicates: int
    variance_source: str
    tests: tuple[str, ...]
    trend_rule: TrendRule = field(default_factory=TrendRule)
    harness: HarnessDefaults = field(default_factory=HarnessDefaults)
    diagnose: DiagnoseSection = field(default_factory=DiagnoseSection)
    lindeberg: LindebergSection = field(default_factory=LindebergSection)

    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig(
            design=self.design,
            model=self.model,
            n_grid=self.n_grid,
            replicates=self.replicates,
            seed=self.seed,
            variance_source=self.variance_source,
            tests=self.tests,
            defaults=self.harness,
        )

    def with_seed(self, seed: int) -> "AppConfig":
        return replace(self, seed=int(seed))

    def canonical(self) -> dict:
        return {
            "seed": self.seed,
            "design": self.design.to_dict(),
            "model": self.model.to_dict(),
            "grid": list(self.n_grid),
            "replicates": self.replicates,
            "variance_source": self.variance_source,
            "tests": list(self.tests),
            "trend_rule": {
                "tail_k": self.trend_rule.tail_k,
                "to_zero_threshold": self.trend_rule.to_zero_threshold,
                "to_infinity_threshold": self.trend_rule.to_infinity_threshold,
                "plateau_rel_change": self.trend_rule.plateau_rel_change,
            },
            "defaults": self.harness.to_dict(),
            "diagnose": self.diagnose.to_dict(),
            "lindeberg": self.lindeberg.to_dict(),
        }


def config_hash(config: AppConfig) -> str:
    payload = json.dumps(config.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _require_mapping(node, where: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed: set[str], where: str) -> None:
    unknown = set(node) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _parse_design(node) -> DesignSequence:
    node = _require_mapping(node, "design")
    _check_keys(node, {"kind", "params", "seed"}, "design")
    if "kind" not in node:
        raise ConfigError("design.kind is required")
    return DesignSequence(
        kind=str(node["kind"]),
        params=_require_mapping(node.get("params", {}), "design.params"),
        seed=int(node.get("seed", 0)),
    )


def _parse_error_dist(node, where: str) -> ErrorDistribution:
    node = _require_mapping(node, where)
    _check_keys(node, {"family", "scale", "df"}, where)
    if "family" not in node or "scale" not in node:
        raise ConfigError(f"{where} needs family and scale")
    df = node.get("df")
    return ErrorDistribution(
        family=str(node["family"]),
        scale=float(node["scale"]),
        df=float(df) if df is not None else None,
    )


def _parse_model(node) -> EVModelSpec:
    node = _require_mapping(node, "model")
    _check_keys(node, {"theta", "beta", "eps", "delta", "alpha"}, "model")
    for key in ("theta", "beta", "eps", "delta"):
        if key not in node:
            raise ConfigError(f"model.{key} is required")
    return EVModelSpec(
        theta=float(node["theta"]),
        beta=float(node["beta"]),
        eps_dist=_parse_error_dist(node["eps"], "model.eps"),
        delta_dist=_parse_error_dist(node["delta"], "model.delta"),
        alpha=float(node.get("alpha", 1.0)),
    )


def _parse_variance_source(value) -> str:
    if value is True:  # unquoted YAML `true`
        return "true"
    text = str(value)
    if text not in ("true", "plug-in"):
        raise ConfigError("variance_source must be 'true' or 'plug-in'")
    return text


def _parse_defaults(node) -> tuple[TrendRule, HarnessDefaults]:
    node = _require_mapping(node, "defaults")
    _check_keys(node, set(_TREND_KEYS) | set(_HARNESS_KEYS), "defaults")
    trend_kwargs = {}
    for key, (attr, cast) in _TREND_KEYS.items():
        if key in node:
            trend_kwargs[attr] = cast(node[key])
    harness_kwargs = {}
    for key, cast in _HARNESS_KEYS.items():
        if key in node:
            harness_kwargs[key] = cast(node[key])
    return TrendRule(**trend_kwargs), HarnessDefaults(**harness_kwargs)


def _parse_diagnose(node) -> DiagnoseSection:
    node = _require_mapping(node, "diagnose")
    _check_keys(node, {"conditions", "hierarchy", "petrov"}, "diagnose")
    conditions = tuple(str(c) for c in node.get("conditions", CONDITION_IDS))
    for c in conditions:
        if c not in CONDITION_IDS:
            raise ConfigError(f"unknown condition id {c!r}; expected one of {CONDITION_IDS}")
    return DiagnoseSection(
        conditions=conditions,
        hierarchy=bool(node.get("hierarchy", True)),
        petrov=bool(node.get("petrov", True)),
    )


def _parse_lindeberg(node) -> LindebergSection:
    node = _require_mapping(node, "lindeberg")
    _check_keys(node, {"r_grid", "method", "mc_budget"}, "lindeberg")
    r_grid = tuple(float(r) for r in node.get("r_grid", DEFAULT_LINDEBERG_R_GRID))
    if not r_grid or any(r <= 0.0 for r in r_grid):
        raise ConfigError("lindeberg.r_grid needs strictly positive truncation levels")
    method = str(node.get("method", "quadrature"))
    if method not in ("quadrature", "monte-carlo"):
        raise ConfigError("lindeberg.method must be 'quadrature' or 'monte-carlo'")
    mc_budget = int(node.get("mc_budget", 1_000_000))
    if mc_budget < 1000:
        raise ConfigError("lindeberg.mc_budget must be >= 1000")
    return LindebergSection(r_grid=r_grid, method=method, mc_budget=mc_budget)


_TOP_KEYS = {
    "seed",
    "design",
    "model",
    "grid",
    "replicates",
    "variance_source",
    "tests",
    "diagnose",
    "lindeberg",
    "defaults",
}


def parse_config(data: dict) -> AppConfig:
    data = _require_mapping(data, "config")
    _check_keys(data, _TOP_KEYS, "config")
    for key in ("design", "model"):
        if key not in data:
            raise ConfigError(f"config.{key} is required")
    tests = tuple(str(t) for t in data.get("tests", ("beta-clt",)))
    for t in tests:
        if t not in TEST_KINDS:
            raise ConfigError(f"unknown test kind {t!r}; expected one of {TEST_KINDS}")
    trend_rule, harness = _parse_defaults(data.get("defaults", {}))
    config = AppConfig(
        seed=int(data.get("seed", 0)),
        design=_parse_design(data["design"]),
        model=_parse_model(data["model"]),
        n_grid=tuple(int(n) for n in data.get("grid", DEFAULT_N_GRID)),
        replicates=int(data.get("replicates", 1000)),
        variance_source=_parse_variance_source(data.get("variance_source", "true")),
        tests=tests,
        trend_rule=trend_rule,
        harness=harness,
        diagnose=_parse_diagnose(data.get("diagnose", {})),
        lindeberg=_parse_lindeberg(data.get("lindeberg", {})),
    )
    grid = config.n_grid
    if not grid or grid[0] < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("grid must be strictly increasing with min >= 2")
    return config


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        raise ConfigError(f"config file {path} is empty")
    return parse_config(data)
