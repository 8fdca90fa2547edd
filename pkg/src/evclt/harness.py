"""Monte Carlo harness: replicate the model at each grid point, standardize
the estimators, and test the empirical law against the standard normal.

Determinism contract: every random draw is keyed by (seed, n, replicate,
stream), replicate chunks have a fixed size, and results are assembled by
replicate index, so a run's report is a pure function of its configuration
regardless of worker count. The KS pass threshold is the classical 5%
critical value 1.36 / sqrt(R) plus a configurable absolute slack that
budgets for pre-asymptotic (finite-n) deviation separately from Monte Carlo
noise.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from collections.abc import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from . import kernels
from ._backend import active_backend
from .asymptotics import TrendRule, VERDICT_SATISFIED, condition_path
from .design import DesignSequence, summarize
from .errors import ConfigError, DegenerateDesignError, ZeroVarianceError
from .estimator import singular_threshold
from .model import EVModelSpec
from .rng import STREAM_DELTA, STREAM_EPS, uniforms

TEST_KINDS = ("beta-clt", "theta-clt", "coverage", "negligibility", "counterexample")
DISTRIBUTIONAL_TESTS = frozenset({"beta-clt", "theta-clt", "coverage", "counterexample"})


@dataclass(frozen=True)
class HarnessDefaults:
    """Every numeric knob of the harness, in one place."""

    ks_critical_coefficient: float = 1.36
    ks_absolute_slack: float = 0.01
    coverage_nominal: float = 0.95
    coverage_slack: float = 0.02
    counterexample_mean_tol: float = 0.05
    counterexample_ks_min: float = 0.1
    max_skip_fraction: float = 0.01
    min_distributional_replicates: int = 100
    identity_gap_max: float = 1e-10
    chunk_size: int = 256

    def to_dict(self) -> dict:
        return {
            "ks_critical_coefficient": self.ks_critical_coefficient,
            "ks_absolute_slack": self.ks_absolute_slack,
            "coverage_nominal": self.coverage_nominal,
            "coverage_slack": self.coverage_slack,
            "counterexample_mean_tol": self.counterexample_mean_tol,
            "counterexample_ks_min": self.counterexample_ks_min,
            "max_skip_fraction": self.max_skip_fraction,
            "min_distributional_replicates": self.min_distributional_replicates,
            "identity_gap_max": self.identity_gap_max,
            "chunk_size": self.chunk_size,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    design: DesignSequence
    model: EVModelSpec
    n_grid: tuple[int, ...]
    replicates: int
    seed: int
    variance_source: str = "true"
    tests: tuple[str, ...] = ("beta-clt",)
    defaults: HarnessDefaults = field(default_factory=HarnessDefaults)

    def __post_init__(self) -> None:
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or grid[0] < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("n_grid must be strictly increasing with min >= 2")
        object.__setattr__(self, "n_grid", grid)
        tests = tuple(self.tests)
        for t in tests:
            if t not in TEST_KINDS:
                raise ConfigError(f"unknown test kind {t!r}; expected one of {TEST_KINDS}")
        object.__setattr__(self, "tests", tests)
        if self.variance_source not in ("true", "plug-in"):
            raise ConfigError("variance_source must be 'true' or 'plug-in'")
        if self.replicates < 2:
            raise ConfigError("need at least 2 replicates")
        needs_r = DISTRIBUTIONAL_TESTS.intersection(tests)
        if needs_r and self.replicates < self.defaults.min_distributional_replicates:
            raise ConfigError(
                f"distributional tests {sorted(needs_r)} need R >= "
                f"{self.defaults.min_distributional_replicates}, got {self.replicates}"
            )
        if "counterexample" in tests and self.design.kind != "gaussian-iid":
            raise ConfigError("the counterexample test needs a gaussian-iid design")

    def to_dict(self) -> dict:
        return {
            "design": self.design.to_dict(),
            "model": self.model.to_dict(),
            "n_grid": list(self.n_grid),
            "replicates": self.replicates,
            "seed": self.seed,
            "variance_source": self.variance_source,
            "tests": list(self.tests),
            "defaults": self.defaults.to_dict(),
        }


@dataclass(frozen=True)
class NormalityResult:
    n: int
    statistic: str  # "z_beta" | "z_theta"
    ks_distance: float
    ks_threshold: float
    mean: float
    variance: float
    ok: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "statistic": self.statistic,
            "ks_distance": self.ks_distance,
            "ks_threshold": self.ks_threshold,
            "mean": self.mean,
            "variance": self.variance,
            "pass": self.ok,
        }


@dataclass(frozen=True)
class CoverageResult:
    n: int
    nominal: float
    empirical: float
    stderr: float
    half_width_basis: str  # "z_beta" | "z_theta"
    ok: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "nominal": self.nominal,
            "empirical": self.empirical,
            "stderr": self.stderr,
            "half_width_basis": self.half_width_basis,
            "pass": self.ok,
        }


# ---------------------------------------------------------------------------
# elementary statistics
# ---------------------------------------------------------------------------


def ks_statistic(samples: Sequence[float] | np.ndarray) -> float:
    """Exact sup-distance of the empirical CDF from the standard normal CDF,
    via the sorted-sample formula."""
    z = np.asarray(samples, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise ConfigError("ks_statistic needs at least 2 samples")
    if not np.all(np.isfinite(z)):
        raise ConfigError("ks_statistic needs finite samples")
    z = np.sort(z)
    count = z.size
    cdf = ndtr(z)
    i = np.arange(1, count + 1, dtype=np.float64)
    return float(max(np.max(i / count - cdf), np.max(cdf - (i - 1) / count)))


def coverage(
    z_samples: Sequence[float] | np.ndarray,
    nominal: float,
    half_width_basis: str = "z_beta",
    n: int | None = None,
    slack: float = 0.02,
) -> CoverageResult:
    """Empirical two-sided symmetric coverage of the standardized statistic."""
    if not 0.0 < nominal < 1.0:
        raise ConfigError("nominal coverage must lie in (0, 1)")
    z = np.asarray(z_samples, dtype=np.float64)
    if z.size < 100:
        raise ConfigError("coverage needs at least 100 samples")
    half_width = float(ndtri((1.0 + nominal) / 2.0))
    empirical = float(np.mean(np.abs(z) <= half_width))
    stderr = math.sqrt(max(empirical * (1.0 - empirical), 0.0) / z.size)
    return CoverageResult(
        n=int(n) if n is not None else int(z.size),
        nominal=float(nominal),
        empirical=empirical,
        stderr=stderr,
        half_width_basis=half_width_basis,
        ok=abs(empirical - nominal) <= slack,
    )


# ---------------------------------------------------------------------------
# replicate simulation
# ---------------------------------------------------------------------------


@dataclass
class _GridPointStats:
    n: int
    s_n: float
    valid: np.ndarray  # boolean mask over replicates
    beta_hat: np.ndarray
    theta_hat: np.ndarray
    sxx: np.ndarray
    rvar: np.ndarray
    ratios: np.ndarray | None  # (R, 3) negligibility ratios (third one signed)
    identity_gap: float | None


def _simulate_grid_point(
    spec: EVModelSpec,
    x: np.ndarray,
    n: int,
    replicates: int,
    seed: int,
    need_latents: bool,
    chunk_size: int,
    workers: int,
) -> _GridPointStats:
    s_n = float(np.sum((x - np.mean(x)) ** 2))
    beta_hat = np.empty(replicates)
    theta_hat = np.empty(replicates)
    sxx = np.empty(replicates)
    rvar = np.empty(replicates)
    xi_mean = np.empty(replicates)
    sums = np.empty((replicates, 6)) if need_latents else None

    def work(lo: int, hi: int):
        rows = hi - lo
        xi = np.empty((rows, n))
        eta = np.empty((rows, n))
        eps = np.empty((rows, n)) if need_latents else None
        delta = np.empty((rows, n)) if need_latents else None
        for k, rep in enumerate(range(lo, hi)):
            e = spec.eps_dist.sample(uniforms((seed, n, rep, STREAM_EPS), n))
            d = spec.delta_dist.sample(uniforms((seed, n, rep, STREAM_DELTA), n))
            xi[k] = x + d
            eta[k] = spec.theta + spec.beta * x + e
            if need_latents:
                eps[k] = e
                delta[k] = d
        fit = kernels.fit_batch(xi, eta)
        dec = kernels.decompose_batch(x, xi, eps, delta) if need_latents else None
        return lo, hi, fit, dec, xi.mean(axis=1)

    spans = [(lo, min(lo + chunk_size, replicates)) for lo in range(0, replicates, chunk_size)]
    if workers <= 1:
        outputs = [work(lo, hi) for lo, hi in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(lambda span: work(*span), spans))
    for lo, hi, fit, dec, mean_row in outputs:
        beta_hat[lo:hi], theta_hat[lo:hi], sxx[lo:hi], rvar[lo:hi] = fit
        xi_mean[lo:hi] = mean_row
        if dec is not None:
            for col, values in enumerate(dec):
                sums[lo:hi, col] = values

    valid = sxx >= np.array([singular_threshold(n, m) for m in xi_mean])

    ratios = None
    identity_gap = None
    if need_latents:
        s_xi_eps, s_x_delta, s_x_eps, s_delta_sq, s_delta_eps, sxx_obs = sums.T
        beta = spec.beta
        root_s = math.sqrt(s_n) if s_n > 0 else math.nan
        ratios = np.column_stack(
            [
                s_delta_sq / root_s,
                np.abs(s_delta_eps) / root_s,
                sxx_obs / s_n - 1.0 if s_n > 0 else np.full(replicates, math.nan),
            ]
        )
        with np.errstate(invalid="ignore", divide="ignore"):
            err_fit = beta_hat - beta
            rhs_direct = (s_xi_eps - beta * s_x_delta - beta * s_delta_sq) / sxx_obs
            rhs_split = (
                s_delta_eps + (s_x_eps - beta * s_x_delta) - beta * s_delta_sq
            ) / sxx_obs
            fit_scale = np.maximum(1.0, np.maximum(abs(beta), np.abs(beta_hat)))
            gaps = np.maximum(
                np.abs(err_fit - rhs_direct) / fit_scale,
                np.abs(err_fit - rhs_split) / fit_scale,
            )
        identity_gap = float(np.max(gaps[valid])) if np.any(valid) else 0.0

    return _GridPointStats(
        n=n,
        s_n=s_n,
        valid=valid,
        beta_hat=beta_hat,
        theta_hat=theta_hat,
        sxx=sxx,
        rvar=rvar,
        ratios=ratios,
        identity_gap=identity_gap,
    )


def _standardized(
    stats: _GridPointStats, spec: EVModelSpec, variance_source: str
) -> tuple[np.ndarray, np.ndarray]:
    """(z_beta, z_theta) over the valid replicates."""
    beta_err = stats.beta_hat[stats.valid] - spec.beta
    theta_err = stats.theta_hat[stats.valid] - spec.theta
    if variance_source == "true":
        var = np.full(beta_err.shape, spec.nu_variance())
    else:
        var = stats.rvar[stats.valid]
        if np.any(var <= 0.0):
            raise ZeroVarianceError(
                "plug-in standardization needs residual_var > 0 on every replicate"
            )
    with np.errstate(divide="ignore", invalid="ignore"):
        root_v = np.sqrt(var)
        z_beta = np.where(beta_err == 0.0, 0.0, math.sqrt(stats.s_n) * beta_err / root_v)
        z_theta = np.where(theta_err == 0.0, 0.0, math.sqrt(stats.n) * theta_err / root_v)
    return z_beta, z_theta


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------


def run_experiment(
    config: ExperimentConfig,
    workers: int = 1,
    collect_samples: bool = False,
) -> tuple[dict, dict | None]:
    """Run the configured tests; returns (report, samples).

    ``samples`` maps statistic name -> {n: standardized values} when
    ``collect_samples`` is set, else None. The report is a JSON-ready dict
    and is byte-identical for any worker count.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    defaults = config.defaults
    report_warnings: list[str] = []

    if "theta-clt" in config.tests:
        c17 = condition_path("c17", config.design, config.n_grid, TrendRule())
        if c17.verdict != VERDICT_SATISFIED:
            msg = (
                "theta-clt requested but the design's intercept condition "
                f"(c17) is {c17.verdict}; refutation runs are legitimate"
            )
            warnings.warn(msg, stacklevel=2)
            report_warnings.append(msg)

    need_latents = "negligibility" in config.tests
    grid_entries: list[dict] = []
    samples: dict[str, dict[int, np.ndarray]] = {"z_beta": {}, "z_theta": {}}
    medians_by_ratio: list[list[float]] = [[], [], []]
    skip_ok = True
    identity_ok = True

    x_full = config.design.generate(config.n_grid[-1])
    for n in config.n_grid:
        x = x_full[:n]
        summary = summarize(x)
        if need_latents and summary.s_n <= 0.0:
            raise DegenerateDesignError(
                f"negligibility ratios need S_n > 0 (constant design at n={n})"
            )
        stats = _simulate_grid_point(
            spec=config.model,
            x=x,
            n=n,
            replicates=config.replicates,
            seed=config.seed,
            need_latents=need_latents,
            chunk_size=defaults.chunk_size,
            workers=workers,
        )
        used = int(np.count_nonzero(stats.valid))
        skipped = config.replicates - used
        skip_fraction = skipped / config.replicates
        if skip_fraction > defaults.max_skip_fraction:
            skip_ok = False
        if used < 2:
            raise ConfigError(
                f"fewer than 2 non-singular replicates at n={n}; design/model degenerate"
            )
        z_beta, z_theta = _standardized(stats, config.model, config.variance_source)
        if collect_samples:
            samples["z_beta"][n] = z_beta
            samples["z_theta"][n] = z_theta

        ks_threshold = defaults.ks_critical_coefficient / math.sqrt(used) + defaults.ks_absolute_slack
        normality = {}
        for name, z in (("z_beta", z_beta), ("z_theta", z_theta)):
            ks = ks_statistic(z)
            normality[name] = NormalityResult(
                n=n,
                statistic=name,
                ks_distance=ks,
                ks_threshold=ks_threshold,
                mean=float(np.mean(z)),
                variance=float(np.var(z, ddof=1)),
                ok=ks < ks_threshold,
            )

        coverage_results = {}
        if "coverage" in config.tests:
            for name, z in (("z_beta", z_beta), ("z_theta", z_theta)):
                coverage_results[name] = coverage(
                    z,
                    defaults.coverage_nominal,
                    half_width_basis=name,
                    n=n,
                    slack=defaults.coverage_slack,
                )

        entry: dict = {
            "n": n,
            "summary": summary.to_dict(),
            "replicates": config.replicates,
            "replicates_used": used,
            "skipped": skipped,
            "skip_fraction": skip_fraction,
            "normality": {k: v.to_dict() for k, v in normality.items()},
        }
        if coverage_results:
            entry["coverage"] = {k: v.to_dict() for k, v in coverage_results.items()}
        if need_latents:
            valid_ratios = stats.ratios[stats.valid]
            meds = [
                float(np.median(valid_ratios[:, 0])),
                float(np.median(valid_ratios[:, 1])),
                float(np.median(np.abs(valid_ratios[:, 2]))),
            ]
            for store, value in zip(medians_by_ratio, meds):
                store.append(value)
            entry["negligibility"] = {
                "median_delta_sq": meds[0],
                "median_delta_eps": meds[1],
                "median_sxx_gap": meds[2],
            }
            entry["identity_max_gap"] = stats.identity_gap
            if stats.identity_gap > defaults.identity_gap_max:
                identity_ok = False
        grid_entries.append(entry)

    # per-test pass flags
    tests_pass: dict[str, bool] = {}
    if "beta-clt" in config.tests:
        tests_pass["beta-clt"] = all(
            e["normality"]["z_beta"]["pass"] for e in grid_entries
        )
    if "theta-clt" in config.tests:
        tests_pass["theta-clt"] = all(
            e["normality"]["z_theta"]["pass"] for e in grid_entries
        )
    if "coverage" in config.tests:
        gated = [
            name
            for name, test in (("z_beta", "beta-clt"), ("z_theta", "theta-clt"))
            if test in config.tests
        ] or ["z_beta", "z_theta"]
        tests_pass["coverage"] = all(
            e["coverage"][name]["pass"] for e in grid_entries for name in gated
        )
    if "negligibility" in config.tests:
        if len(config.n_grid) < 2:
            raise ConfigError("the negligibility trend needs at least 2 grid points")
        tests_pass["negligibility"] = all(
            all(a > b for a, b in zip(path, path[1:])) for path in medians_by_ratio
        )

    counterexample_entries = None
    if "counterexample" in config.tests:
        counterexample_entries = counterexample_run(
            config.design,
            config.model,
            config.n_grid,
            config.replicates,
            config.seed,
            defaults=defaults,
            workers=workers,
        )
        tests_pass["counterexample"] = all(e["pass"] for e in counterexample_entries)

    overall = all(tests_pass.values()) and skip_ok and identity_ok

    report = {
        "tool_version": _version(),
        "backend": active_backend(),
        "config": config.to_dict(),
        "grid": grid_entries,
        "tests": tests_pass,
        "skip_ok": skip_ok,
        "identity_ok": identity_ok,
        "warnings": report_warnings,
        "pass": overall,
    }
    if counterexample_entries is not None:
        report["counterexample"] = counterexample_entries
    return report, (samples if collect_samples else None)


def counterexample_run(
    design: DesignSequence,
    spec: EVModelSpec,
    n_grid: Sequence[int],
    replicates: int,
    seed: int,
    defaults: HarnessDefaults = HarnessDefaults(),
    workers: int = 1,
) -> list[dict]:
    """Random-regressor attenuation check: the slope estimate drifts to the
    analytic limit beta * V_x / (V_x + sigma1^2) and its standardized version
    fails normality.

    The design realization is fixed by the design seed; replicates vary only
    the error draws, matching the fixed-constants reading of the model.
    """
    if design.kind != "gaussian-iid":
        raise ConfigError("counterexample_run needs a gaussian-iid design")
    if replicates < defaults.min_distributional_replicates:
        raise ConfigError(
            f"counterexample needs R >= {defaults.min_distributional_replicates}"
        )
    v_x = design.params["sd"] ** 2
    sigma1_sq = spec.delta_dist.variance()
    target = spec.beta * v_x / (v_x + sigma1_sq) if (v_x + sigma1_sq) > 0 else spec.beta
    entries = []
    x_full = design.generate(max(int(n) for n in n_grid))
    for n in (int(v) for v in n_grid):
        x = x_full[:n]
        stats = _simulate_grid_point(
            spec=spec,
            x=x,
            n=n,
            replicates=replicates,
            seed=seed,
            need_latents=False,
            chunk_size=defaults.chunk_size,
            workers=workers,
        )
        z_beta, _ = _standardized(stats, spec, "true")
        beta_valid = stats.beta_hat[stats.valid]
        mean_beta = float(np.mean(beta_valid))
        ks = ks_statistic(z_beta)
        refuted = ks >= defaults.counterexample_ks_min
        mean_ok = abs(mean_beta - target) <= defaults.counterexample_mean_tol
        entries.append(
            {
                "n": n,
                "mean_beta_hat": mean_beta,
                "var_beta_hat": float(np.var(beta_valid, ddof=1)),
                "attenuation_target": target,
                "ks_distance_z_beta": ks,
                "normality_refuted": refuted,
                "pass": bool(refuted and mean_ok),
            }
        )
    return entries


def report_json_bytes(report: dict) -> bytes:
    """Canonical JSON encoding; identical runs give identical bytes."""
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _version() -> str:
    from . import __version__

    return __version__
