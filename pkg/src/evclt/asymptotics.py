"""Numerical evaluation of the asymptotic conditions along a grid of n.

Limits are untestable at finite n, so each condition is reduced to a scalar
computed from design summaries and classified by a transparent trend rule
over the tail of the grid (see :class:`TrendRule`). Condition identifiers
are stable strings used in file outputs:

=================  ========================================  ===========
id                 quantity                                  target
=================  ========================================  ===========
liu-chen-beta      S_n / n                                   to-infinity
c6                 n / sqrt(S_n)                             to-zero
c7                 max_i |x_i - x_bar| / sqrt(S_n)           to-zero
theta-consistency  |n x_bar| / S_n*                          to-zero
c17                S_n / (n x_bar^2)                         to-infinity
petrov-i..iii      truncated-moment sums below               to-zero
=================  ========================================  ===========

The Lindeberg evaluator works on the normalized triangular array
X_{n,i} = (x_i - x_bar) nu_i / sqrt(S_n Var(nu)), whose second moments sum
to one, and reports sum_i E[X_{n,i}^2 ; |X_{n,i}| > r] either by per-i
truncated-moment quadrature (closed forms where the law allows) or by
Monte Carlo with a standard error.

The Petrov checker instantiates the weak-law equivalence with a_n =
sqrt(S_n) applied to the squared measurement errors; its condition (iii)
collapses to (n / sqrt(S_n)) E[delta^2 ; delta^2 < sqrt(S_n)], which is why
its verdict must track c6 on every nondegenerate design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from collections.abc import Sequence

import numpy as np
from scipy.special import erfc

from .design import DesignSequence, DesignSummary, summary_path
from .errors import ConfigError, DegenerateDesignError, QuadratureUnsupportedError
from .model import ErrorDistribution, EVModelSpec
from .rng import STREAM_MC_DELTA, STREAM_MC_EPS, uniforms

CONDITION_IDS = ("liu-chen-beta", "c6", "c7", "theta-consistency", "c17")

VERDICT_SATISFIED = "satisfied-trend"
VERDICT_VIOLATED = "violated-trend"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TrendRule:
    """Finite-n proxy for a limit statement.

    satisfied-trend: the last ``tail_k`` values move strictly toward the
    target (exact-zero or infinite plateaus count as arrived) and the final
    value clears the threshold. violated-trend: the final value fails the
    threshold while the tail either moves away or has stalled (relative span
    below ``plateau_rel_change``). Anything else is inconclusive.
    """

    tail_k: int = 5
    to_zero_threshold: float = 0.2
    to_infinity_threshold: float = 50.0
    plateau_rel_change: float = 0.25


@dataclass(frozen=True)
class ConditionPath:
    name: str
    n_grid: tuple[int, ...]
    values: tuple[float, ...]
    target: str  # "to-zero" | "to-infinity"
    verdict: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_grid": list(self.n_grid),
            "values": list(self.values),
            "target": self.target,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class LindebergReport:
    n: int
    r: float
    sum_value: float
    method: str  # "quadrature" | "monte-carlo"
    stderr: float | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "sum_value": self.sum_value,
            "method": self.method,
            "stderr": self.stderr,
        }


@dataclass(frozen=True)
class HierarchyReport:
    """The three ratios whose joint decay orders n << sqrt(S_n) << max-dev^2 << S_n."""

    n_grid: tuple[int, ...]
    n_over_root_s: tuple[float, ...]
    root_s_over_maxdev_sq: tuple[float, ...]
    maxdev_sq_over_s: tuple[float, ...]
    flagged: bool

    def to_dict(self) -> dict:
        return {
            "n_grid": list(self.n_grid),
            "n_over_root_s": list(self.n_over_root_s),
            "root_s_over_maxdev_sq": list(self.root_s_over_maxdev_sq),
            "maxdev_sq_over_s": list(self.maxdev_sq_over_s),
            "flagged": self.flagged,
        }


@dataclass(frozen=True)
class PetrovReport:
    paths: dict[str, ConditionPath] = field(default_factory=dict)
    corollary: ConditionPath | None = None

    def to_dict(self) -> dict:
        out = {key: path.to_dict() for key, path in self.paths.items()}
        if self.corollary is not None:
            out["corollary-c6"] = self.corollary.to_dict()
        return out


# ---------------------------------------------------------------------------
# trend classification
# ---------------------------------------------------------------------------


def _toward(tail: Sequence[float], target: str) -> bool:
    if target == "to-zero":
        return all(a > b or (a == b == 0.0) for a, b in zip(tail, tail[1:]))
    return all(a < b or (a == b == math.inf) for a, b in zip(tail, tail[1:]))


def _away(tail: Sequence[float], target: str) -> bool:
    if target == "to-zero":
        return all(a < b for a, b in zip(tail, tail[1:]))
    return all(a > b for a, b in zip(tail, tail[1:]))


def _plateaued(tail: Sequence[float], rel_change: float) -> bool:
    if all(math.isinf(v) for v in tail):
        return True
    if any(math.isinf(v) for v in tail):
        return False
    span = max(tail) - min(tail)
    scale = max(abs(float(np.median(tail))), 1e-300)
    return span / scale <= rel_change


def classify_trend(values: Sequence[float], target: str, rule: TrendRule) -> str:
    if target not in ("to-zero", "to-infinity"):
        raise ConfigError(f"unknown trend target {target!r}")
    vals = [float(v) for v in values]
    if not vals:
        raise ConfigError("cannot classify an empty value path")
    tail = vals[-min(rule.tail_k, len(vals)):]
    final = tail[-1]
    if target == "to-zero":
        passes = final < rule.to_zero_threshold
    else:
        passes = final > rule.to_infinity_threshold
    if passes and _toward(tail, target):
        return VERDICT_SATISFIED
    if not passes and (_away(tail, target) or _plateaued(tail, rule.plateau_rel_change)):
        return VERDICT_VIOLATED
    return VERDICT_INCONCLUSIVE


# ---------------------------------------------------------------------------
# design-only conditions
# ---------------------------------------------------------------------------

_CONDITION_TARGETS = {
    "liu-chen-beta": "to-infinity",
    "c6": "to-zero",
    "c7": "to-zero",
    "theta-consistency": "to-zero",
    "c17": "to-infinity",
}


def condition_value(name: str, summary: DesignSummary) -> float:
    """The condition's scalar at one grid point, from summary statistics only."""
    if name == "liu-chen-beta":
        return summary.s_n / summary.n
    if name == "c6":
        if summary.s_n <= 0.0:
            return math.inf
        return summary.n / math.sqrt(summary.s_n)
    if name == "c7":
        if summary.s_n <= 0.0:
            return math.inf
        return summary.max_dev / math.sqrt(summary.s_n)
    if name == "theta-consistency":
        return abs(summary.n * summary.mean) / summary.s_star
    if name == "c17":
        if summary.mean == 0.0:
            return math.inf
        return summary.s_n / (summary.n * summary.mean**2)
    raise ConfigError(f"unknown condition id {name!r}; expected one of {CONDITION_IDS}")


def condition_path_from_summaries(
    name: str, summaries: Sequence[DesignSummary], rule: TrendRule = TrendRule()
) -> ConditionPath:
    values = tuple(condition_value(name, s) for s in summaries)
    target = _CONDITION_TARGETS[name]
    return ConditionPath(
        name=name,
        n_grid=tuple(s.n for s in summaries),
        values=values,
        target=target,
        verdict=classify_trend(values, target, rule),
    )


def condition_path(
    name: str,
    design: DesignSequence,
    n_grid: Sequence[int],
    rule: TrendRule = TrendRule(),
) -> ConditionPath:
    return condition_path_from_summaries(name, summary_path(design, n_grid), rule)


def scaling_hierarchy(
    design: DesignSequence,
    n_grid: Sequence[int],
    rule: TrendRule = TrendRule(),
) -> HierarchyReport:
    """Per-n ratios of the dispersion hierarchy; flagged when the slope-CLT
    conditions do not hold in trend for this design (report still computed)."""
    summaries = summary_path(design, n_grid)
    if any(s.s_n <= 0.0 or s.max_dev <= 0.0 for s in summaries):
        raise DegenerateDesignError("hierarchy ratios need S_n > 0 at every grid point")
    r1 = tuple(s.n / math.sqrt(s.s_n) for s in summaries)
    r2 = tuple(math.sqrt(s.s_n) / s.max_dev**2 for s in summaries)
    r3 = tuple(s.max_dev**2 / s.s_n for s in summaries)
    flagged = not (
        condition_path_from_summaries("c6", summaries, rule).verdict == VERDICT_SATISFIED
        and condition_path_from_summaries("c7", summaries, rule).verdict == VERDICT_SATISFIED
    )
    return HierarchyReport(
        n_grid=tuple(s.n for s in summaries),
        n_over_root_s=r1,
        root_s_over_maxdev_sq=r2,
        maxdev_sq_over_s=r3,
        flagged=flagged,
    )


# ---------------------------------------------------------------------------
# Lindeberg sum of the normalized array
# ---------------------------------------------------------------------------


def _normal_tail_second_vec(sigma: float, cutoffs: np.ndarray) -> np.ndarray:
    """E[X^2 ; |X| > t] for X ~ N(0, sigma^2), vectorized over t (t > 0)."""
    m = cutoffs / sigma
    phi = np.exp(-0.5 * m * m) / math.sqrt(2.0 * math.pi)
    return sigma * sigma * (erfc(m / math.sqrt(2.0)) + 2.0 * m * phi)


def _nu_quadrature_law(spec: EVModelSpec) -> tuple[str, ErrorDistribution | None, float]:
    """How to integrate against the law of nu = eps - beta delta.

    Returns ("normal", None, sigma) when nu is exactly normal, or
    ("single", dist, coeff) when nu = +/- coeff * X for a single catalog law.
    Raises QuadratureUnsupportedError otherwise (use Monte Carlo there).
    """
    eps, delta, beta = spec.eps_dist, spec.delta_dist, spec.beta
    if eps.family == "normal" and delta.family == "normal":
        return "normal", None, math.sqrt(spec.nu_variance())
    if beta == 0.0 or delta.scale == 0.0:
        return "single", eps, 1.0
    if eps.scale == 0.0:
        return "single", delta, abs(beta)
    raise QuadratureUnsupportedError(
        f"no closed-form law for eps({eps.family}) - beta*delta({delta.family}); "
        "use method='monte-carlo'"
    )


def lindeberg_sum(
    design: DesignSequence,
    n: int,
    spec: EVModelSpec,
    r: float,
    method: str = "quadrature",
    mc_budget: int = 1_000_000,
    seed: int = 0,
) -> LindebergReport:
    """sum_i E[X_{n,i}^2 ; |X_{n,i}| > r] for the normalized slope array."""
    if r <= 0.0:
        raise ConfigError("truncation level r must be > 0")
    if method not in ("quadrature", "monte-carlo"):
        raise ConfigError(f"unknown method {method!r}")
    variance = spec.nu_variance()
    if variance <= 0.0:
        raise ConfigError("Lindeberg array needs Var(eps - beta delta) > 0")
    x = design.generate(n)
    dev = x - np.mean(x)
    s_n = float(np.sum(dev * dev))
    if s_n <= 0.0:
        raise DegenerateDesignError("Lindeberg array needs S_n > 0")

    coeff = np.abs(dev) / math.sqrt(s_n * variance)  # X_{n,i} = coeff_i * nu_i
    active = coeff > 0.0
    coeff = coeff[active]
    bound = spec.nu_bound()
    if math.isfinite(bound) and float(np.max(coeff, initial=0.0)) * bound <= r:
        # the indicator can never fire: the sum is exactly zero
        return LindebergReport(n=n, r=r, sum_value=0.0, method=method,
                               stderr=0.0 if method == "monte-carlo" else None)

    thresholds = r / coeff  # |nu| must exceed this for index i to contribute

    if method == "quadrature":
        kind, dist, mult = _nu_quadrature_law(spec)
        if kind == "normal":
            tails = _normal_tail_second_vec(mult, thresholds)
        else:
            tails = np.array(
                [mult * mult * dist.tail_second_moment(t / mult) for t in thresholds]
            )
        value = float(np.sum(coeff * coeff * tails))
        return LindebergReport(n=n, r=r, sum_value=min(max(value, 0.0), 1.0),
                               method="quadrature", stderr=None)

    draws_eps = spec.eps_dist.sample(uniforms((seed, n, STREAM_MC_EPS), mc_budget))
    draws_delta = spec.delta_dist.sample(uniforms((seed, n, STREAM_MC_DELTA), mc_budget))
    nu_abs = np.abs(draws_eps - spec.beta * draws_delta)
    order = np.argsort(thresholds)
    sorted_thr = thresholds[order]
    weight_prefix = np.concatenate([[0.0], np.cumsum((coeff * coeff)[order])])
    # per-draw contribution: nu^2 times the total weight of indices with
    # threshold strictly below |nu|
    active_weight = weight_prefix[np.searchsorted(sorted_thr, nu_abs, side="left")]
    per_draw = nu_abs * nu_abs * active_weight
    value = float(np.mean(per_draw))
    stderr = float(np.std(per_draw, ddof=1) / math.sqrt(mc_budget))
    return LindebergReport(n=n, r=r, sum_value=min(max(value, 0.0), 1.0),
                           method="monte-carlo", stderr=stderr)


# ---------------------------------------------------------------------------
# Petrov weak-law conditions for the squared measurement errors
# ---------------------------------------------------------------------------


def petrov_conditions_from_summaries(
    summaries: Sequence[DesignSummary],
    spec: EVModelSpec,
    rule: TrendRule = TrendRule(),
) -> PetrovReport:
    delta = spec.delta_dist
    v1, v2, v3, c6_vals = [], [], [], []
    for s in summaries:
        if s.s_n <= 0.0:
            raise DegenerateDesignError(
                "Petrov normalization a_n = sqrt(S_n) needs S_n > 0"
            )
        a_n = math.sqrt(s.s_n)
        cutoff = math.sqrt(a_n)  # |delta| < a_n^(1/2) iff delta^2 < a_n
        m2 = delta.truncated_abs_moment(2.0, cutoff)
        m4 = delta.truncated_abs_moment(4.0, cutoff)
        v1.append(s.n * delta.tail_prob(cutoff))
        v2.append(s.n / s.s_n * (m4 - m2 * m2))
        v3.append(s.n / a_n * m2)
        c6_vals.append(s.n / a_n)
    grid = tuple(s.n for s in summaries)

    def path(name: str, values: list[float]) -> ConditionPath:
        return ConditionPath(
            name=name,
            n_grid=grid,
            values=tuple(values),
            target="to-zero",
            verdict=classify_trend(values, "to-zero", rule),
        )

    return PetrovReport(
        paths={
            "petrov-i": path("petrov-i", v1),
            "petrov-ii": path("petrov-ii", v2),
            "petrov-iii": path("petrov-iii", v3),
        },
        corollary=path("c6", c6_vals),
    )


def petrov_conditions(
    design: DesignSequence,
    spec: EVModelSpec,
    n_grid: Sequence[int],
    rule: TrendRule = TrendRule(),
) -> PetrovReport:
    return petrov_conditions_from_summaries(summary_path(design, n_grid), spec, rule)


# ---------------------------------------------------------------------------
# aggregated diagnostics
# ---------------------------------------------------------------------------


def diagnostics_report(
    design: DesignSequence,
    spec: EVModelSpec | None,
    n_grid: Sequence[int],
    conditions: Sequence[str] = CONDITION_IDS,
    include_hierarchy: bool = False,
    include_petrov: bool = False,
    rule: TrendRule = TrendRule(),
) -> dict:
    """Condition paths (plus optional hierarchy and Petrov sections) as one
    JSON-ready mapping."""
    for name in conditions:
        if name not in CONDITION_IDS:
            raise ConfigError(f"unknown condition id {name!r}; expected one of {CONDITION_IDS}")
    summaries = summary_path(design, n_grid)
    report: dict = {
        "design": design.to_dict(),
        "n_grid": [int(n) for n in n_grid],
        "conditions": {
            name: condition_path_from_summaries(name, summaries, rule).to_dict()
            for name in conditions
        },
    }
    if include_hierarchy:
        report["hierarchy"] = scaling_hierarchy(design, n_grid, rule).to_dict()
    if include_petrov:
        if spec is None:
            raise ConfigError("Petrov conditions need a model spec (the delta law)")
        report["petrov"] = petrov_conditions_from_summaries(summaries, spec, rule).to_dict()
    return report
