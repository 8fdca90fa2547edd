"""Deterministic design sequences and their dispersion summaries.

The regressors x_1, x_2, ... are fixed constants chosen by a generator; the
dispersion S_n = sum (x_i - x_bar_n)^2 of a design is what separates the
regimes where the slope estimator behaves well from the ones where it does
not. The catalog deliberately covers one generator per regime:

==============  ======================  =======================================
kind            formula (i >= 1)        regime it exercises
==============  ======================  =======================================
linear          slope * i               S_n ~ n^3: every condition holds
power           i ** exponent           steeper growth, hierarchy ratios shrink
alternating     (-1)^i * scale * i      bounded mean, intercept CLT condition
geometric       base ** i               one point dominates: max-deviation
                                        condition fails while n/sqrt(S_n) -> 0
bounded         scale * sin(i)          S_n ~ n: dispersion too small, no
                                        consistency
gaussian-iid    sd * N(0,1) draws       S_n/n stabilizes: the classic
                                        attenuation counterexample
constant        value                   degenerate, S_n = 0
==============  ======================  =======================================

Only gaussian-iid consumes the seed; it is drawn from a counter-based stream
keyed by (seed, design stream id) so the prefix property holds despite the
randomness.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from . import kernels
from .errors import ConfigError
from .rng import STREAM_DESIGN, uniforms

DESIGN_KINDS = (
    "linear",
    "power",
    "alternating",
    "geometric",
    "bounded",
    "gaussian-iid",
    "constant",
)

_DEFAULT_PARAMS: dict[str, dict[str, float]] = {
    "linear": {"slope": 1.0},
    "power": {"exponent": 2.0},
    "alternating": {"scale": 1.0},
    "geometric": {"base": 2.0},
    "bounded": {"scale": 1.0},
    "gaussian-iid": {"sd": 1.0},
    "constant": {"value": 1.0},
}


@dataclass(frozen=True)
class DesignSequence:
    """A generator tag plus its parameters; values come from :meth:`generate`."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in DESIGN_KINDS:
            raise ConfigError(
                f"unknown design kind {self.kind!r}; expected one of {DESIGN_KINDS}"
            )
        merged = dict(_DEFAULT_PARAMS[self.kind])
        for key, value in dict(self.params).items():
            if key not in merged:
                raise ConfigError(f"design kind {self.kind!r} has no parameter {key!r}")
            value = float(value)
            if not np.isfinite(value):
                raise ConfigError(f"design parameter {key!r} must be finite")
            merged[key] = value
        if self.kind == "power" and merged["exponent"] <= 0:
            raise ConfigError("power design needs exponent > 0")
        if self.kind == "geometric" and merged["base"] <= 1:
            raise ConfigError("geometric design needs base > 1")
        if self.kind == "gaussian-iid" and merged["sd"] < 0:
            raise ConfigError("gaussian-iid design needs sd >= 0")
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "seed", int(self.seed))

    def generate(self, n: int) -> np.ndarray:
        """First n values of the sequence (1-based index formulas)."""
        if n < 2:
            raise ConfigError(f"design length must be >= 2, got {n}")
        i = np.arange(1, n + 1, dtype=np.float64)
        p = self.params
        if self.kind == "linear":
            return p["slope"] * i
        if self.kind == "power":
            return i ** p["exponent"]
        if self.kind == "alternating":
            sign = np.where(np.arange(1, n + 1) % 2 == 0, 1.0, -1.0)
            return sign * p["scale"] * i
        if self.kind == "geometric":
            return p["base"] ** i
        if self.kind == "bounded":
            return p["scale"] * np.sin(i)
        if self.kind == "gaussian-iid":
            u = uniforms((self.seed, STREAM_DESIGN), n)
            return p["sd"] * ndtri(u)
        return np.full(n, p["value"])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "seed": self.seed}


@dataclass(frozen=True)
class DesignSummary:
    """Prefix statistics that every asymptotic condition is computed from."""

    n: int
    mean: float
    s_n: float
    max_dev: float
    s_star: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "s_n": self.s_n,
            "max_dev": self.max_dev,
            "s_star": self.s_star,
        }


def generate_design(kind: str, params: Mapping[str, float] | None, seed: int, n: int) -> np.ndarray:
    """Convenience wrapper: build the sequence object and generate n values."""
    return DesignSequence(kind, params or {}, seed).generate(n)


def summarize(x: Sequence[float] | np.ndarray) -> DesignSummary:
    """Two-pass mean, dispersion S_n, max deviation, and S_n* = max(n, S_n)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise ConfigError("summarize needs a 1-d sequence of length >= 2")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("summarize needs finite values (geometric designs overflow for large n)")
    mean, s_n, max_dev = kernels.summary_stats(arr)
    n = arr.shape[0]
    return DesignSummary(n=n, mean=mean, s_n=s_n, max_dev=max_dev, s_star=max(float(n), s_n))


def summary_path(design: DesignSequence, n_grid: Sequence[int]) -> list[DesignSummary]:
    """Summaries of the design prefixes at each grid point."""
    grid = [int(n) for n in n_grid]
    if not grid or grid[0] < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("n_grid must be strictly increasing with min >= 2")
    x = design.generate(grid[-1])
    return [summarize(x[:n]) for n in grid]


def export_design_csv(design: DesignSequence, n: int, path: str | Path) -> None:
    """Write (index, x) rows for audit."""
    x = design.generate(n)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "x"])
        for i, value in enumerate(x, start=1):
            writer.writerow([i, repr(float(value))])
