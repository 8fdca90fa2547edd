"""Model specification and sampling for the errors-in-variables pair

    eta_i = theta + beta * x_i + eps_i,      xi_i = x_i + delta_i,

with (eps_i, delta_i) i.i.d. across i, eps independent of delta, both
centered. Only the composite error nu = eps - beta * delta enters the
observable regression eta_i = theta + beta * xi_i + nu_i, and its variance
sigma2^2 + beta^2 * sigma1^2 drives every standardized statistic.

Error laws form a small symmetric catalog; each one is sampled by inverse
CDF from a single keyed uniform per index, so a draw is a pure function of
(seed, n, replicate, stream, i).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, stats
from scipy.special import erfc, gammainc, gammaln, ndtri, stdtr, stdtrit

from .design import DesignSequence
from .errors import ConfigError
from .rng import STREAM_DELTA, STREAM_EPS, uniforms

FAMILIES = (
    "normal",
    "uniform-centered",
    "laplace",
    "student-t",
    "scaled-rademacher",
)

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ErrorDistribution:
    """A centered, symmetric error law.

    ``scale`` is the family's natural scale parameter: the standard deviation
    for normal, the half-width for uniform-centered, the classical scale b
    for laplace (so the variance is 2 b^2), the multiplier of a standard t
    variate for student-t, and the magnitude of the two atoms for
    scaled-rademacher. ``scale = 0`` degenerates to a point mass at zero,
    which the noiseless test scenarios rely on. ``df`` applies to student-t
    only and must exceed 4 so that fourth moments exist.
    """

    family: str
    scale: float
    df: float | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown error family {self.family!r}; expected one of {FAMILIES}")
        scale = float(self.scale)
        if not np.isfinite(scale) or scale < 0:
            raise ConfigError("error-distribution scale must be finite and >= 0")
        object.__setattr__(self, "scale", scale)
        if self.family == "student-t":
            if self.df is None:
                raise ConfigError("student-t needs a df parameter")
            df = float(self.df)
            if not np.isfinite(df) or df <= 4:
                raise ConfigError("student-t df must be finite and > 4")
            object.__setattr__(self, "df", df)
        elif self.df is not None:
            raise ConfigError(f"family {self.family!r} takes no df parameter")

    # -- moments ------------------------------------------------------------

    def moment_exists(self, order: float) -> bool:
        if self.family == "student-t":
            return order < self.df  # type: ignore[operator]
        return True

    def abs_moment(self, order: float) -> float:
        """E |X|^order, closed form for every family in the catalog."""
        if order < 0:
            raise ConfigError("moment order must be >= 0")
        if not self.moment_exists(order):
            raise ConfigError(
                f"student-t with df={self.df} has no absolute moment of order {order}"
            )
        s, k = self.scale, float(order)
        if k == 0:
            return 1.0
        if s == 0.0:
            return 0.0
        if self.family == "normal":
            return s**k * 2 ** (k / 2) * math.gamma((k + 1) / 2) / _SQRT_PI
        if self.family == "uniform-centered":
            return s**k / (k + 1)
        if self.family == "laplace":
            return s**k * math.gamma(k + 1)
        if self.family == "student-t":
            nu = float(self.df)  # type: ignore[arg-type]
            log_m = (
                (k / 2) * math.log(nu)
                + gammaln((k + 1) / 2)
                + gammaln((nu - k) / 2)
                - gammaln(nu / 2)
                - math.log(_SQRT_PI)
            )
            return s**k * math.exp(log_m)
        return s**k  # scaled-rademacher

    def variance(self) -> float:
        return self.abs_moment(2.0)

    # -- sampling -----------------------------------------------------------

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF transform of uniforms in the open interval (0, 1)."""
        s = self.scale
        if s == 0.0:
            return np.zeros_like(u)
        if self.family == "normal":
            return s * ndtri(u)
        if self.family == "uniform-centered":
            return s * (2.0 * u - 1.0)
        if self.family == "laplace":
            q = u - 0.5
            return -s * np.sign(q) * np.log1p(-2.0 * np.abs(q))
        if self.family == "student-t":
            return s * stdtrit(self.df, u)
        return np.where(u < 0.5, -s, s)

    # -- support and truncated moments (condition diagnostics) ---------------

    def support_bound(self) -> float:
        """Smallest b with |X| <= b almost surely (inf if unbounded)."""
        if self.scale == 0.0:
            return 0.0
        if self.family in ("uniform-centered", "scaled-rademacher"):
            return self.scale
        return math.inf

    def tail_prob(self, cutoff: float) -> float:
        """P(|X| >= cutoff)."""
        s, c = self.scale, float(cutoff)
        if c <= 0:
            return 1.0
        if s == 0.0:
            return 0.0
        if self.family == "normal":
            return float(erfc(c / (s * math.sqrt(2.0))))
        if self.family == "uniform-centered":
            return max(0.0, 1.0 - c / s)
        if self.family == "laplace":
            return math.exp(-c / s)
        if self.family == "student-t":
            return float(2.0 * stdtr(self.df, -c / s))
        return 1.0 if s >= c else 0.0

    def truncated_abs_moment(self, order: float, cutoff: float) -> float:
        """E[|X|^order ; |X| < cutoff] (strict truncation)."""
        s, c, k = self.scale, float(cutoff), float(order)
        if c <= 0 or s == 0.0:
            return 0.0
        if self.family == "normal":
            m = c / s
            return (
                s**k
                * 2 ** (k / 2)
                * math.gamma((k + 1) / 2)
                / _SQRT_PI
                * float(gammainc((k + 1) / 2, m * m / 2))
            )
        if self.family == "uniform-centered":
            m = min(c, s)
            return m ** (k + 1) / (s * (k + 1))
        if self.family == "laplace":
            return s**k * math.gamma(k + 1) * float(gammainc(k + 1, c / s))
        if self.family == "student-t":
            df = self.df
            val, _ = integrate.quad(
                lambda t: 2.0 * t**k * stats.t.pdf(t, df), 0.0, c / s, epsabs=1e-12
            )
            return s**k * val
        return s**k if s < c else 0.0

    def tail_second_moment(self, cutoff: float) -> float:
        """E[X^2 ; |X| > cutoff], computed directly (no cancellation)."""
        s, c = self.scale, float(cutoff)
        if s == 0.0:
            return 0.0
        if c <= 0:
            return self.variance()
        if self.family == "normal":
            m = c / s
            phi = math.exp(-m * m / 2) / math.sqrt(2 * math.pi)
            return s * s * (float(erfc(m / math.sqrt(2.0))) + 2.0 * m * phi)
        if self.family == "uniform-centered":
            if c >= s:
                return 0.0
            return (s**3 - c**3) / (3.0 * s)
        if self.family == "laplace":
            return math.exp(-c / s) * (c * c + 2 * s * c + 2 * s * s)
        if self.family == "student-t":
            df = self.df
            val, _ = integrate.quad(
                lambda t: 2.0 * t * t * stats.t.pdf(t, df),
                c / s,
                math.inf,
                epsabs=1e-13,
            )
            return s * s * val
        return s * s if s > c else 0.0

    def to_dict(self) -> dict:
        out = {"family": self.family, "scale": self.scale}
        if self.df is not None:
            out["df"] = self.df
        return out


def moment(dist: ErrorDistribution, order: float, absolute: bool = False) -> float:
    """Moment of the error law: E|X|^order, or the raw E X^order.

    Raw moments are defined here for integer orders only; odd ones vanish by
    symmetry of every catalog family.
    """
    if order < 1:
        raise ConfigError("moment order must be >= 1")
    if absolute:
        return dist.abs_moment(order)
    if float(order) != int(order):
        raise ConfigError("raw (signed) moments need an integer order")
    if int(order) % 2 == 1:
        if not dist.moment_exists(order):
            raise ConfigError(f"moment of order {order} does not exist for {dist.family}")
        return 0.0
    return dist.abs_moment(order)


@dataclass(frozen=True)
class EVModelSpec:
    """True parameters plus the two error laws.

    alpha is the extra moment order required by the slope CLT: both laws
    must have finite absolute moments of order 2 + alpha. The same alpha is
    used for both laws.
    """

    theta: float
    beta: float
    eps_dist: ErrorDistribution
    delta_dist: ErrorDistribution
    alpha: float = 1.0

    def __post_init__(self) -> None:
        for name in ("theta", "beta", "alpha"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ConfigError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.alpha <= 0:
            raise ConfigError("alpha must be > 0")
        for dist in (self.eps_dist, self.delta_dist):
            if not dist.moment_exists(2.0 + self.alpha):
                raise ConfigError(
                    f"{dist.family} lacks a finite absolute moment of order {2 + self.alpha}"
                )

    def nu_variance(self) -> float:
        return self.eps_dist.variance() + self.beta**2 * self.delta_dist.variance()

    def nu_bound(self) -> float:
        """Almost-sure bound on |eps - beta * delta| (inf if unbounded)."""
        return self.eps_dist.support_bound() + abs(self.beta) * self.delta_dist.support_bound()

    def is_degenerate(self) -> bool:
        return self.nu_variance() == 0.0

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "beta": self.beta,
            "eps": self.eps_dist.to_dict(),
            "delta": self.delta_dist.to_dict(),
            "alpha": self.alpha,
        }


def nu_variance(spec: EVModelSpec) -> float:
    """Var(eps - beta * delta) under independence of the two error streams."""
    return spec.nu_variance()


@dataclass(frozen=True)
class EVSample:
    """One realized dataset; latents are kept only when identity-testing."""

    n: int
    xi: np.ndarray
    eta: np.ndarray
    design: DesignSequence
    latent_eps: np.ndarray | None = None
    latent_delta: np.ndarray | None = None

    @property
    def has_latents(self) -> bool:
        return self.latent_eps is not None and self.latent_delta is not None


def draw_sample(
    spec: EVModelSpec,
    design: DesignSequence,
    n: int,
    seed: int,
    replicate: int = 0,
    retain_latents: bool = False,
) -> EVSample:
    """Draw one replicate; a pure function of (spec, design, n, seed, replicate)."""
    if n < 2:
        raise ConfigError(f"sample size must be >= 2, got {n}")
    x = design.generate(n)
    eps = spec.eps_dist.sample(uniforms((seed, n, replicate, STREAM_EPS), n))
    delta = spec.delta_dist.sample(uniforms((seed, n, replicate, STREAM_DELTA), n))
    xi = x + delta
    eta = spec.theta + spec.beta * x + eps
    return EVSample(
        n=n,
        xi=xi,
        eta=eta,
        design=design,
        latent_eps=eps if retain_latents else None,
        latent_delta=delta if retain_latents else None,
    )


def export_sample_csv(sample: EVSample, path: str | Path) -> None:
    """Write (i, xi, eta[, eps, delta]) rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if sample.has_latents:
            writer.writerow(["i", "xi", "eta", "eps", "delta"])
            for i in range(sample.n):
                writer.writerow(
                    [
                        i + 1,
                        repr(float(sample.xi[i])),
                        repr(float(sample.eta[i])),
                        repr(float(sample.latent_eps[i])),
                        repr(float(sample.latent_delta[i])),
                    ]
                )
        else:
            writer.writerow(["i", "xi", "eta"])
            for i in range(sample.n):
                writer.writerow([i + 1, repr(float(sample.xi[i])), repr(float(sample.eta[i]))])
