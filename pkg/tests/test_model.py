import math

import numpy as np
import pytest
from scipy import integrate, stats

from evclt.design import DesignSequence
from evclt.errors import ConfigError
from evclt.model import (
    ErrorDistribution,
    EVModelSpec,
    draw_sample,
    export_sample_csv,
    moment,
    nu_variance,
)
from evclt.rng import STREAM_EPS, uniforms


# --- sampling ----------------------------------------------------------------


def test_noiseless_sample_is_exact_line(noiseless_spec, linear_design):
    sample = draw_sample(noiseless_spec, linear_design, 4, seed=1)
    assert sample.eta.tolist() == [5.0, 8.0, 11.0, 14.0]
    assert sample.xi.tolist() == [1.0, 2.0, 3.0, 4.0]


def test_observable_regression_identity(standard_spec, linear_design):
    sample = draw_sample(standard_spec, linear_design, 200, seed=5, retain_latents=True)
    nu = sample.latent_eps - standard_spec.beta * sample.latent_delta
    gap = sample.eta - standard_spec.theta - standard_spec.beta * sample.xi - nu
    assert np.max(np.abs(gap)) <= 1e-12
    # latent structural equations hold exactly
    x = linear_design.generate(200)
    assert np.array_equal(sample.xi, x + sample.latent_delta)
    assert np.array_equal(sample.eta, standard_spec.theta + standard_spec.beta * x + sample.latent_eps)


def test_draw_determinism_and_replicate_separation(standard_spec, linear_design):
    a = draw_sample(standard_spec, linear_design, 50, seed=9, replicate=3, retain_latents=True)
    b = draw_sample(standard_spec, linear_design, 50, seed=9, replicate=3, retain_latents=True)
    assert np.array_equal(a.xi, b.xi) and np.array_equal(a.eta, b.eta)
    c = draw_sample(standard_spec, linear_design, 50, seed=9, replicate=4)
    assert not np.array_equal(a.xi, c.xi)


def test_draw_rejects_tiny_n(standard_spec, linear_design):
    with pytest.raises(ConfigError):
        draw_sample(standard_spec, linear_design, 1, seed=0)


@pytest.mark.parametrize(
    "dist,ref",
    [
        (ErrorDistribution("normal", 1.3), stats.norm(scale=1.3)),
        (ErrorDistribution("uniform-centered", 2.0), stats.uniform(loc=-2.0, scale=4.0)),
        (ErrorDistribution("laplace", 0.7), stats.laplace(scale=0.7)),
        (ErrorDistribution("student-t", 1.1, df=6.0), stats.t(df=6.0, scale=1.1)),
    ],
    ids=lambda v: getattr(v, "family", "ref"),
)
def test_inverse_cdf_sampling_matches_reference_law(dist, ref):
    u = uniforms((2024, STREAM_EPS), 20000)
    draws = dist.sample(u)
    ks = stats.kstest(draws, ref.cdf).statistic
    assert ks < 0.015


def test_rademacher_sampling_hits_both_atoms():
    dist = ErrorDistribution("scaled-rademacher", 2.5)
    draws = dist.sample(uniforms((7, STREAM_EPS), 10000))
    values = set(np.unique(draws).tolist())
    assert values == {-2.5, 2.5}
    assert abs(np.mean(draws)) < 4 * 2.5 / math.sqrt(10000)


# --- moments -----------------------------------------------------------------


def test_normal_second_moment_is_variance():
    assert moment(ErrorDistribution("normal", 2.0), 2, absolute=True) == pytest.approx(4.0, rel=1e-14)


def test_uniform_second_moment_closed_form():
    # integral of x^2 / (2a) over [-a, a] = a^2 / 3
    a = 1.7
    assert moment(ErrorDistribution("uniform-centered", a), 2, absolute=True) == pytest.approx(
        a * a / 3.0, rel=1e-14
    )


def test_normal_third_absolute_moment_with_quadrature_oracle():
    got = moment(ErrorDistribution("normal", 1.0), 3, absolute=True)
    assert got == pytest.approx(2.0 * math.sqrt(2.0 / math.pi), rel=1e-13)
    quad, _ = integrate.quad(lambda x: 2 * x**3 * stats.norm.pdf(x), 0, np.inf, epsabs=1e-12)
    assert got == pytest.approx(quad, rel=1e-9)


@pytest.mark.parametrize(
    "dist,order,expected",
    [
        (ErrorDistribution("laplace", 0.5), 2, 2 * 0.25),
        (ErrorDistribution("student-t", 2.0, df=5.0), 2, 4.0 * 5.0 / 3.0),
        (ErrorDistribution("scaled-rademacher", 3.0), 4, 81.0),
    ],
)
def test_family_moments(dist, order, expected):
    assert moment(dist, order, absolute=True) == pytest.approx(expected, rel=1e-12)


def test_moment_quadrature_cross_check_all_families():
    cases = [
        (ErrorDistribution("laplace", 0.8), stats.laplace(scale=0.8), 3.0),
        (ErrorDistribution("uniform-centered", 1.2), stats.uniform(loc=-1.2, scale=2.4), 2.5),
        (ErrorDistribution("student-t", 1.0, df=7.0), stats.t(df=7.0), 3.0),
    ]
    for dist, ref, order in cases:
        quad, _ = integrate.quad(
            lambda x: 2 * x**order * ref.pdf(x), 0, ref.support()[1], epsabs=1e-11
        )
        assert dist.abs_moment(order) == pytest.approx(quad, rel=1e-9)


def test_raw_odd_moments_vanish():
    assert moment(ErrorDistribution("laplace", 1.0), 3, absolute=False) == 0.0
    with pytest.raises(ConfigError):
        moment(ErrorDistribution("normal", 1.0), 2.5, absolute=False)


def test_nonexistent_student_t_moment_rejected():
    dist = ErrorDistribution("student-t", 1.0, df=4.5)
    with pytest.raises(ConfigError):
        dist.abs_moment(4.5)
    with pytest.raises(ConfigError):
        # alpha=3 needs order-5 moments, df=4.5 cannot provide them
        EVModelSpec(0.0, 1.0, ErrorDistribution("normal", 1.0), dist, alpha=3.0)


def test_distribution_validation():
    with pytest.raises(ConfigError):
        ErrorDistribution("normal", -1.0)
    with pytest.raises(ConfigError):
        ErrorDistribution("student-t", 1.0)  # df missing
    with pytest.raises(ConfigError):
        ErrorDistribution("student-t", 1.0, df=4.0)
    with pytest.raises(ConfigError):
        ErrorDistribution("normal", 1.0, df=5.0)
    with pytest.raises(ConfigError):
        ErrorDistribution("cauchy", 1.0)


# --- composite error variance --------------------------------------------------


def test_nu_variance_no_delta_contribution():
    spec = EVModelSpec(0.0, 0.0, ErrorDistribution("normal", 1.5), ErrorDistribution("normal", 1.0))
    assert nu_variance(spec) == pytest.approx(2.25, rel=1e-14)


def test_nu_variance_independence_formula_with_mc_oracle(standard_spec):
    assert nu_variance(standard_spec) == pytest.approx(5.0, rel=1e-14)
    n = 1_000_000
    eps = standard_spec.eps_dist.sample(uniforms((11, 1), n))
    delta = standard_spec.delta_dist.sample(uniforms((11, 2), n))
    nu = eps - standard_spec.beta * delta
    est = np.var(nu)
    se = np.std(nu * nu, ddof=1) / math.sqrt(n)
    assert abs(est - 5.0) <= 3 * se


def test_nu_variance_pure_measurement_error():
    spec = EVModelSpec(0.0, 1.0, ErrorDistribution("normal", 0.0), ErrorDistribution("normal", 2.0))
    assert nu_variance(spec) == pytest.approx(4.0, rel=1e-14)


# --- empirical stream invariants ----------------------------------------------


@pytest.mark.parametrize(
    "dist",
    [
        ErrorDistribution("normal", 1.0),
        ErrorDistribution("uniform-centered", 2.0),
        ErrorDistribution("laplace", 0.5),
        ErrorDistribution("student-t", 1.0, df=6.0),
        ErrorDistribution("scaled-rademacher", 1.5),
    ],
    ids=lambda d: d.family,
)
def test_stream_mean_within_tolerance(dist):
    n = 100_000
    draws = dist.sample(uniforms((31, 4), n))
    assert abs(np.mean(draws)) <= 4 * dist.scale / math.sqrt(n)


def test_nu_empirical_variance_within_five_se(standard_spec):
    n = 100_000
    sample = draw_sample(standard_spec, DesignSequence("linear"), n, seed=17, retain_latents=True)
    nu = sample.latent_eps - standard_spec.beta * sample.latent_delta
    se = np.std(nu * nu, ddof=1) / math.sqrt(n)
    assert abs(np.var(nu) - nu_variance(standard_spec)) <= 5 * se


def test_replicate_streams_uncorrelated(standard_spec, linear_design):
    n = 100_000
    a = draw_sample(standard_spec, linear_design, n, seed=3, replicate=0, retain_latents=True)
    b = draw_sample(standard_spec, linear_design, n, seed=3, replicate=1, retain_latents=True)
    for u, v in ((a.latent_eps, b.latent_eps), (a.latent_delta, b.latent_delta)):
        rho = np.corrcoef(u, v)[0, 1]
        assert abs(rho) < 5 / math.sqrt(n)


# --- truncated-moment helpers ---------------------------------------------------


@pytest.mark.parametrize(
    "dist",
    [
        ErrorDistribution("normal", 1.3),
        ErrorDistribution("uniform-centered", 2.0),
        ErrorDistribution("laplace", 0.7),
        ErrorDistribution("student-t", 1.1, df=6.0),
    ],
    ids=lambda d: d.family,
)
@pytest.mark.parametrize("cutoff", [0.2, 1.0, 3.0, 10.0])
def test_truncation_splits_the_variance(dist, cutoff):
    total = dist.truncated_abs_moment(2.0, cutoff) + dist.tail_second_moment(cutoff)
    assert total == pytest.approx(dist.variance(), rel=1e-9)


def test_tail_probability_against_reference():
    dist = ErrorDistribution("normal", 2.0)
    assert dist.tail_prob(3.0) == pytest.approx(2 * stats.norm(scale=2.0).sf(3.0), rel=1e-12)
    assert ErrorDistribution("laplace", 1.0).tail_prob(2.0) == pytest.approx(
        2 * stats.laplace.sf(2.0), rel=1e-12
    )


def test_rademacher_truncation_strictness():
    dist = ErrorDistribution("scaled-rademacher", 1.0)
    assert dist.truncated_abs_moment(2.0, 1.0) == 0.0  # strict |X| < cutoff
    assert dist.truncated_abs_moment(2.0, 1.0 + 1e-9) == 1.0
    assert dist.tail_second_moment(1.0) == 0.0  # strict |X| > cutoff
    assert dist.tail_prob(1.0) == 1.0  # |X| >= cutoff


def test_degenerate_scale_zero():
    dist = ErrorDistribution("normal", 0.0)
    assert dist.variance() == 0.0
    assert dist.support_bound() == 0.0
    assert np.array_equal(dist.sample(np.array([0.25, 0.75])), np.zeros(2))
    assert dist.tail_prob(0.5) == 0.0


# --- export ---------------------------------------------------------------------


def test_export_sample_csv(tmp_path, noiseless_spec, linear_design):
    sample = draw_sample(noiseless_spec, linear_design, 3, seed=0, retain_latents=True)
    out = tmp_path / "sample.csv"
    export_sample_csv(sample, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "i,xi,eta,eps,delta"
    assert len(lines) == 4
