"""Hot numeric kernels: replicate-batched LS fits, error-decomposition sums,
and compensated design summaries.

Every kernel exists twice: a numba ``@njit`` version (``*_numba``) and a
pure-numpy reference (``*_numpy``). The public names dispatch on the backend
resolved by :mod:`evclt._backend`. All sums are two-pass (mean first, then
centered products); the numba path additionally uses Neumaier compensation
because design dispersions span many orders of magnitude.
"""

from __future__ import annotations

import numpy as np

from ._backend import BACKEND

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via EVCLT_BACKEND=numpy
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def _as_f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _comp_sum(values):
    # Neumaier variant of Kahan summation.
    total = 0.0
    comp = 0.0
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


@njit(cache=True, nogil=True)
def _summary_stats_numba(x):
    n = x.shape[0]
    mean = _comp_sum(x) / n
    s = 0.0
    comp = 0.0
    max_dev = 0.0
    for i in range(n):
        d = x[i] - mean
        v = d * d
        t = s + v
        if abs(s) >= v:
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        if abs(d) > max_dev:
            max_dev = abs(d)
    return mean, s + comp, max_dev


@njit(cache=True, nogil=True)
def _fit_batch_numba(xi, eta):
    nrep, n = xi.shape
    beta = np.empty(nrep)
    theta = np.empty(nrep)
    sxx = np.empty(nrep)
    rvar = np.empty(nrep)
    for k in range(nrep):
        mx = _comp_sum(xi[k]) / n
        my = _comp_sum(eta[k]) / n
        sxx_k = 0.0
        sxy_k = 0.0
        for i in range(n):
            dx = xi[k, i] - mx
            sxx_k += dx * dx
            sxy_k += dx * (eta[k, i] - my)
        if sxx_k > 0.0:
            b = sxy_k / sxx_k
            rss = 0.0
            for i in range(n):
                resid = (eta[k, i] - my) - b * (xi[k, i] - mx)
                rss += resid * resid
            beta[k] = b
            theta[k] = my - b * mx
            rvar[k] = rss / n
        else:
            beta[k] = np.nan
            theta[k] = np.nan
            rvar[k] = np.nan
        sxx[k] = sxx_k
    return beta, theta, sxx, rvar


@njit(cache=True, nogil=True)
def _decompose_batch_numba(x, xi, eps, delta):
    nrep, n = xi.shape
    x_mean = _comp_sum(x) / n
    s_xi_eps = np.empty(nrep)
    s_x_delta = np.empty(nrep)
    s_x_eps = np.empty(nrep)
    s_delta_sq = np.empty(nrep)
    s_delta_eps = np.empty(nrep)
    sxx_obs = np.empty(nrep)
    for k in range(nrep):
        mxi = _comp_sum(xi[k]) / n
        mdelta = _comp_sum(delta[k]) / n
        a1 = 0.0
        a2 = 0.0
        a3 = 0.0
        a4 = 0.0
        a5 = 0.0
        a6 = 0.0
        for i in range(n):
            dx = x[i] - x_mean
            dxi = xi[k, i] - mxi
            dd = delta[k, i] - mdelta
            e = eps[k, i]
            a1 += dxi * e
            a2 += dx * delta[k, i]
            a3 += dx * e
            a4 += dd * dd
            a5 += dd * e
            a6 += dxi * dxi
        s_xi_eps[k] = a1
        s_x_delta[k] = a2
        s_x_eps[k] = a3
        s_delta_sq[k] = a4
        s_delta_eps[k] = a5
        sxx_obs[k] = a6
    return s_xi_eps, s_x_delta, s_x_eps, s_delta_sq, s_delta_eps, sxx_obs


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------


def _summary_stats_numpy(x):
    mean = float(np.mean(x))
    dev = x - mean
    return mean, float(np.sum(dev * dev)), float(np.max(np.abs(dev)))


def _fit_batch_numpy(xi, eta):
    n = xi.shape[1]
    dxi = xi - xi.mean(axis=1, keepdims=True)
    deta = eta - eta.mean(axis=1, keepdims=True)
    sxx = np.sum(dxi * dxi, axis=1)
    sxy = np.sum(dxi * deta, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(sxx > 0.0, sxy / np.where(sxx > 0.0, sxx, 1.0), np.nan)
    theta = eta.mean(axis=1) - beta * xi.mean(axis=1)
    resid = deta - beta[:, None] * dxi
    rvar = np.sum(resid * resid, axis=1) / n
    return beta, theta, sxx, rvar


def _decompose_batch_numpy(x, xi, eps, delta):
    xdev = x - np.mean(x)
    dxi = xi - xi.mean(axis=1, keepdims=True)
    ddelta = delta - delta.mean(axis=1, keepdims=True)
    s_xi_eps = np.sum(dxi * eps, axis=1)
    s_x_delta = np.sum(xdev[None, :] * delta, axis=1)
    s_x_eps = np.sum(xdev[None, :] * eps, axis=1)
    s_delta_sq = np.sum(ddelta * ddelta, axis=1)
    s_delta_eps = np.sum(ddelta * eps, axis=1)
    sxx_obs = np.sum(dxi * dxi, axis=1)
    return s_xi_eps, s_x_delta, s_x_eps, s_delta_sq, s_delta_eps, sxx_obs


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_IMPLS = {
    "numpy": (_summary_stats_numpy, _fit_batch_numpy, _decompose_batch_numpy),
}
if NUMBA_AVAILABLE:
    _IMPLS["numba"] = (
        _summary_stats_numba,
        _fit_batch_numba,
        _decompose_batch_numba,
    )

_summary_impl, _fit_impl, _decompose_impl = _IMPLS[BACKEND]


def summary_stats(x) -> tuple[float, float, float]:
    """(mean, sum of squared deviations, max absolute deviation) of ``x``."""
    out = _summary_impl(_as_f64(x))
    return float(out[0]), float(out[1]), float(out[2])


def fit_batch(xi, eta):
    """Row-wise simple LS fits.

    ``xi`` and ``eta`` are (replicates, n) arrays; returns per-row arrays
    (slope, intercept, centered regressor sum of squares, mean squared
    residual with divisor n). Rows with a constant regressor yield
    non-finite slopes; the caller decides how to treat them.
    """
    return _fit_impl(_as_f64(xi), _as_f64(eta))


def decompose_batch(x, xi, eps, delta):
    """Row-wise raw sums feeding the slope-error decomposition.

    Returns, per row: sum (xi_i - xi_bar) eps_i, sum (x_i - x_bar) delta_i,
    sum (x_i - x_bar) eps_i, sum (delta_i - delta_bar)^2,
    sum (delta_i - delta_bar) eps_i, sum (xi_i - xi_bar)^2.
    """
    return _decompose_impl(_as_f64(x), _as_f64(xi), _as_f64(eps), _as_f64(delta))


# Explicit per-backend entry points (tests and benchmarks).
summary_stats_numpy = _summary_stats_numpy
fit_batch_numpy = _fit_batch_numpy
decompose_batch_numpy = _decompose_batch_numpy
if NUMBA_AVAILABLE:
    summary_stats_numba = _summary_stats_numba
    fit_batch_numba = _fit_batch_numba
    decompose_batch_numba = _decompose_batch_numba
