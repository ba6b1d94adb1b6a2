"""Closed-form asymptotic approximations and fits of the two implicit rate constants.

Every evaluator accepts scalars or numpy arrays for its free arguments and returns an
:class:`ApproxValue`.  ``regime_ok`` flags arguments within six standard deviations of
the Gaussian centre; outside that window values are still computed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact_oracle import m_tau_marginal, tau_marginals
from .ladder import LadderTable, q_constant
from .walk_model import ExcursionModel, IncrementLaw

REGIME_SIGMAS = 6.0
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ApproxValue:
    value: float | np.ndarray
    regime_ok: bool | np.ndarray
    formula_id: str


def _pack(value, ok, formula_id: str) -> ApproxValue:
    value = np.asarray(value, dtype=float)
    ok = np.asarray(ok, dtype=bool)
    if value.ndim == 0:
        return ApproxValue(float(value), bool(ok), formula_id)
    return ApproxValue(value, ok, formula_id)


def _gauss(dev, var):
    return np.exp(-np.square(dev) / (2.0 * var))


def _ladder_lookup(table_fn, args) -> np.ndarray:
    return np.vectorize(table_fn, otypes=[float])(args)


# ---------------------------------------------------------------------------
# excursion of the negative-drift walk
# ---------------------------------------------------------------------------


def excursion_approx(model: ExcursionModel, x, k, n, q: float | None = None) -> ApproxValue:
    """Approximation of P(M_tau = x, theta_tau = k, tau = n + 1), requires 1 <= k < n."""
    prof = model.profile
    Q = q_constant(model).value if q is None else q
    x, k, n = (np.asarray(v, dtype=float) for v in (x, k, n))
    j = n - k
    with np.errstate(divide="ignore", invalid="ignore"):
        up = (x - k * prof.a_hat) ** 2 / (2.0 * prof.sigma2_hat * k)
        down = (x - prof.a * j) ** 2 / (2.0 * prof.sigma2 * j)
        val = np.exp(-prof.lam * x) * Q / (TWO_PI * np.sqrt(k * j)) * np.exp(-up - down)
    val = np.where((k >= 1) & (j >= 1), val, 0.0)
    sd_k = np.sqrt(prof.sigma2_hat * x / prof.a_hat**3)
    sd_j = np.sqrt(prof.sigma2 * x / prof.a**3)
    ok = (np.abs(k - x / prof.a_hat) <= REGIME_SIGMAS * sd_k) & (np.abs(j - x / prof.a) <= REGIME_SIGMAS * sd_j)
    return _pack(val, ok & (k >= 1) & (j >= 1), "excursion")


def theta_local_approx(model: ExcursionModel, x, k) -> ApproxValue:
    """Gaussian approximation of P(theta_tau = k | M_tau = x)."""
    p = model.profile
    x, k = np.asarray(x, float), np.asarray(k, float)
    var = p.sigma2_hat * x / p.a_hat**3
    val = _gauss(k - x / p.a_hat, var) / np.sqrt(TWO_PI * var)
    return _pack(val, np.abs(k - x / p.a_hat) <= REGIME_SIGMAS * np.sqrt(var), "theta-local")


def theta_tau_local_approx(model: ExcursionModel, x, j) -> ApproxValue:
    """Gaussian approximation of P(tau - theta_tau = j | M_tau = x)."""
    p = model.profile
    x, j = np.asarray(x, float), np.asarray(j, float)
    var = p.sigma2 * x / p.a**3
    val = _gauss(j - x / p.a, var) / np.sqrt(TWO_PI * var)
    return _pack(val, np.abs(j - x / p.a) <= REGIME_SIGMAS * np.sqrt(var), "theta-tau-local")


def tau_local_approx(model: ExcursionModel, x, n) -> ApproxValue:
    """Gaussian approximation of P(tau = n | M_tau = x), mean A x and variance Sigma^2 x."""
    p = model.profile
    x, n = np.asarray(x, float), np.asarray(n, float)
    var = p.Sigma2 * x
    val = _gauss(n - p.A * x, var) / np.sqrt(TWO_PI * var)
    return _pack(val, np.abs(n - p.A * x) <= REGIME_SIGMAS * np.sqrt(var), "tau-local")


# ---------------------------------------------------------------------------
# positive-drift walks
# ---------------------------------------------------------------------------


def _clt(law: IncrementLaw, n, x):
    a, s2 = law.mean, law.variance
    n, x = np.asarray(n, float), np.asarray(x, float)
    dens = _gauss(x - n * a, s2 * n) / np.sqrt(TWO_PI * s2 * n)
    ok = np.abs(x - n * a) <= REGIME_SIGMAS * np.sqrt(s2 * n)
    return dens, ok


def llt_approx(law: IncrementLaw, ladder: LadderTable, z: int, n, x) -> ApproxValue:
    """Approximation of P(S_n = x, tau_z > n)."""
    dens, ok = _clt(law, n, x)
    return _pack(ladder.survival(z) * dens, ok, "llt")


def max_end_approx(law: IncrementLaw, ladder: LadderTable, n, x, r) -> ApproxValue:
    """Approximation of P(M_n = x, S_n = x - r)."""
    dens, ok = _clt(law, n, x)
    V = _ladder_lookup(ladder.renewal, r)
    return _pack(ladder.survival(0) * V * dens, ok, "max-end")


def max_approx(law: IncrementLaw, n, x) -> ApproxValue:
    """Approximation of P(M_n = x); the variance sits in the exponent."""
    dens, ok = _clt(law, n, x)
    return _pack(dens, ok, "max")


def snmax_approx(law: IncrementLaw, ladder: LadderTable, n, x, y: int, z: int) -> ApproxValue:
    """Approximation of P(S_n = x, M_{n-1} < x + y, tau_z > n)."""
    dens, ok = _clt(law, n, x)
    return _pack(ladder.survival(y) * ladder.survival(z) * dens, ok, "snmax")


def r_stationary(ladder: LadderTable, r):
    """Limit law V(r) / E tau_+ of the gap between running maximum and position."""
    V = _ladder_lookup(ladder.renewal, r)
    out = V / ladder.e_tau_plus
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# rates and fitted constants
# ---------------------------------------------------------------------------


def iglehart_rate(model: ExcursionModel, x):
    return np.exp(-model.profile.lam * np.asarray(x, float))


def doney_rate(model: ExcursionModel, n):
    n = np.asarray(n, float)
    return n**-1.5 * model.profile.phi_mu**n


@dataclass(frozen=True)
class ConstantFit:
    value: float
    spread: float  # (max - min) / value over the averaged points
    grid: np.ndarray
    ratios: np.ndarray


def _top_half_fit(grid, ratios) -> ConstantFit:
    grid = np.asarray(grid)
    ratios = np.asarray(ratios, float)
    top = ratios[len(ratios) // 2 :]
    value = float(top.mean())
    return ConstantFit(value, float((top.max() - top.min()) / value), grid, ratios)


def fit_c0(model: ExcursionModel, x_grid) -> ConstantFit:
    """c0 from exp(lambda x) P(M_tau = x), averaged over the upper half of the grid."""
    x_grid = np.sort(np.asarray(x_grid, int))
    ratios = [m_tau_marginal(model, int(x)) / float(iglehart_rate(model, x)) for x in x_grid]
    return _top_half_fit(x_grid, ratios)


def fit_c1(model: ExcursionModel, n_grid) -> ConstantFit:
    """c1 from n^{3/2} phi(mu)^{-n} P(tau = n), averaged over the upper half of the grid."""
    n_grid = np.sort(np.asarray(n_grid, int))
    tau = tau_marginals(model, int(n_grid.max()))
    ratios = tau[n_grid] / doney_rate(model, n_grid)
    return _top_half_fit(n_grid, ratios)


def _slope(u, v) -> float:
    return float(np.polyfit(np.asarray(u, float), np.asarray(v, float), 1)[0])


def tau_log_slope(model: ExcursionModel, n_lo: int, n_hi: int) -> float:
    """Least-squares slope in n of log(n^{3/2} P(tau = n)); tends to log phi(mu)."""
    ns = np.arange(n_lo, n_hi + 1)
    tau = tau_marginals(model, n_hi)[ns]
    return _slope(ns, np.log(tau) + 1.5 * np.log(ns))


def max_log_slope(model: ExcursionModel, x_lo: int, x_hi: int) -> float:
    """Least-squares slope in x of log P(M_tau = x); tends to -lambda."""
    xs = np.arange(x_lo, x_hi + 1)
    return _slope(xs, np.log([m_tau_marginal(model, int(x)) for x in xs]))
