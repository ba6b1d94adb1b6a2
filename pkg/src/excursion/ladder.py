"""Survival probabilities, renewal masses and the excursion prefactor Q for positive-drift walks.

All tables are truncated; every truncation carries a certified bound:

* ``h`` is solved on ``0..z_max`` with ``h = 1`` above ``z_max``.  The Lundberg
  inequality ``P(tau_z < inf) <= exp(-gamma z)`` bounds the resulting bias by
  ``exp(-gamma (z_max + 1))``.
* ``V`` keeps ``j <= j_max`` terms of its series.  Chernoff gives
  ``P(tau_+ > j) <= P(S_j <= 0) <= rho**j`` with ``rho = min_s E exp(-s X)``,
  so the dropped mass is at most ``rho**(j_max+1) / (1 - rho)``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonPositiveDrift
from .walk_model import ExcursionModel, IncrementLaw, reverse, solve_lambda, solve_mu

DEFAULT_TOL = 1e-13
# slack for floating-point summation when checking identities
ROUNDING_SLACK = 1e-14


def _require_positive_mean(law: IncrementLaw) -> None:
    if not law.mean > 0:
        raise NonPositiveDrift(f"law has mean {law.mean} <= 0")


def lundberg_gamma(law: IncrementLaw) -> float:
    """gamma > 0 with E exp(-gamma X) = 1 for a positive-drift law."""
    _require_positive_mean(law)
    return solve_lambda(reverse(law))


def chernoff_rho(law: IncrementLaw) -> float:
    """min_s E exp(-s X); bounds P(S_j <= 0) by rho**j."""
    _require_positive_mean(law)
    return solve_mu(reverse(law))[1]


@dataclass(frozen=True)
class LadderTable:
    law: IncrementLaw
    h: np.ndarray
    V: np.ndarray
    e_tau_plus: float
    lundberg_gamma: float
    trunc_error: float
    h_error: float
    v_tail: float

    @property
    def z_max(self) -> int:
        return len(self.h) - 1

    def survival(self, z: int) -> float:
        if z < 0:
            return 0.0
        if z > self.z_max:
            # beyond the table the Lundberg bound is tighter than h_error
            return 1.0
        return float(self.h[z])

    def renewal(self, r: int) -> float:
        if r < 0 or r >= len(self.V):
            return 0.0
        return float(self.V[r])

    def harmonicity_residual(self) -> float:
        """sup over interior z of |h(z) - sum_x p(x) 1{z+x>0} h(z+x)|."""
        law = self.law
        worst = 0.0
        for z in range(0, self.z_max - law.max_step + 1):
            rhs = sum(q * self.survival(z + x) for x, q in zip(law.support, law.probs) if z + x > 0)
            worst = max(worst, abs(self.h[z] - rhs))
        return worst

    def h_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "h(z)"])
        for z, v in enumerate(self.h):
            w.writerow([z, repr(float(v))])
        return buf.getvalue()

    def v_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "V(r)"])
        for r, v in enumerate(self.V):
            w.writerow([r, repr(float(v))])
        return buf.getvalue()


def _survival_table(law: IncrementLaw, z_max: int) -> np.ndarray:
    # h = P_box h + b, where b collects the steps that leave the box upward
    size = z_max + 1
    P = np.zeros((size, size))
    b = np.zeros(size)
    for z in range(size):
        for x, q in zip(law.support, law.probs):
            t = z + x
            if t <= 0:
                continue
            if t > z_max:
                b[z] += q
            else:
                P[z, t] += q
    return np.linalg.solve(np.eye(size) - P, b)


def _renewal_series(law: IncrementLaw, j_max: int) -> np.ndarray:
    """V(r) = sum_{j<=j_max} P(S_j = -r, tau_+ > j), r = 0..j_max*|min step|."""
    reach = j_max * abs(law.min_step)
    # layer[d] is the mass at position -d; a step X moves depth by -X
    kernel = law.dense[::-1]
    layer = np.zeros(reach + 1)
    layer[0] = 1.0
    V = layer.copy()
    for _ in range(j_max):
        layer = np.convolve(layer, kernel)[law.max_step : law.max_step + reach + 1]
        V += layer
    return V


@lru_cache(maxsize=128)
def build_ladder(law: IncrementLaw, tol: float = DEFAULT_TOL, z_min: int = 0) -> LadderTable:
    _require_positive_mean(law)
    gamma = lundberg_gamma(law)
    rho = chernoff_rho(law)
    z_max = max(z_min, math.ceil(math.log(1.0 / tol) / gamma), 2 * law.max_step)
    h = _survival_table(law, z_max)
    h_error = math.exp(-gamma * (z_max + 1))

    j_max = math.ceil(math.log(tol * (1.0 - rho)) / math.log(rho))
    V = _renewal_series(law, j_max)
    v_tail = rho ** (j_max + 1) / (1.0 - rho)
    e_plus = float(V.sum())
    trunc = v_tail + e_plus * h_error + ROUNDING_SLACK
    return LadderTable(law, h, V, e_plus, gamma, trunc, h_error, v_tail)


def survival_prob(law: IncrementLaw, z: int) -> float:
    """P(tau_z = inf) for a positive-drift walk started at level z."""
    return build_ladder(law, z_min=z + 1).survival(z)


def renewal_function(law: IncrementLaw, r: int) -> float:
    return build_ladder(law).renewal(r)


def e_tau_plus(law: IncrementLaw) -> float:
    tab = build_ladder(law)
    assert abs(tab.e_tau_plus * tab.h[0] - 1.0) <= tab.trunc_error
    return tab.e_tau_plus


@dataclass(frozen=True)
class QConstant:
    value: float
    h_tilted_0: float
    h_rev_1: float
    sigma: float
    sigma_hat: float
    overshoot_sum: float
    trunc_error: float

    @staticmethod
    def combine(h_tilted_0, h_rev_1, sigma, sigma_hat, overshoot_sum) -> float:
        return h_tilted_0**2 * h_rev_1 / (sigma_hat * sigma) * overshoot_sum

    def to_dict(self) -> dict:
        return {
            "Q": self.value,
            "P_hat(tau=inf)": self.h_tilted_0,
            "P(tau_bar_1=inf)": self.h_rev_1,
            "sigma": self.sigma,
            "sigma_hat": self.sigma_hat,
            "overshoot_sum": self.overshoot_sum,
            "trunc_error": self.trunc_error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def q_constant(model: ExcursionModel, tol: float = DEFAULT_TOL) -> QConstant:
    law = model.law
    up = build_ladder(model.tilted, tol)
    down = build_ladder(model.reversed, tol, z_min=abs(law.min_step) + 1)
    overshoot = math.fsum(down.survival(y) * law.cdf(-y) for y in range(1, abs(law.min_step) + 1))
    sigma = math.sqrt(model.profile.sigma2)
    sigma_hat = math.sqrt(model.profile.sigma2_hat)
    value = QConstant.combine(up.survival(0), down.survival(1), sigma, sigma_hat, overshoot)
    # h errors enter at most linearly through four factors each <= 1
    err = 4.0 * max(up.h_error, down.h_error) * value / min(up.survival(0), down.survival(1)) + ROUNDING_SLACK
    return QConstant(value, up.survival(0), down.survival(1), sigma, sigma_hat, overshoot, err)
