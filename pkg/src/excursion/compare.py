"""Exact-versus-asymptotic comparison harness.

Rows carry ``x, k, n, exact, approx, rel_err, regime_ok``.  For the excursion formulas
``n`` is the excursion length tau; the joint approximation is evaluated with its own
time index n - 1 (it describes tau = n + 1).  For the positive-drift formulas ``x`` is
the level, ``n`` the time and ``k`` holds the gap r of the max-end formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import asymptotics as asy
from .exact_oracle import (
    conditional_tables,
    joint_block,
    max_end_table,
    max_row,
    snmax_row,
    survival_llt_row,
)
from .ladder import build_ladder, q_constant
from .walk_model import ExcursionModel, IncrementLaw

FORMULAS = ("joint", "theta", "tau-theta", "tau", "llt", "max-end", "max", "snmax")


@dataclass
class Comparison:
    formula: str
    x: np.ndarray
    k: np.ndarray | None
    n: np.ndarray | None
    exact: np.ndarray
    approx: np.ndarray
    regime_ok: np.ndarray

    @property
    def rel_err(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.approx > 0, np.abs(self.exact - self.approx) / self.approx, np.inf)

    def summary(self) -> dict:
        rel = self.rel_err[self.regime_ok]
        rel = rel[np.isfinite(rel)]
        if rel.size == 0:
            return {"rows": int(self.exact.size), "regime_rows": 0, "max_rel_err": None, "median_rel_err": None}
        return {
            "rows": int(self.exact.size),
            "regime_rows": int(rel.size),
            "max_rel_err": float(rel.max()),
            "median_rel_err": float(np.median(rel)),
        }

    def rows(self):
        rel = self.rel_err
        for i in range(self.exact.size):
            yield (
                int(self.x[i]),
                None if self.k is None else int(self.k[i]),
                None if self.n is None else int(self.n[i]),
                float(self.exact[i]),
                float(self.approx[i]),
                float(rel[i]),
                bool(self.regime_ok[i]),
            )


def _sd(var: float) -> float:
    return math.sqrt(var)


def mode_box(model: ExcursionModel, x: int, sigmas: float) -> tuple[np.ndarray, np.ndarray]:
    """theta values k and post-maximum lengths j centred on their modes x/a_hat and x/a."""
    p = model.profile
    k0, j0 = round(x / p.a_hat), round(x / p.a)
    sk = _sd(p.sigma2_hat * x / p.a_hat**3)
    sj = _sd(p.sigma2 * x / p.a**3)
    ks = np.arange(max(1, round(k0 - sigmas * sk)), round(k0 + sigmas * sk) + 1)
    js = np.arange(max(1, round(j0 - sigmas * sj)), round(j0 + sigmas * sj) + 1)
    return ks, js


def compare_joint(model: ExcursionModel, x: int, sigmas: float = 5.0) -> Comparison:
    ks, js = mode_box(model, x, sigmas)
    Q = q_constant(model).value
    # the formula index n means tau = n + 1; with n - k = j this gives tau - theta = j + 1
    exact = joint_block(model, x, ks, js + 1)
    K, J = np.meshgrid(ks, js, indexing="ij")
    ap = asy.excursion_approx(model, x, K, K + J, q=Q)
    return Comparison(
        "joint", np.full(K.size, x), K.ravel(), (K + J + 1).ravel(), exact.ravel(), ap.value.ravel(), ap.regime_ok.ravel()
    )


def joint_mode_rel_err(model: ExcursionModel, x: int) -> float:
    p = model.profile
    k, j = round(x / p.a_hat), round(x / p.a)
    exact = float(joint_block(model, x, [k], [j + 1])[0, 0])
    approx = asy.excursion_approx(model, x, k, k + j).value
    return abs(exact - approx) / approx


def joint_box_median_rel_err(model: ExcursionModel, x: int, sigmas: float = 3.0) -> float:
    return float(np.median(compare_joint(model, x, sigmas).rel_err))


def compare_conditional(model: ExcursionModel, x: int, which: str) -> Comparison:
    ct = conditional_tables(model, x)
    table, fn = {
        "theta": (ct.theta, asy.theta_local_approx),
        "tau-theta": (ct.tail, asy.theta_tau_local_approx),
        "tau": (ct.tau, asy.tau_local_approx),
    }[which]
    idx = np.arange(len(table))
    ap = fn(model, x, idx)
    xs = np.full(idx.size, x)
    if which == "tau":
        return Comparison(which, xs, None, idx, np.asarray(table), ap.value, ap.regime_ok)
    return Comparison(which, xs, idx, None, np.asarray(table), ap.value, ap.regime_ok)


def total_variation(model: ExcursionModel, x: int, which: str) -> float:
    """TV distance between the exact conditional law and the discretised Gaussian."""
    c = compare_conditional(model, x, which)
    return 0.5 * float(np.abs(c.exact - c.approx).sum())


def compare_llt(law: IncrementLaw, n: int, z: int) -> Comparison:
    xs, exact = survival_llt_row(law, z, n)
    ap = asy.llt_approx(law, build_ladder(law, z_min=z + 1), z, n, xs)
    return Comparison("llt", xs, None, np.full(xs.size, n), exact, ap.value, ap.regime_ok)


def compare_max_end(law: IncrementLaw, n: int, r_max: int = 30) -> Comparison:
    E = max_end_table(law, n, r_max)
    X, R = np.meshgrid(np.arange(E.shape[0]), np.arange(E.shape[1]), indexing="ij")
    ap = asy.max_end_approx(law, build_ladder(law), n, X, R)
    return Comparison("max-end", X.ravel(), R.ravel(), np.full(X.size, n), E.ravel(), ap.value.ravel(), ap.regime_ok.ravel())


def compare_max(law: IncrementLaw, n: int) -> Comparison:
    row = max_row(law, n)
    xs = np.arange(len(row))
    ap = asy.max_approx(law, n, xs)
    return Comparison("max", xs, None, np.full(xs.size, n), row, ap.value, ap.regime_ok)


def compare_snmax(law: IncrementLaw, n: int, y: int, z: int) -> Comparison:
    xs, exact, _ = snmax_row(law, n, y, z)
    ap = asy.snmax_approx(law, build_ladder(law, z_min=max(y, z) + 1), n, xs, y, z)
    return Comparison("snmax", xs, None, np.full(xs.size, n), exact, ap.value, ap.regime_ok)


def scaled_sup_error(c: Comparison) -> float:
    """sup |exact - approx| * sqrt(n) over every row."""
    return float(np.abs(c.exact - c.approx).max() * math.sqrt(c.n[0]))
