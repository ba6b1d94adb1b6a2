"""Exact probabilities by corridor dynamic programming and by path enumeration.

Everything here runs under the original step law; no tilting.  Corridor conventions:

* before the first argmax the path stays strictly inside (0, x);
* after it the path stays in (0, x], so the maximum may be revisited;
* the terminal step is aggregated through the tail P(X <= -y).

Time series (``ascending_series``, ``descent_series``) are run until the mass still
inside the corridor falls below ``rel_tol`` times what has already been absorbed;
that remaining mass is returned as a bound on everything not yet counted.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BudgetExceeded, NonPositiveDrift
from .walk_model import ExcursionModel, IncrementLaw

REL_TOL = 1e-18
MAX_STEPS = 200_000
ENUMERATION_BUDGET = 5_000_000


def _require_positive_mean(law: IncrementLaw) -> None:
    if not law.mean > 0:
        raise NonPositiveDrift(f"law has mean {law.mean} <= 0")


def _step(layer: np.ndarray, law: IncrementLaw) -> np.ndarray:
    """One step of the walk; entry i of the result sits at (position of layer[0]) + min_step + i."""
    return np.convolve(layer, law.dense)


def _tail_vector(law: IncrementLaw, top: int) -> np.ndarray:
    """tail[y] = P(X <= -y) for y = 0..top."""
    return np.array([law.cdf(-y) for y in range(top + 1)])


def _bucket(n: int) -> int:
    return 1 << max(0, int(n)).bit_length()


# ---------------------------------------------------------------------------
# corridor series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Series:
    values: np.ndarray  # values[t] for t = 0..len-1
    remainder: float  # mass still inside the corridor after the last step


@lru_cache(maxsize=512)
def _ascending(law: IncrementLaw, x: int, min_len: int, rel_tol: float) -> Series:
    # layer covers positions 0..x-1; position 0 is only occupied at time 0
    layer = np.zeros(x)
    layer[0] = 1.0
    hit_index = x - law.min_step
    out = [0.0]
    cum = 0.0
    for t in range(1, MAX_STEPS + 1):
        moved = _step(layer, law)
        hit = moved[hit_index] if hit_index < len(moved) else 0.0
        out.append(hit)
        cum += hit
        layer = np.zeros(x)
        lo = 1 - law.min_step
        hi = min(x - law.min_step, len(moved))
        if hi > lo:
            layer[1 : 1 + hi - lo] = moved[lo:hi]
        rem = layer.sum()
        if t + 1 >= min_len and (rem == 0.0 or (cum > 0 and rem <= rel_tol * cum)):
            break
    else:
        raise BudgetExceeded(f"ascending series for x={x} did not settle in {MAX_STEPS} steps")
    values = np.array(out)
    values.setflags(write=False)
    return Series(values, float(rem))


def ascending_series(law: IncrementLaw, x: int, min_len: int = 0, rel_tol: float = REL_TOL) -> Series:
    """values[k] = P(0 < S_j < x for 1 <= j < k, S_k = x)."""
    if x < 1:
        raise ValueError("x must be >= 1")
    return _ascending(law, x, _bucket(min_len), rel_tol)


def _descent_layers(law: IncrementLaw, x: int):
    """Yield the corridor layer (positions 1..x) after j = 0, 1, 2, ... steps from x."""
    layer = np.zeros(x)
    layer[x - 1] = 1.0
    lo = -law.min_step  # index in ``moved`` of position 1 (layer index 0 is position 1)
    while True:
        yield layer
        moved = _step(layer, law)
        new = np.zeros(x)
        a = max(lo, 0)
        b = min(lo + x, len(moved))
        if b > a:
            new[a - lo : b - lo] = moved[a:b]
        layer = new


@lru_cache(maxsize=512)
def _descent(law: IncrementLaw, x: int, min_len: int, rel_tol: float) -> Series:
    tail = _tail_vector(law, x)[1:]  # tail[y-1] = P(X <= -y)
    out = [0.0]
    cum = 0.0
    for j, layer in enumerate(_descent_layers(law, x), start=1):
        drop = float(np.dot(layer, tail))
        out.append(drop)
        cum += drop
        if j > MAX_STEPS:
            raise BudgetExceeded(f"descent series for x={x} did not settle in {MAX_STEPS} steps")
        # mass that survives this step stays in the corridor
        rem = float(layer.sum()) - drop
        if j + 1 >= min_len and cum > 0 and rem <= rel_tol * cum:
            break
    values = np.array(out)
    values.setflags(write=False)
    return Series(values, max(rem, 0.0))


def descent_series(law: IncrementLaw, x: int, min_len: int = 0, rel_tol: float = REL_TOL) -> Series:
    """values[j] = P(start at x, stay in (0, x] for j-1 steps, then drop to <= 0)."""
    if x < 1:
        raise ValueError("x must be >= 1")
    return _descent(law, x, _bucket(min_len), rel_tol)


def ascending_mass(law: IncrementLaw, x: int, k: int) -> float:
    if x < 1 or k < 1:
        return 0.0
    return float(ascending_series(law, x, k + 1).values[k])


def corridor_descent(law: IncrementLaw, x: int, j: int, y: int) -> float:
    """P(path from x stays in (0, x] for j steps and ends at y)."""
    if not 1 <= y <= x:
        raise ValueError("need 1 <= y <= x")
    for step, layer in enumerate(_descent_layers(law, x)):
        if step == j:
            return float(layer[y - 1])
    raise AssertionError("unreachable")


def joint_mass(model: ExcursionModel, x: int, k: int, n: int) -> float:
    """P(M_tau = x, theta_tau = k, tau = n)."""
    if x < 1 or k < 1 or k >= n:
        return 0.0
    law = model.law
    up = ascending_series(law, x, k + 1).values[k]
    down = descent_series(law, x, n - k + 1).values[n - k]
    return float(up * down)


def joint_block(model: ExcursionModel, x: int, ks, js) -> np.ndarray:
    """2-D array of P(M_tau = x, theta_tau = k, tau - theta_tau = j) over ks x js."""
    ks = np.asarray(ks, dtype=int)
    js = np.asarray(js, dtype=int)
    law = model.law
    up = ascending_series(law, x, int(ks.max()) + 1).values
    down = descent_series(law, x, int(js.max()) + 1).values
    u = np.where(ks >= 1, up[np.clip(ks, 0, None)], 0.0)
    d = np.where(js >= 1, down[np.clip(js, 0, None)], 0.0)
    return np.outer(u, d)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MassGrid:
    x_range: tuple[int, int]
    k_range: tuple[int, int]
    n_range: tuple[int, int]
    values: np.ndarray  # values[x - x0, k - k0, n - n0]
    law_id: str

    def at(self, x: int, k: int, n: int) -> float:
        x0, k0, n0 = self.x_range[0], self.k_range[0], self.n_range[0]
        return float(self.values[x - x0, k - k0, n - n0])

    def to_csv(self, header: str = "", skip_zeros: bool = True) -> str:
        buf = io.StringIO()
        buf.write(header)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "k", "n", "value"])
        x0, k0, n0 = self.x_range[0], self.k_range[0], self.n_range[0]
        for (i, j, l), v in np.ndenumerate(self.values):
            if skip_zeros and v == 0.0:
                continue
            w.writerow([x0 + i, k0 + j, n0 + l, f"{v:.17g}"])
        return buf.getvalue()


def _slice(model: ExcursionModel, x: int, ks: np.ndarray, ns: np.ndarray) -> np.ndarray:
    law = model.law
    up = ascending_series(law, x, int(ks.max()) + 1).values
    down = descent_series(law, x, int(ns.max()) + 1).values
    j = ns[None, :] - ks[:, None]
    valid = (j >= 1) & (ks[:, None] >= 1)
    vals = up[np.clip(ks, 0, None)][:, None] * down[np.clip(j, 0, len(down) - 1)]
    return np.where(valid, vals, 0.0)


def joint_grid(
    model: ExcursionModel,
    x_range: tuple[int, int],
    k_range: tuple[int, int],
    n_range: tuple[int, int],
    workers: int = 1,
) -> MassGrid:
    """Dense P(M_tau=x, theta_tau=k, tau=n) over inclusive ranges; x slices may run in parallel."""
    xs = range(max(1, x_range[0]), x_range[1] + 1)
    ks = np.arange(k_range[0], k_range[1] + 1)
    ns = np.arange(n_range[0], n_range[1] + 1)
    values = np.zeros((x_range[1] - x_range[0] + 1, len(ks), len(ns)))
    task = lambda x: _slice(model, x, ks, ns)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            slices = list(pool.map(task, xs))
    else:
        slices = [task(x) for x in xs]
    for x, sl in zip(xs, slices):
        values[x - x_range[0]] = sl
    return MassGrid(tuple(x_range), tuple(k_range), tuple(n_range), values, model.law.fingerprint)


def brute_force_joint(model: ExcursionModel, n_max: int) -> MassGrid:
    """Joint law of (M_tau, theta_tau, tau) on {tau <= n_max} by enumerating every path."""
    law = model.law
    if len(law.support) ** n_max > ENUMERATION_BUDGET:
        raise BudgetExceeded(f"{len(law.support)}**{n_max} paths exceed the enumeration budget")
    x_top = max(1, (n_max - 1) * law.max_step)
    values = np.zeros((x_top + 1, n_max + 1, n_max + 1))
    steps = list(zip(law.support, law.probs))

    # state: time t, position s, running max m (over S_0..S_t), first argmax theta
    def walk(t: int, s: int, m: int, theta: int, prob: float) -> None:
        for x, q in steps:
            s1 = s + x
            p1 = prob * q
            if s1 <= 0:
                values[m, theta, t + 1] += p1
            elif t + 1 < n_max:
                if s1 > m:
                    walk(t + 1, s1, s1, t + 1, p1)
                else:
                    walk(t + 1, s1, m, theta, p1)

    walk(0, 0, 0, 0, 1.0)
    return MassGrid((0, x_top), (0, n_max), (0, n_max), values, law.fingerprint)


# ---------------------------------------------------------------------------
# marginals and conditional laws of the excursion
# ---------------------------------------------------------------------------


def m_tau_marginal(model: ExcursionModel, x: int) -> float:
    """P(M_tau = x); M_tau = 0 exactly when the first step is non-positive."""
    law = model.law
    if x < 0:
        return 0.0
    if x == 0:
        return law.cdf(0)
    up = ascending_series(law, x)
    down = descent_series(law, x)
    return math.fsum(up.values) * math.fsum(down.values)


def m_tau_marginals(model: ExcursionModel, x_cap: int) -> tuple[np.ndarray, float]:
    """P(M_tau = x) for x = 0..x_cap, and the Lundberg bound on P(M_tau > x_cap)."""
    vals = np.array([m_tau_marginal(model, x) for x in range(x_cap + 1)])
    return vals, math.exp(-model.profile.lam * (x_cap + 1))


def tau_marginals(model: ExcursionModel, n_max: int) -> np.ndarray:
    """P(tau = n) for n = 0..n_max by the killed-walk DP (no level cap needed)."""
    law = model.law
    top = max(1, n_max * law.max_step)
    tail = _tail_vector(law, top)
    out = np.zeros(n_max + 1)
    if n_max < 1:
        return out
    out[1] = law.cdf(0)
    # layer over positions 1..top
    layer = np.zeros(top)
    for x, q in zip(law.support, law.probs):
        if x > 0:
            layer[x - 1] += q
    lo = -law.min_step
    for n in range(2, n_max + 1):
        out[n] = float(np.dot(layer, tail[1:]))
        moved = _step(layer, law)
        new = np.zeros(top)
        b = min(lo + top, len(moved))
        new[: b - lo] = moved[lo:b]
        layer = new
    return out


def tau_marginal(model: ExcursionModel, n: int) -> float:
    return float(tau_marginals(model, n)[n])


@dataclass(frozen=True)
class ConditionalTables:
    x: int
    theta: np.ndarray  # P(theta_tau = k | M_tau = x), index k
    tail: np.ndarray  # P(tau - theta_tau = j | M_tau = x), index j
    tau: np.ndarray  # P(tau = n | M_tau = x), index n
    spill: float  # relative mass not represented

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        buf.write(header)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "k", "prob"])
        for k, v in enumerate(self.theta):
            if v > 0:
                w.writerow([self.x, k, f"{v:.17g}"])
        return buf.getvalue()


def conditional_tables(model: ExcursionModel, x: int, min_len: int = 0) -> ConditionalTables:
    law = model.law
    up = ascending_series(law, x, min_len)
    down = descent_series(law, x, min_len)
    up_total = math.fsum(up.values)
    down_total = math.fsum(down.values)
    theta = np.asarray(up.values) / up_total
    tail = np.asarray(down.values) / down_total
    spill = up.remainder / up_total + down.remainder / down_total
    return ConditionalTables(x, theta, tail, np.convolve(theta, tail), spill)


# ---------------------------------------------------------------------------
# positive-drift functionals
# ---------------------------------------------------------------------------


def survival_layers(law: IncrementLaw, z: int, n: int) -> list[np.ndarray]:
    """L[t - 1][i] = P(S_t = i + 1 - z, tau_z > t) for t = 1..n."""
    width = n * law.max_step + z
    layer = np.zeros(width)
    for s, q in zip(law.support, law.probs):
        if s > -z:
            layer[s + z - 1] += q
    out = [layer]
    shift = -law.min_step
    for _ in range(2, n + 1):
        moved = _step(layer, law)[shift : shift + width]
        layer = np.zeros(width)
        layer[: len(moved)] = moved
        out.append(layer)
    return out


def survival_llt_row(law: IncrementLaw, z: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(positions, P(S_n = position, tau_z > n)) over every position > -z."""
    _require_positive_mean(law)
    if n < 1:
        raise ValueError("n must be >= 1")
    layer = survival_layers(law, z, n)[n - 1]
    return np.arange(1 - z, 1 - z + len(layer)), layer


def survival_llt_mass(law: IncrementLaw, z: int, n: int, x: int) -> float:
    pos, vals = survival_llt_row(law, z, n)
    i = x - pos[0]
    return float(vals[i]) if 0 <= i < len(vals) else 0.0


def _positive_layers(law: IncrementLaw, n: int) -> np.ndarray:
    """A[k, x] = P(S_k = x, tau > k) for k = 0..n, x = 0..n*max_step (A[0] = delta_0)."""
    width = n * law.max_step + 1
    A = np.zeros((n + 1, width))
    A[0, 0] = 1.0
    if n == 0:
        return A
    for k, layer in enumerate(survival_layers(law, 0, n), start=1):
        A[k, 1:] = layer
    return A


def _nonpositive_layers(law: IncrementLaw, n: int) -> np.ndarray:
    """B[j, r] = P(S_j = -r, tau_+ > j) for j = 0..n, r = 0..n*|min_step|."""
    reach = n * abs(law.min_step)
    kernel = law.dense[::-1]
    B = np.zeros((n + 1, reach + 1))
    B[0, 0] = 1.0
    for j in range(1, n + 1):
        B[j] = np.convolve(B[j - 1], kernel)[law.max_step : law.max_step + reach + 1]
    return B


def max_end_table(law: IncrementLaw, n: int, r_max: int | None = None) -> np.ndarray:
    """E[x, r] = P(M_n = x, S_n = x - r) via the ladder convolution over the argmax time."""
    _require_positive_mean(law)
    A = _positive_layers(law, n)
    B = _nonpositive_layers(law, n)
    if r_max is not None:
        B = B[:, : r_max + 1]
    return A.T @ B[::-1]


def max_end_mass(law: IncrementLaw, n: int, x: int, r: int) -> float:
    if x < 0 or r < 0:
        return 0.0
    E = max_end_table(law, n, r)
    return float(E[x, r]) if x < E.shape[0] else 0.0


def max_row(law: IncrementLaw, n: int) -> np.ndarray:
    """P(M_n = x) for x = 0..n*max_step."""
    _require_positive_mean(law)
    A = _positive_layers(law, n)
    B = _nonpositive_layers(law, n)
    survive = B.sum(axis=1)  # P(tau_+ > j)
    return A.T @ survive[::-1]


def max_mass(law: IncrementLaw, n: int, x: int) -> float:
    row = max_row(law, n)
    return float(row[x]) if 0 <= x < len(row) else 0.0


@lru_cache(maxsize=16)
def max_gap_layer(law: IncrementLaw, n: int, z: int | None = None, r_cap: int | None = None):
    """Joint law of (M_n, M_n - S_n) restricted to {tau_z > n}; z=None means no floor.

    Returns ``(P, dropped)`` with ``P[m, r]``; mass whose gap would exceed ``r_cap`` is
    discarded and accumulated in ``dropped``.
    """
    m_top = n * law.max_step
    R = n * abs(law.min_step) if r_cap is None else r_cap
    P = np.zeros((m_top + 1, R + 1))
    P[0, 0] = 1.0
    alive = None
    if z is not None:
        m_idx = np.arange(m_top + 1)[:, None]
        r_idx = np.arange(R + 1)[None, :]
        alive = (m_idx - r_idx) > -z
    dropped = 0.0
    for _ in range(n):
        new = np.zeros_like(P)
        for s, q in zip(law.support, law.probs):
            # gap shrinks by s; a step above the running max resets the gap to 0
            r_lo = max(s, 0)
            if s >= 0:
                new[:, 0 : R + 1 - r_lo] += q * P[:, r_lo:]
            else:
                keep = R + 1 + s
                new[:, -s:] += q * P[:, :keep]
                dropped += q * float(P[:, keep:].sum())
            for r in range(0, min(s, R + 1)):
                up = s - r
                new[up:, 0] += q * P[: m_top + 1 - up, r]
        if alive is not None:
            new *= alive
        P = new
    P.setflags(write=False)
    return P, dropped


def snmax_mass(law: IncrementLaw, n: int, x: int, y: int, z: int) -> float:
    """P(S_n = x, M_{n-1} < x + y, tau_z > n) by a corridor DP on (-z, x + y)."""
    _require_positive_mean(law)
    if n < 1 or x <= -z or x + y <= 0:
        return 0.0
    lo_pos, hi_pos = 1 - z, x + y - 1  # corridor for times 1..n-1
    width = hi_pos - lo_pos + 1
    if n == 1:
        return law.pmf(x)
    if width <= 0:
        return 0.0
    layer = np.zeros(width)
    for s, q in zip(law.support, law.probs):
        if lo_pos <= s <= hi_pos:
            layer[s - lo_pos] += q
    shift = -law.min_step
    for _ in range(n - 2):
        moved = _step(layer, law)
        layer = moved[shift : shift + width].copy()
        if len(layer) < width:
            layer = np.pad(layer, (0, width - len(layer)))
    return float(sum(layer[i] * law.pmf(x - (lo_pos + i)) for i in range(width)))


def snmax_row(law: IncrementLaw, n: int, y: int, z: int, r_cap: int | None = None):
    """P(S_n = x, M_{n-1} < x + y, tau_z > n) for every x, via the (max, gap) DP.

    Returns ``(xs, values, dropped)``; ``dropped`` bounds the error from the gap cap.
    """
    _require_positive_mean(law)
    if r_cap is None:
        from .ladder import lundberg_gamma

        gamma = lundberg_gamma(law)
        r_cap = min(n * abs(law.min_step), math.ceil((math.log(n + 1) + 45.0) / gamma))
    P, dropped = max_gap_layer(law, n - 1, z, r_cap)
    m_top = P.shape[0] - 1
    # x = m - r + s ranges over -z+1 .. m_top + max_step
    x0 = 1 - z
    out = np.zeros(m_top + law.max_step - x0 + 1)
    for s, q in zip(law.support, law.probs):
        for r in range(0, min(s + y, P.shape[1])):
            # x = m - r + s for m = 0..m_top; keep x > -z
            xs_start = s - r
            idx = np.arange(m_top + 1) + xs_start - x0
            ok = idx >= 0
            np.add.at(out, idx[ok], q * P[ok, r])
    return np.arange(x0, x0 + len(out)), out, dropped
