"""Excursion sampling: plain simulation and the switching importance sampler.

The importance sampler runs the walk under the tilted law until it first reaches a
level >= x (time T) or drops to <= 0, then continues under the original law until the
excursion ends.  Because E exp(lambda X) = 1, exp(-lambda S_T) is the exact likelihood
ratio of the tilted segment, so the weights are unbiased for P(M_tau >= x).

Samples are generated in fixed-size chunks, each seeded from ``SeedSequence(seed).spawn``.
The chunking does not depend on the worker count, which keeps results bit-identical
for any ``workers``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConditioning, PathBudgetExceeded
from .walk_model import ExcursionModel, IncrementLaw

CHUNK = 4096
STEP_BUDGET = 10_000_000
MIN_RETAINED = 100


@dataclass(frozen=True)
class EstimateCI:
    mean: float
    std_error: float
    n_samples: int
    seed: int

    @property
    def ci95(self) -> tuple[float, float]:
        return (self.mean - 1.96 * self.std_error, self.mean + 1.96 * self.std_error)

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "ci95": [lo, hi],
            "n_samples": self.n_samples,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _estimate(values: np.ndarray, seed: int) -> EstimateCI:
    n = len(values)
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EstimateCI(float(values.mean()), se, n, seed)


@dataclass(frozen=True)
class ExcursionSample:
    path: tuple[int, ...]  # S_1 .. S_tau
    m: int
    theta: int
    tau: int
    weight: float = 1.0


def sample_excursion(model: ExcursionModel, rng_seed) -> ExcursionSample:
    """One excursion under the original law, stepped until the walk is <= 0."""
    rng = np.random.default_rng(rng_seed)
    law = model.law
    cdf = np.cumsum(law.p)
    s, m, theta = 0, 0, 0
    path = []
    for t in range(1, STEP_BUDGET + 1):
        s += law.support[min(int(np.searchsorted(cdf, rng.random(), side="right")), len(cdf) - 1)]
        path.append(s)
        if s > m:
            m, theta = s, t
        if s <= 0:
            return ExcursionSample(tuple(path), m, theta, t, 1.0)
    raise PathBudgetExceeded(f"excursion longer than {STEP_BUDGET} steps")


# ---------------------------------------------------------------------------
# vectorised chunk simulation
# ---------------------------------------------------------------------------


@dataclass
class _Batch:
    m: np.ndarray
    theta: np.ndarray
    tau: np.ndarray
    first_passage: np.ndarray  # S_T, or 0 where the tilted phase failed
    weight: np.ndarray


def _sampler(law: IncrementLaw):
    cdf = np.cumsum(law.p)
    cdf[-1] = 1.0
    return law.steps, cdf


def _simulate(model: ExcursionModel, size: int, rng: np.random.Generator, switch_level: int | None) -> _Batch:
    """Simulate ``size`` excursions; with ``switch_level`` use the tilted law until it is reached."""
    base_steps, base_cdf = _sampler(model.law)
    tilt_steps, tilt_cdf = _sampler(model.tilted)
    pos = np.zeros(size, dtype=np.int64)
    m = np.zeros(size, dtype=np.int64)
    theta = np.zeros(size, dtype=np.int64)
    tau = np.zeros(size, dtype=np.int64)
    passage = np.zeros(size, dtype=np.int64)
    tilted = np.full(size, switch_level is not None)
    alive = np.arange(size)
    t = 0
    while alive.size:
        t += 1
        if t > STEP_BUDGET:
            raise PathBudgetExceeded(f"excursion longer than {STEP_BUDGET} steps")
        u = rng.random(alive.size)
        tl = tilted[alive]
        step = np.where(
            tl,
            tilt_steps[np.searchsorted(tilt_cdf, u, side="right").clip(max=len(tilt_cdf) - 1)],
            base_steps[np.searchsorted(base_cdf, u, side="right").clip(max=len(base_cdf) - 1)],
        )
        p = pos[alive] + step
        pos[alive] = p
        higher = p > m[alive]
        m[alive[higher]] = p[higher]
        theta[alive[higher]] = t
        if switch_level is not None:
            reached = tl & (p >= switch_level)
            passage[alive[reached]] = p[reached]
            tilted[alive[reached]] = False
        done = p <= 0
        tau[alive[done]] = t
        alive = alive[~done]
    if switch_level is None:
        weight = np.ones(size)
    else:
        weight = np.where(passage > 0, np.exp(-model.profile.lam * passage), 0.0)
    return _Batch(m, theta, tau, passage, weight)


def _run_chunks(model: ExcursionModel, n_samples: int, seed: int, switch_level, workers: int) -> _Batch:
    sizes = [CHUNK] * (n_samples // CHUNK)
    if n_samples % CHUNK:
        sizes.append(n_samples % CHUNK)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    task = lambda args: _simulate(model, args[0], np.random.default_rng(args[1]), switch_level)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(task, zip(sizes, children)))
    else:
        parts = [task(a) for a in zip(sizes, children)]
    return _Batch(*(np.concatenate([getattr(b, f) for b in parts]) for f in _Batch.__dataclass_fields__))


def sample_batch(model: ExcursionModel, n_samples: int, seed: int, workers: int = 1) -> dict[str, np.ndarray]:
    """Plain excursions in bulk: arrays ``m``, ``theta`` and ``tau``."""
    b = _run_chunks(model, n_samples, seed, None, workers)
    return {"m": b.m, "theta": b.theta, "tau": b.tau}


def direct_estimate_max(model: ExcursionModel, x: int, n_samples: int, seed: int, workers: int = 1) -> EstimateCI:
    """Crude Monte Carlo for P(M_tau >= x)."""
    batch = _run_chunks(model, n_samples, seed, None, workers)
    return _estimate((batch.m >= x).astype(float), seed)


def importance_estimate_max(
    model: ExcursionModel, x: int, n_samples: int, seed: int, workers: int = 1
) -> EstimateCI:
    """Switching-sampler estimate of P(M_tau >= x)."""
    if x < 1:
        raise ValueError("x must be >= 1")
    batch = _run_chunks(model, n_samples, seed, x, workers)
    return _estimate(batch.weight, seed)


def importance_weights(model: ExcursionModel, x: int, n_samples: int, seed: int, workers: int = 1) -> np.ndarray:
    return _run_chunks(model, n_samples, seed, x, workers).weight


# ---------------------------------------------------------------------------
# conditional histogram
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JointHistogram:
    x: int
    theta: np.ndarray  # retained theta_tau values
    tail: np.ndarray  # retained tau - theta_tau values
    weight: np.ndarray  # normalised, sums to 1
    n_samples: int
    seed: int

    @property
    def n_retained(self) -> int:
        return len(self.weight)

    @property
    def tau(self) -> np.ndarray:
        return self.theta + self.tail

    @property
    def n_effective(self) -> float:
        return float(1.0 / np.sum(self.weight**2))

    def mean(self, values: np.ndarray) -> tuple[float, float]:
        """Self-normalised mean and its delta-method standard error."""
        mu = float(np.dot(self.weight, values))
        se = float(np.sqrt(np.sum(self.weight**2 * (values - mu) ** 2)))
        return mu, se

    def correlation(self) -> float:
        w = self.weight
        a = self.theta - np.dot(w, self.theta)
        b = self.tail - np.dot(w, self.tail)
        return float(np.dot(w, a * b) / math.sqrt(np.dot(w, a * a) * np.dot(w, b * b)))

    def table(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = {}
        for k, j, w in zip(self.theta.tolist(), self.tail.tolist(), self.weight.tolist()):
            out[(k, j)] = out.get((k, j), 0.0) + w
        return out

    def marginal(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(values, weights=self.weight)

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        buf.write(header)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "j", "weight"])
        for (k, j), v in sorted(self.table().items()):
            w.writerow([k, j, f"{v:.17g}"])
        return buf.getvalue()


def importance_joint_histogram(
    model: ExcursionModel, x: int, n_samples: int, seed: int, workers: int = 1
) -> JointHistogram:
    """Weighted law of (theta_tau, tau - theta_tau) given M_tau = x, from the switching sampler."""
    if x < 1:
        raise ValueError("x must be >= 1")
    batch = _run_chunks(model, n_samples, seed, x, workers)
    keep = (batch.m == x) & (batch.weight > 0)
    if keep.sum() < MIN_RETAINED:
        raise DegenerateConditioning(f"only {int(keep.sum())} trajectories with M_tau = {x}")
    w = batch.weight[keep]
    theta = batch.theta[keep]
    return JointHistogram(x, theta, batch.tau[keep] - theta, w / w.sum(), n_samples, seed)
