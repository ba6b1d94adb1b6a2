"""Lattice increment laws, Cramér constants and the derived (tilted, reversed) walks."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache, reduce
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConvergenceFailure,
    NonNegativeDrift,
    NonProbability,
    NoNegativeStep,
    NoPositiveStep,
    Periodic,
)

PROB_TOL = 1e-12
ROOT_TOL = 1e-12


@dataclass(frozen=True)
class IncrementLaw:
    """Finite-support integer step distribution.

    Use :func:`validate` to build one; the constructor itself does not check anything.
    """

    support: tuple[int, ...]
    probs: tuple[float, ...]

    @cached_property
    def steps(self) -> np.ndarray:
        return np.asarray(self.support, dtype=np.int64)

    @cached_property
    def p(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def min_step(self) -> int:
        return self.support[0]

    @property
    def max_step(self) -> int:
        return self.support[-1]

    @cached_property
    def dense(self) -> np.ndarray:
        """pmf on the contiguous range min_step..max_step (zeros in the gaps)."""
        out = np.zeros(self.max_step - self.min_step + 1)
        out[self.steps - self.min_step] = self.p
        return out

    @cached_property
    def mean(self) -> float:
        return float(np.dot(self.p, self.steps))

    @cached_property
    def variance(self) -> float:
        m = self.mean
        return float(np.dot(self.p, (self.steps - m) ** 2))

    def pmf(self, x: int) -> float:
        try:
            return self.probs[self.support.index(x)]
        except ValueError:
            return 0.0

    def cdf(self, y: float) -> float:
        """P(X <= y)."""
        return float(self.p[self.steps <= y].sum())

    def mgf(self, s: float) -> float:
        return float(np.dot(self.p, np.exp(s * self.steps)))

    def mgf_d1(self, s: float) -> float:
        return float(np.dot(self.p * self.steps, np.exp(s * self.steps)))

    def mgf_d2(self, s: float) -> float:
        return float(np.dot(self.p * self.steps**2, np.exp(s * self.steps)))

    def to_dict(self) -> dict:
        return {"support": list(self.support), "probs": list(self.probs)}

    @cached_property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def __repr__(self) -> str:
        body = ", ".join(f"{x}:{q:.6g}" for x, q in zip(self.support, self.probs))
        return f"IncrementLaw({body})"


def validate(support: Sequence[int], probs: Sequence[float]) -> IncrementLaw:
    """Check the standing hypotheses on a step law and return it sorted by support."""
    if len(support) == 0 or len(support) != len(probs):
        raise NonProbability("support and probs must be nonempty and of equal length")
    pairs = sorted((int(x), float(q)) for x, q in zip(support, probs))
    xs = [x for x, _ in pairs]
    qs = [q for _, q in pairs]
    if len(set(xs)) != len(xs):
        raise NonProbability(f"repeated support points in {xs}")
    if any(not math.isfinite(q) or q <= 0.0 for q in qs):
        raise NonProbability(f"probabilities must be > 0, got {qs}")
    total = math.fsum(qs)
    if abs(total - 1.0) > PROB_TOL:
        raise NonProbability(f"probabilities sum to {total!r}, not 1")
    if xs[-1] <= 0:
        raise NoPositiveStep(f"support {xs} has no positive step")
    if xs[0] >= 0:
        raise NoNegativeStep(f"support {xs} has no negative step")
    span = reduce(math.gcd, (x - xs[0] for x in xs[1:]), 0)
    if span != 1:
        raise Periodic(f"support {xs} lies on a lattice of span {span}")
    return IncrementLaw(tuple(xs), tuple(qs))


def law_from_json(text: str) -> IncrementLaw:
    doc = json.loads(text)
    return validate(doc["support"], doc["probs"])


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------


def _safeguarded_newton(
    f: Callable[[float], float],
    df: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = ROOT_TOL,
    maxiter: int = 200,
) -> float:
    """Root of an increasing function on [lo, hi] with f(lo) < 0 < f(hi)."""
    s = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fs = f(s)
        if abs(fs) <= tol * 1e-2:
            return s
        if fs < 0:
            lo = s
        else:
            hi = s
        d = df(s)
        cand = s - fs / d if d > 0 else math.nan
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        if cand == s or hi - lo <= 4 * math.ulp(max(abs(lo), abs(hi))):
            break
        s = cand
    else:
        raise ConvergenceFailure(f"no convergence in {maxiter} iterations on [{lo}, {hi}]")
    if abs(f(s)) > tol:
        raise ConvergenceFailure(f"residual {f(s)!r} above {tol} at s={s!r}")
    return s


def _grow_bracket(g: Callable[[float], float], start: float, law: IncrementLaw) -> float:
    """Smallest start*2^m at which g turns positive."""
    cap = 700.0 / max(abs(law.min_step), abs(law.max_step))
    hi = start
    while g(hi) <= 0:
        hi *= 2.0
        if hi > cap:
            raise ConvergenceFailure("bracket growth exceeded the overflow-safe range")
    return hi


def _require_negative_mean(law: IncrementLaw) -> None:
    if not law.mean < 0:
        raise NonNegativeDrift(f"law has mean {law.mean} >= 0")


def solve_mu(law: IncrementLaw) -> tuple[float, float]:
    """Tilt at which the walk becomes driftless, and the per-step decay phi(mu)."""
    _require_negative_mean(law)
    hi = _grow_bracket(law.mgf_d1, 1.0 / law.max_step, law)
    mu = _safeguarded_newton(law.mgf_d1, law.mgf_d2, 0.0, hi)
    return mu, law.mgf(mu)


def solve_lambda(law: IncrementLaw) -> float:
    """Positive root of E exp(s X) = 1."""
    _require_negative_mean(law)
    mu, _ = solve_mu(law)
    g = lambda s: law.mgf(s) - 1.0
    hi = _grow_bracket(g, max(2.0 * mu, 1e-3), law)
    return _safeguarded_newton(g, law.mgf_d1, mu, hi)


def tilt(law: IncrementLaw, s: float) -> IncrementLaw:
    w = law.p * np.exp(s * law.steps)
    w = w / w.sum()
    return validate(law.support, w.tolist())


def reverse(law: IncrementLaw) -> IncrementLaw:
    return validate([-x for x in law.support], list(law.probs))


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CramerProfile:
    a: float
    sigma2: float
    lam: float
    mu: float
    phi_mu: float
    a_hat: float
    sigma2_hat: float
    c_hat: float
    A: float
    Sigma2: float

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "sigma2": self.sigma2,
            "lambda": self.lam,
            "mu": self.mu,
            "phi_mu": self.phi_mu,
            "a_hat": self.a_hat,
            "sigma2_hat": self.sigma2_hat,
            "c_hat": self.c_hat,
            "A": self.A,
            "Sigma2": self.Sigma2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CramerProfile":
        d = dict(d)
        d["lam"] = d.pop("lambda")
        return cls(**d)


def profile(law: IncrementLaw) -> CramerProfile:
    lam = solve_lambda(law)
    mu, phi_mu = solve_mu(law)
    # tilted moments straight from the mgf derivatives; phi(lam) = 1
    a_hat = law.mgf_d1(lam)
    sigma2_hat = law.mgf_d2(lam) - a_hat**2
    a = -law.mean
    sigma2 = law.variance
    return CramerProfile(
        a=a,
        sigma2=sigma2,
        lam=lam,
        mu=mu,
        phi_mu=phi_mu,
        a_hat=a_hat,
        sigma2_hat=sigma2_hat,
        c_hat=math.sqrt(sigma2_hat / a_hat**3),
        A=1.0 / a + 1.0 / a_hat,
        Sigma2=sigma2 / a**3 + sigma2_hat / a_hat**3,
    )


@dataclass(frozen=True)
class ExcursionModel:
    law: IncrementLaw
    profile: CramerProfile
    tilted: IncrementLaw = field(repr=False)
    reversed: IncrementLaw = field(repr=False)


@lru_cache(maxsize=64)
def build_model(law: IncrementLaw) -> ExcursionModel:
    prof = profile(law)
    return ExcursionModel(law, prof, tilt(law, prof.lam), reverse(law))
