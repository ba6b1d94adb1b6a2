"""Switching importance sampler against the exact tail P(M_tau >= x).

    python scripts/importance_sampling.py --x 5:40:5 --samples 100000 --seed 1
"""
from __future__ import annotations

import argparse
import math
from dataclasses import dataclass, field

from _common import DEFAULT_LAW, law_arg, write_rows
from excursion.cli import parse_range
from excursion.exact_oracle import m_tau_marginals
from excursion.montecarlo import direct_estimate_max, importance_estimate_max
from excursion.walk_model import build_model


@dataclass
class SamplingConfig:
    law: str = DEFAULT_LAW
    xs: list[int] = field(default_factory=lambda: [5, 10, 20, 30, 40])
    samples: int = 100_000
    seed: int = 1
    workers: int = 4
    out: str | None = None


def run(cfg: SamplingConfig) -> list[tuple]:
    model = build_model(law_arg(cfg.law))
    vals, _ = m_tau_marginals(model, max(cfg.xs) + 80)
    rows = []
    for x in cfg.xs:
        exact = math.fsum(vals[x:])
        est = importance_estimate_max(model, x, cfg.samples, cfg.seed, cfg.workers)
        direct = direct_estimate_max(model, x, cfg.samples, cfg.seed + 1, cfg.workers)
        z = abs(est.mean - exact) / est.std_error if est.std_error > 0 else math.inf
        rows.append((x, exact, est.mean, est.std_error, z, direct.mean, direct.std_error))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--law", default=DEFAULT_LAW)
    ap.add_argument("--x", type=parse_range, default=SamplingConfig().xs)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out")
    a = ap.parse_args()
    cfg = SamplingConfig(a.law, a.x, a.samples, a.seed, a.workers, a.out)
    cols = ["x", "exact_tail", "is_mean", "is_se", "is_z", "direct_mean", "direct_se"]
    write_rows(cfg.out, cols, run(cfg))


if __name__ == "__main__":
    main()
