"""Relative error of the joint local formula and of the conditional Gaussians as x grows.

    python scripts/excursion_convergence.py --x 20:100:20 --out conv.csv
"""
from __future__ import annotations

import argparse
import time
from dataclasses import dataclass, field

from _common import DEFAULT_LAW, law_arg, write_rows
from excursion import compare as cmp
from excursion.cli import parse_range
from excursion.walk_model import build_model


@dataclass
class ConvergenceConfig:
    law: str = DEFAULT_LAW
    xs: list[int] = field(default_factory=lambda: [20, 40, 60, 80, 100])
    box_sigmas: float = 3.0
    out: str | None = None


def run(cfg: ConvergenceConfig) -> list[tuple]:
    model = build_model(law_arg(cfg.law))
    rows = []
    for x in cfg.xs:
        t0 = time.perf_counter()
        rows.append(
            (
                x,
                cmp.joint_mode_rel_err(model, x),
                cmp.joint_box_median_rel_err(model, x, cfg.box_sigmas),
                cmp.total_variation(model, x, "theta"),
                cmp.total_variation(model, x, "tau-theta"),
                cmp.total_variation(model, x, "tau"),
                time.perf_counter() - t0,
            )
        )
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--law", default=DEFAULT_LAW)
    ap.add_argument("--x", type=parse_range, default=ConvergenceConfig().xs)
    ap.add_argument("--sigmas", type=float, default=3.0)
    ap.add_argument("--out")
    a = ap.parse_args()
    cfg = ConvergenceConfig(a.law, a.x, a.sigmas, a.out)
    cols = ["x", "mode_rel_err", "box_median_rel_err", "tv_theta", "tv_tail", "tv_tau", "seconds"]
    write_rows(cfg.out, cols, run(cfg))


if __name__ == "__main__":
    main()
