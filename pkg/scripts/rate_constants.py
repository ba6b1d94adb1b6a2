"""Fit the tail constants c0 (maximum) and c1 (length) from the exact marginals.

    python scripts/rate_constants.py --x 10:80:5 --n 100:400:20
"""
from __future__ import annotations

import argparse
import json
import math
from dataclasses import asdict, dataclass, field

from _common import DEFAULT_LAW, law_arg
from excursion import asymptotics as asy
from excursion.cli import parse_range
from excursion.walk_model import build_model


@dataclass
class FitConfig:
    law: str = DEFAULT_LAW
    x_grid: list[int] = field(default_factory=lambda: list(range(10, 81, 5)))
    n_grid: list[int] = field(default_factory=lambda: list(range(100, 401, 20)))


def run(cfg: FitConfig) -> dict:
    model = build_model(law_arg(cfg.law))
    c0 = asy.fit_c0(model, cfg.x_grid)
    c1 = asy.fit_c1(model, cfg.n_grid)
    lo_n, hi_n = min(cfg.n_grid), max(cfg.n_grid)
    lo_x, hi_x = min(cfg.x_grid), max(cfg.x_grid)
    return {
        "config": asdict(cfg),
        "c0": c0.value,
        "c0_spread": c0.spread,
        "c1": c1.value,
        "c1_spread": c1.spread,
        "tau_log_slope": asy.tau_log_slope(model, lo_n, hi_n),
        "log_phi_mu": math.log(model.profile.phi_mu),
        "max_log_slope": asy.max_log_slope(model, lo_x, hi_x),
        "minus_lambda": -model.profile.lam,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--law", default=DEFAULT_LAW)
    ap.add_argument("--x", type=parse_range, default=FitConfig().x_grid)
    ap.add_argument("--n", type=parse_range, default=FitConfig().n_grid)
    a = ap.parse_args()
    print(json.dumps(run(FitConfig(a.law, a.x, a.n)), indent=2))


if __name__ == "__main__":
    main()
