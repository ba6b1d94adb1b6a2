"""sup_x |exact - approx| * sqrt(n) for the positive-drift local approximations.

    python scripts/positive_drift_suite.py --n 100,400,1600
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from _common import POSITIVE_LAW, law_arg, write_rows
from excursion import compare as cmp
from excursion.cli import parse_range


@dataclass
class SuiteConfig:
    law: str = POSITIVE_LAW
    ns: list[int] = field(default_factory=lambda: [100, 400, 1600])
    levels: list[int] = field(default_factory=lambda: [0, 1, 2])
    r_max: int = 30
    out: str | None = None


def run(cfg: SuiteConfig) -> list[tuple]:
    law = law_arg(cfg.law)
    rows = []
    for n in cfg.ns:
        for z in cfg.levels:
            rows.append(("llt", n, "", z, cmp.scaled_sup_error(cmp.compare_llt(law, n, z))))
        rows.append(("max-end", n, "", "", cmp.scaled_sup_error(cmp.compare_max_end(law, n, cfg.r_max))))
        rows.append(("max", n, "", "", cmp.scaled_sup_error(cmp.compare_max(law, n))))
        for y in cfg.levels:
            for z in cfg.levels:
                rows.append(("snmax", n, y, z, cmp.scaled_sup_error(cmp.compare_snmax(law, n, y, z))))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--law", default=POSITIVE_LAW)
    ap.add_argument("--n", type=parse_range, default=SuiteConfig().ns)
    ap.add_argument("--levels", type=parse_range, default=SuiteConfig().levels)
    ap.add_argument("--out")
    a = ap.parse_args()
    cfg = SuiteConfig(a.law, a.n, a.levels, out=a.out)
    write_rows(cfg.out, ["formula", "n", "y", "z", "scaled_sup_error"], run(cfg))


if __name__ == "__main__":
    main()
