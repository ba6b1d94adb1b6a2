"""Batch command-line front end.

    excursion params   --law law.json
    excursion compare  --law law.json --formula joint --x 20,40,60
    excursion simulate --law law.json --x 20 --samples 100000 --seed 1
    excursion exact    --law law.json --n-max 12
    excursion constants --law law.json --table summary

Exit codes: 0 success, 2 configuration/input errors, 3 budget exceeded, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import compare as cmp
from .errors import (
    BudgetExceeded,
    ConfigError,
    ConvergenceFailure,
    DegenerateConditioning,
    ExcursionError,
    InvalidLaw,
    NonNegativeDrift,
    NonPositiveDrift,
)
from .exact_oracle import (
    brute_force_joint,
    conditional_tables,
    joint_grid,
    m_tau_marginals,
    tau_marginals,
)
from .ladder import build_ladder, q_constant
from .montecarlo import direct_estimate_max, importance_estimate_max, importance_joint_histogram
from .walk_model import IncrementLaw, build_model, validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_NUMERIC = 4

COMMANDS = ("params", "compare", "simulate", "exact", "constants")
ALIASES = {"theta-local": "theta", "theta-tau-local": "tau-theta", "tau-local": "tau"}


@dataclass
class RunConfig:
    command: str
    law: str
    x: list[int] | None = None
    k: list[int] | None = None
    n: list[int] | None = None
    formula: str = "joint"
    samples: int = 100_000
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    z: int = 0
    y: int = 0
    r_max: int = 30
    sigmas: float = 3.0
    n_max: int = 12
    method: str = "dp"
    table: str = "summary"
    mode: str = "importance"
    walk: str = "tilted"
    workers: int = 1
    tolerances: dict = field(default_factory=lambda: {"ladder": 1e-13})

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for name in ("x", "k", "n"):
            val = getattr(self, name)
            if val is not None and len(val) == 0:
                raise ConfigError(f"range --{name} is empty")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if any(not (isinstance(t, (int, float)) and t > 0) for t in self.tolerances.values()):
            raise ConfigError("tolerances must be positive numbers")
        if self.samples < 2:
            raise ConfigError("--samples must be at least 2")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        doc = _loads(text, "<config>")
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _loads(text: str, origin: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{origin}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def parse_range(text: str) -> list[int]:
    """'40', '20,40,60', '20:60' or '20:60:10' (inclusive)."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            lo, hi, step = parts
            if step <= 0:
                raise ValueError
            out = list(range(lo, hi + 1, step))
        else:
            out = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}") from None
    if not out:
        raise ConfigError(f"range {text!r} is empty")
    return out


def load_law(path: str) -> IncrementLaw:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read law file {path}: {exc.strerror}") from None
    doc = _loads(text, path)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object with 'support' and 'probs'")
    for key in ("support", "probs"):
        if key not in doc:
            raise ConfigError(f"{path}: missing field {key!r}")
        if not isinstance(doc[key], list):
            raise ConfigError(f"{path}: field {key!r} must be a list")
    try:
        return validate(doc["support"], doc["probs"])
    except InvalidLaw as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad entry ({exc})") from None


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _num(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def header_info(law: IncrementLaw, seed: int | None = None) -> dict:
    info = {"tool": "excursion", "version": __version__, "law_fingerprint": law.fingerprint, "law": law.to_dict()}
    if law.mean < 0:
        info["profile"] = build_model(law).profile.to_dict()
    else:
        info["profile"] = {"mean": law.mean, "variance": law.variance}
    if seed is not None:
        info["seed"] = seed
    return info


def _csv_header(info: dict) -> str:
    lines = [f"# tool: {info['tool']} {info['version']}", f"# law_fingerprint: {info['law_fingerprint']}"]
    lines.append("# law: " + json.dumps(info["law"], separators=(",", ":")))
    lines.append("# profile: " + ", ".join(f"{k}={_num(v)}" for k, v in info["profile"].items()))
    if "seed" in info:
        lines.append(f"# seed: {info['seed']}")
    return "\n".join(lines) + "\n"


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def _emit(cfg: RunConfig, info: dict, columns, rows, extra: dict | None = None, comment: str = "") -> str:
    if cfg.format == "json":
        doc = {"header": info, "columns": list(columns), "rows": [list(r) for r in rows]}
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=1, default=_json_default) + "\n"
    return _csv_header(info) + _csv(columns, rows) + comment


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_params(cfg: RunConfig) -> str:
    law = load_law(cfg.law)
    model = build_model(law)
    prof = model.profile
    q = q_constant(model, cfg.tolerances.get("ladder", 1e-13))
    report = {
        "header": header_info(law),
        "profile": prof.to_dict(),
        "Q": q.to_dict(),
        "residuals": {
            "phi(lambda)-1": law.mgf(prof.lam) - 1.0,
            "E[X exp(mu X)]": law.mgf_d1(prof.mu),
        },
    }
    if cfg.format == "json":
        return json.dumps(report, indent=2) + "\n"
    rows = [(k, v) for k, v in prof.to_dict().items()]
    rows += [(k, v) for k, v in q.to_dict().items()]
    rows += [(k, v) for k, v in report["residuals"].items()]
    return _csv_header(report["header"]) + _csv(["name", "value"], rows)


def _compare_one(cfg: RunConfig, law: IncrementLaw) -> list[cmp.Comparison]:
    f = ALIASES.get(cfg.formula, cfg.formula)
    if f in ("joint", "theta", "tau-theta", "tau"):
        model = build_model(law)
        xs = cfg.x or [40]
        if f == "joint":
            return [cmp.compare_joint(model, x, cfg.sigmas) for x in xs]
        return [cmp.compare_conditional(model, x, f) for x in xs]
    ns = cfg.n or [100]
    if f == "llt":
        return [cmp.compare_llt(law, n, cfg.z) for n in ns]
    if f == "max-end":
        return [cmp.compare_max_end(law, n, cfg.r_max) for n in ns]
    if f == "max":
        return [cmp.compare_max(law, n) for n in ns]
    if f == "snmax":
        return [cmp.compare_snmax(law, n, cfg.y, cfg.z) for n in ns]
    raise ConfigError(f"unknown formula {f!r}; choose from {', '.join(cmp.FORMULAS)}")


def cmd_compare(cfg: RunConfig) -> str:
    law = load_law(cfg.law)
    comps = _compare_one(cfg, law)
    rows = [r for c in comps for r in c.rows()]
    merged = cmp.Comparison(
        cfg.formula,
        np.concatenate([c.x for c in comps]),
        None,
        None,
        np.concatenate([c.exact for c in comps]),
        np.concatenate([c.approx for c in comps]),
        np.concatenate([c.regime_ok for c in comps]),
    )
    summary = merged.summary()
    info = header_info(law)
    info["formula"] = cfg.formula
    comment = "# summary: " + ", ".join(f"{k}={_num(v)}" for k, v in summary.items()) + "\n"
    cols = ["x", "k", "n", "exact", "approx", "rel_err", "regime_ok"]
    return _emit(cfg, info, cols, rows, {"summary": summary}, comment)


def cmd_simulate(cfg: RunConfig) -> str:
    law = load_law(cfg.law)
    model = build_model(law)
    info = header_info(law, cfg.seed)
    x = (cfg.x or [20])[0]
    if cfg.mode == "histogram":
        hist = importance_joint_histogram(model, x, cfg.samples, cfg.seed, cfg.workers)
        rows = [(k, j, w) for (k, j), w in sorted(hist.table().items())]
        return _emit(cfg, info, ["k", "j", "weight"], rows, {"x": x, "n_retained": hist.n_retained})
    if cfg.mode == "importance":
        est = importance_estimate_max(model, x, cfg.samples, cfg.seed, cfg.workers)
    elif cfg.mode == "direct":
        est = direct_estimate_max(model, x, cfg.samples, cfg.seed, cfg.workers)
    else:
        raise ConfigError(f"unknown simulate mode {cfg.mode!r}")
    if cfg.format == "json":
        return json.dumps({"header": info, "x": x, "mode": cfg.mode, "estimate": est.to_dict()}, indent=2) + "\n"
    lo, hi = est.ci95
    row = (x, cfg.mode, est.mean, est.std_error, lo, hi, est.n_samples, est.seed)
    return _csv_header(info) + _csv(["x", "mode", "mean", "std_error", "ci_lo", "ci_hi", "n_samples", "seed"], [row])


def cmd_exact(cfg: RunConfig) -> str:
    law = load_law(cfg.law)
    model = build_model(law)
    info = header_info(law)
    if cfg.table == "conditional":
        rows = []
        for x in cfg.x or [20]:
            ct = conditional_tables(model, x)
            rows += [(x, k, v) for k, v in enumerate(ct.theta.tolist()) if v > 0]
        return _emit(cfg, info, ["x", "k", "prob"], rows)
    if cfg.table == "m-marginal":
        x_cap = max(cfg.x or [60])
        vals, spill = m_tau_marginals(model, x_cap)
        info["spill_bound"] = spill
        return _emit(cfg, info, ["x", "prob"], list(enumerate(vals.tolist())), {"spill_bound": spill})
    if cfg.table == "tau-marginal":
        n_top = max(cfg.n or [cfg.n_max])
        vals = tau_marginals(model, n_top)
        return _emit(cfg, info, ["n", "prob"], list(enumerate(vals.tolist()))[1:])
    # joint grid over tau <= n_max
    n_max = cfg.n_max
    x_top = max(1, (n_max - 1) * law.max_step)
    if cfg.method == "brute":
        grid = brute_force_joint(model, n_max)
    elif cfg.method == "dp":
        grid = joint_grid(model, (0, x_top), (0, n_max), (0, n_max), workers=cfg.workers)
    else:
        raise ConfigError(f"unknown method {cfg.method!r}")
    x_lo = min(cfg.x) if cfg.x else 1
    x_hi = max(cfg.x) if cfg.x else x_top
    rows = []
    for (i, j, l), v in np.ndenumerate(grid.values):
        x, k, n = grid.x_range[0] + i, grid.k_range[0] + j, grid.n_range[0] + l
        if v > 0 and x_lo <= x <= x_hi:
            rows.append((x, k, n, float(v)))
    return _emit(cfg, info, ["x", "k", "n", "value"], rows)


def cmd_constants(cfg: RunConfig) -> str:
    law = load_law(cfg.law)
    if law.mean < 0:
        model = build_model(law)
        if cfg.walk not in ("tilted", "reversed"):
            raise ConfigError("--walk must be tilted or reversed for a negative-drift law")
        walk = model.tilted if cfg.walk == "tilted" else model.reversed
    else:
        walk = law
    tab = build_ladder(walk, cfg.tolerances.get("ladder", 1e-13))
    info = header_info(law)
    info["walk"] = walk.to_dict()
    if cfg.table == "h":
        return _emit(cfg, info, ["z", "h(z)"], list(enumerate(tab.h.tolist())))
    if cfg.table == "V":
        return _emit(cfg, info, ["r", "V(r)"], list(enumerate(tab.V.tolist())))
    summary = {
        "h(0)": float(tab.h[0]),
        "1/h(0)": 1.0 / float(tab.h[0]),
        "sum_V": float(math.fsum(tab.V)),
        "e_tau_plus": tab.e_tau_plus,
        "lundberg_gamma": tab.lundberg_gamma,
        "trunc_error": tab.trunc_error,
        "z_max": tab.z_max,
        "r_max": len(tab.V) - 1,
    }
    if cfg.format == "json":
        return json.dumps({"header": info, "summary": summary}, indent=2) + "\n"
    return _csv_header(info) + _csv(["name", "value"], list(summary.items()))


HANDLERS = {
    "params": cmd_params,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
    "exact": cmd_exact,
    "constants": cmd_constants,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="excursion", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"excursion {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--law", help="JSON file with 'support' and 'probs'")
    common.add_argument("--config", help="RunConfig JSON; replaces every option except --out")
    common.add_argument("--save-config", help="write the resolved RunConfig JSON here")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--x", type=parse_range)
    common.add_argument("--k", type=parse_range)
    common.add_argument("--n", type=parse_range)
    common.add_argument("--seed", type=int, default=0)

    sub.add_parser("params", parents=[common], help="Cramér constants and Q")
    p = sub.add_parser("compare", parents=[common], help="exact vs asymptotic tables")
    p.add_argument("--formula", choices=cmp.FORMULAS + tuple(ALIASES), default="joint")
    p.add_argument("--z", type=int, default=0)
    p.add_argument("--y", type=int, default=0)
    p.add_argument("--r-max", type=int, default=30)
    p.add_argument("--sigmas", type=float, default=3.0)
    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimates")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--mode", choices=("importance", "direct", "histogram"), default="importance")
    p = sub.add_parser("exact", parents=[common], help="oracle tables")
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--method", choices=("dp", "brute"), default="dp")
    p.add_argument("--table", choices=("joint", "conditional", "m-marginal", "tau-marginal"), default="joint")
    p = sub.add_parser("constants", parents=[common], help="ladder tables h, V")
    p.add_argument("--table", choices=("summary", "h", "V"), default="summary")
    p.add_argument("--walk", choices=("tilted", "reversed"), default="tilted")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.config:
        try:
            cfg = RunConfig.from_json(Path(ns.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc.strerror}") from None
        if ns.out:
            cfg.out = ns.out
        return cfg
    if not ns.law:
        raise ConfigError("--law is required")
    known = {f.name for f in fields(RunConfig)}
    kwargs = {k: v for k, v in vars(ns).items() if k in known and v is not None}
    return RunConfig(**kwargs)


def run(argv: list[str] | None = None) -> tuple[int, str]:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if ns.save_config:
            Path(ns.save_config).write_text(cfg.to_json() + "\n")
        text = HANDLERS[cfg.command](cfg)
    except (ConfigError, NonNegativeDrift, NonPositiveDrift) as exc:
        return EXIT_CONFIG, f"config error: {exc}"
    except BudgetExceeded as exc:
        return EXIT_BUDGET, f"budget exceeded: {exc}"
    except (ConvergenceFailure, DegenerateConditioning, ArithmeticError) as exc:
        return EXIT_NUMERIC, f"numeric failure: {exc}"
    except ExcursionError as exc:
        return EXIT_NUMERIC, f"error: {exc}"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK, ""


def main(argv: list[str] | None = None) -> int:
    code, msg = run(argv)
    if msg:
        print(msg, file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
