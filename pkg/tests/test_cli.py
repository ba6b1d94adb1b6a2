import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from excursion import __version__
from excursion.cli import (
    EXIT_BUDGET,
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    RunConfig,
    main,
    parse_range,
    run,
)
from excursion.errors import ConfigError


@pytest.fixture(scope="module")
def law_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("laws")
    paths = {}
    for name, probs in {"dstar": [0.5, 0.3, 0.2], "asym": [0.6, 0.2, 0.2], "pos": [0.2, 0.3, 0.5]}.items():
        p = d / f"{name}.json"
        p.write_text(json.dumps({"support": [-1, 0, 1], "probs": probs}))
        paths[name] = str(p)
    return paths


def invoke(argv):
    code, _ = run(argv)
    return code


def output(argv, tmp_path, name="out.txt"):
    out = tmp_path / name
    code, msg = run(argv + ["--out", str(out)])
    assert code == EXIT_OK, msg
    return out.read_text()


def table(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def comments(text):
    return [line for line in text.splitlines() if line.startswith("#")]


class TestParams:
    def test_values(self, law_files, tmp_path):
        doc = json.loads(output(["params", "--law", law_files["dstar"], "--format", "json"], tmp_path))
        assert doc["profile"]["lambda"] == pytest.approx(math.log(2.5), abs=1e-9)
        assert doc["Q"]["Q"] == pytest.approx(0.0265574, abs=1e-7)
        assert abs(doc["residuals"]["phi(lambda)-1"]) < 1e-12

    def test_byte_identical(self, law_files, tmp_path):
        a = output(["params", "--law", law_files["asym"]], tmp_path, "a")
        b = output(["params", "--law", law_files["asym"]], tmp_path, "b")
        assert a == b

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"support": [-1, 0, 1],\n "probs": [0.5, 0.3 0.2]}')
        assert main(["params", "--law", str(bad)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert f"{bad}:2:" in err

    def test_missing_field(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"support": [-1, 0, 1]}')
        assert main(["params", "--law", str(bad)]) == EXIT_CONFIG
        assert "'probs'" in capsys.readouterr().err

    def test_invalid_law(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"support": [-1, 1], "probs": [0.6, 0.4]}')
        assert invoke(["params", "--law", str(bad)]) == EXIT_CONFIG

    def test_wrong_drift(self, law_files):
        assert invoke(["params", "--law", law_files["pos"]]) == EXIT_CONFIG

    def test_missing_file(self, tmp_path):
        assert invoke(["params", "--law", str(tmp_path / "nope.json")]) == EXIT_CONFIG

    def test_header(self, law_files, tmp_path):
        from excursion.walk_model import law_from_json
        from pathlib import Path

        text = output(["simulate", "--law", law_files["dstar"], "--x", "5", "--samples", "500", "--seed", "9"], tmp_path)
        head = "\n".join(comments(text))
        fp = law_from_json(Path(law_files["dstar"]).read_text()).fingerprint
        assert fp in head and __version__ in head and "# seed: 9" in head and "lambda=" in head


class TestCompare:
    def test_joint_box(self, law_files, tmp_path):
        text = output(["compare", "--law", law_files["dstar"], "--formula", "joint", "--x", "40", "--sigmas", "5"], tmp_path)
        rows = table(text)
        assert len(rows) > 0 and set(rows[0]) == {"x", "k", "n", "exact", "approx", "rel_err", "regime_ok"}
        summary = comments(text)[-1]
        assert summary.startswith("# summary:")
        med = float(summary.split("median_rel_err=")[1])
        assert math.isfinite(med)

    def test_summary_decreases(self, law_files, tmp_path):
        meds = []
        for x in (20, 60):
            text = output(["compare", "--law", law_files["dstar"], "--x", str(x), "--format", "json"], tmp_path)
            meds.append(json.loads(text)["summary"]["median_rel_err"])
        assert meds[1] < meds[0]

    def test_tau_local(self, law_files, tmp_path):
        rows = table(output(["compare", "--law", law_files["dstar"], "--formula", "tau-local", "--x", "30"], tmp_path))
        approx = np.array([float(r["approx"]) for r in rows])
        ns = np.array([int(r["n"]) for r in rows])
        assert ns[np.argmax(approx)] == 200

    @pytest.mark.parametrize("formula", ["llt", "max-end", "max", "snmax"])
    def test_positive_formulas(self, law_files, tmp_path, formula):
        rows = table(output(["compare", "--law", law_files["pos"], "--formula", formula, "--n", "50", "--y", "1", "--z", "1"], tmp_path))
        assert rows and all(0 <= float(r["exact"]) <= 1 for r in rows)

    def test_wrong_drift(self, law_files):
        assert invoke(["compare", "--law", law_files["dstar"], "--formula", "llt", "--n", "10"]) == EXIT_CONFIG

    def test_unknown_formula_is_usage_error(self, law_files):
        with pytest.raises(SystemExit) as e:
            run(["compare", "--law", law_files["dstar"], "--formula", "nonsense"])
        assert e.value.code == 2


class TestExact:
    def test_matches_brute_force(self, law_files, tmp_path):
        dp = table(output(["exact", "--law", law_files["dstar"], "--n-max", "12"], tmp_path, "dp"))
        bf = table(output(["exact", "--law", law_files["dstar"], "--n-max", "12", "--method", "brute"], tmp_path, "bf"))
        to_map = lambda rows: {(r["x"], r["k"], r["n"]): float(r["value"]) for r in rows}
        a, b = to_map(dp), to_map(bf)
        keys = set(a) | set(b)
        assert len(keys) > 100
        assert max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys) <= 1e-14

    def test_budget_exit(self, law_files):
        assert invoke(["exact", "--law", law_files["dstar"], "--n-max", "20", "--method", "brute"]) == EXIT_BUDGET

    def test_tables(self, law_files, tmp_path):
        rows = table(output(["exact", "--law", law_files["dstar"], "--table", "m-marginal", "--x", "10"], tmp_path))
        assert float(rows[1]["prob"]) == pytest.approx(1 / 7, abs=1e-15)
        rows = table(output(["exact", "--law", law_files["dstar"], "--table", "tau-marginal", "--n", "5"], tmp_path))
        assert float(rows[0]["prob"]) == pytest.approx(0.8, abs=1e-15)
        rows = table(output(["exact", "--law", law_files["dstar"], "--table", "conditional", "--x", "6"], tmp_path))
        assert sum(float(r["prob"]) for r in rows) == pytest.approx(1, abs=1e-12)


class TestSimulate:
    args = ["simulate", "--x", "12", "--samples", "9000", "--seed", "123"]

    def test_bit_identical(self, law_files, tmp_path):
        a = output(self.args + ["--law", law_files["dstar"]], tmp_path, "a")
        b = output(self.args + ["--law", law_files["dstar"], "--workers", "3"], tmp_path, "b")
        assert a == b

    def test_histogram(self, law_files, tmp_path):
        rows = table(output(["simulate", "--law", law_files["dstar"], "--x", "6", "--mode", "histogram", "--samples", "20000"], tmp_path))
        assert set(rows[0]) == {"k", "j", "weight"}
        assert sum(float(r["weight"]) for r in rows) == pytest.approx(1, abs=1e-12)

    def test_json(self, law_files, tmp_path):
        doc = json.loads(output(self.args + ["--law", law_files["dstar"], "--format", "json"], tmp_path))
        assert doc["estimate"]["seed"] == 123 and doc["estimate"]["n_samples"] == 9000

    def test_numeric_failure_exit(self, law_files):
        code = invoke(["simulate", "--law", law_files["dstar"], "--x", "9", "--mode", "histogram", "--samples", "50"])
        assert code == EXIT_NUMERIC


class TestConstants:
    def test_identity(self, law_files, tmp_path):
        doc = json.loads(output(["constants", "--law", law_files["pos"], "--format", "json"], tmp_path))
        s = doc["summary"]
        assert abs(s["sum_V"] - s["1/h(0)"]) <= s["trunc_error"]
        assert s["e_tau_plus"] == pytest.approx(10 / 3, abs=1e-10)

    def test_tables(self, law_files, tmp_path):
        rows = table(output(["constants", "--law", law_files["dstar"], "--table", "h", "--walk", "reversed"], tmp_path))
        assert float(rows[1]["h(z)"]) == pytest.approx(0.6, abs=1e-12)
        rows = table(output(["constants", "--law", law_files["pos"], "--table", "V"], tmp_path))
        assert float(rows[0]["V(r)"]) >= 1.49


class TestConfig:
    def test_roundtrip_file(self, law_files, tmp_path):
        cfg = tmp_path / "cfg.json"
        a = output(["compare", "--law", law_files["asym"], "--formula", "theta", "--x", "12", "--save-config", str(cfg)], tmp_path, "a")
        b = output(["compare", "--config", str(cfg)], tmp_path, "b")
        assert a == b

    def test_malformed_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"command": "params",\n "law": }')
        assert invoke(["params", "--config", str(cfg)]) == EXIT_CONFIG

    @given(
        st.sampled_from(["params", "compare", "simulate", "exact", "constants"]),
        st.none() | st.lists(st.integers(-5, 500), min_size=1, max_size=5),
        st.integers(0, 2**63 - 1),
        st.floats(1e-16, 1.0),
        st.sampled_from(["csv", "json"]),
    )
    def test_lossless(self, command, xs, seed, tol, fmt):
        cfg = RunConfig(command, "law.json", x=xs, seed=seed, format=fmt, tolerances={"ladder": tol})
        assert RunConfig.from_json(cfg.to_json()) == cfg

    def test_invariants(self):
        with pytest.raises(ConfigError):
            RunConfig("params", "law.json", x=[])
        with pytest.raises(ConfigError):
            RunConfig("params", "law.json", tolerances={"ladder": 0.0})
        with pytest.raises(ConfigError):
            RunConfig("bogus", "law.json")
        with pytest.raises(ConfigError):
            RunConfig.from_json('{"command": "params", "law": "x", "colour": 1}')


@pytest.mark.parametrize(
    "text, expect",
    [("7", [7]), ("1,3,5", [1, 3, 5]), ("2:5", [2, 3, 4, 5]), ("20:60:20", [20, 40, 60])],
)
def test_parse_range(text, expect):
    assert parse_range(text) == expect


@pytest.mark.parametrize("text", ["", "a", "5:1", "1:5:0"])
def test_parse_range_rejects(text):
    with pytest.raises(ConfigError):
        parse_range(text)
