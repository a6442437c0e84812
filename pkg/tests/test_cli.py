import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strausslab.cli import ConfigError, execute, main, parse_config
from strausslab.radial_wave import InitialData, Profile, homogeneous_solution


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _read_solution(path):
    with open(path) as fh:
        header = fh.readline()
        rows = list(csv.DictReader(fh))
    return header, rows


def test_minimal_classify_defaults():
    cfg = parse_config('{"command":"classify","modulus":{"family":"iterated_log","k":2}}')
    assert cfg.grid["h"] == 0.01
    assert cfg.grid["U_max"] == 1e8
    assert cfg.testfunc["quad_tol"] == 1e-8
    assert cfg.modulus["k"] == 2


@pytest.mark.parametrize("bad, path", [
    ({"command": "classify", "modulus": {"family": "iterated_log", "k": 0}}, "config.modulus.k"),
    ({"command": "solve", "grid": {"h": -1}}, "config.grid.h"),
    ({"command": "solve", "grid": {"dt": 0.1}}, "config.grid.dt"),
    ({"command": "solve", "colour": 1}, "config.colour"),
    ({"command": "solve", "data": {"u1": {"kind": "bump", "width": 2}}}, "config.data.u1.width"),
    ({"command": "functional", "testfunc": {"k": 0}}, "config.testfunc.k"),
    ({"command": "launch"}, "config.command"),
])
def test_rejections_carry_field_path(bad, path):
    with pytest.raises(ConfigError, match=path.replace(".", r"\.").replace("[", r"\[")):
        parse_config(bad)


def test_not_json():
    with pytest.raises(ConfigError):
        parse_config("{command: classify")


configs = st.fixed_dictionaries({
    "command": st.sampled_from(["classify", "solve", "functional", "iterate", "verify"]),
    "modulus": st.one_of(
        st.builds(lambda k: {"family": "iterated_log", "k": k}, st.integers(1, 3)),
        st.builds(lambda g, c: {"family": "power_log", "gamma": g, "c_l": c},
                  st.floats(0.1, 2.0), st.floats(0.5, 3.0)),
        st.just({"family": "zero"})),
    "grid": st.fixed_dictionaries({"h": st.floats(1e-3, 0.1), "T_max": st.floats(0.1, 5.0)}),
    "data": st.fixed_dictionaries({"eps": st.floats(0.0, 20.0)}),
    "testfunc": st.fixed_dictionaries({"k": st.integers(1, 3)}),
})


@given(configs)
def test_round_trip(raw):
    cfg = parse_config(raw)
    again = parse_config(cfg.dumps())
    assert again.to_dict() == cfg.to_dict()
    assert again.dumps() == cfg.dumps()


def test_classify_probe(tmp_path):
    cfg = {"command": "classify", "modulus": {"family": "iterated_log", "k": 1},
           "classify": {"lambda0": math.exp(-2)}}
    assert main(["--config", _write(tmp_path, cfg), "--output", str(tmp_path / "out")]) == 0
    d = json.loads((tmp_path / "out" / "classification.json").read_text())
    assert d["classification"] == "divergent"
    partial = dict((round(t), v) for t, v in d["partial_values"])[100]
    assert partial == pytest.approx(math.log(50), abs=1e-6)
    assert d["value_if_convergent"] is None
    assert {"c_str", "decay"} <= set(d)
    assert (tmp_path / "out" / "config.json").exists()


def test_config_error_writes_nothing(tmp_path):
    out = tmp_path / "out"
    cfg = {"command": "classify", "modulus": {"family": "iterated_log", "k": 0}}
    assert main(["--config", _write(tmp_path, cfg), "--output", str(out)]) == 1
    assert not out.exists()
    assert main(["--config", str(tmp_path / "missing.json"), "--output", str(out)]) == 1
    # a config problem found at run time leaves no directory behind either
    cfg = {"command": "iterate", "modulus": {"family": "power_log", "gamma": 1.0}}
    assert main(["--config", _write(tmp_path, cfg), "--output", str(out)]) == 1
    assert not out.exists()


def test_numerical_failure_removes_artifacts(tmp_path):
    out = tmp_path / "out"
    cfg = {"command": "solve", "solve": {"scheme": "picard", "n_iter": 8},
           "data": {"eps": 40.0, "u1": {"kind": "bump", "radius": 2.0}},
           "grid": {"h": 0.05, "T_max": 2.0}}
    assert main(["--config", _write(tmp_path, cfg), "--output", str(out)]) == 2
    assert not out.exists() or not any(out.iterdir())


def test_solve_linear_matches_exact(tmp_path):
    errs = []
    for h in (0.04, 0.02):
        out = tmp_path / f"h{h}"
        cfg = {"command": "solve", "modulus": {"family": "zero"}, "grid": {"h": h, "T_max": 1.0},
               "solve": {"csv_every": int(round(0.2 / h))}}
        assert execute(parse_config(cfg), out) == 0
        header, rows = _read_solution(out / "solution.csv")
        assert header.startswith("# h=") and "scheme=leapfrog" in header
        t = np.array([float(r["t"]) for r in rows])
        r = np.array([float(r_["r"]) for r_ in rows])
        u = np.array([float(r_["u"]) for r_ in rows])
        data = InitialData(Profile.zero(), Profile.bump(), 1.0)
        ref = np.array([homogeneous_solution(data, ti, ri) for ti, ri in zip(t, r)])
        errs.append(np.abs(u - ref).max())
        assert not (out / "blowup.json").exists()
    assert errs[1] < errs[0] / 3


def test_solve_blowup_json(tmp_path):
    cfg = {"command": "solve", "data": {"eps": 10.0, "u1": {"kind": "bump", "radius": 2.0}},
           "grid": {"h": 0.02, "T_max": 3.0}, "solve": {"csv_every": 50}}
    assert execute(parse_config(cfg), tmp_path) == 0
    ev = json.loads((tmp_path / "blowup.json").read_text())
    assert 0 < ev["t_star"] < 3.0


def test_iterate_at_t0(tmp_path):
    cfg = {"command": "iterate", "modulus": {"family": "iterated_log", "k": 1},
           "iterate": {"B_k": 100.0, "C_k": 10.0}}
    assert execute(parse_config(cfg), tmp_path) == 0
    est = json.loads((tmp_path / "blowup_estimate.json").read_text())
    assert est["C_tilde_inf"] >= 0
    assert est["at_t0"] and est["onset_level"] == 2.0


def test_iterate_toy(tmp_path):
    cfg = {"command": "iterate", "iterate": {"k": 1, "c_tilde_inf": -5.0}}
    assert execute(parse_config(cfg), tmp_path) == 0
    est = json.loads((tmp_path / "blowup_estimate.json").read_text())
    assert est["onset_representation"] == "LogLog"
    assert est["onset_value"] == pytest.approx(242.3, abs=0.1)


def test_functional_command(tmp_path):
    cfg = {"command": "functional", "grid": {"h": 0.02, "T_max": 1.0}}
    assert execute(parse_config(cfg), tmp_path) == 0
    lines = (tmp_path / "functional.csv").read_text().splitlines()
    assert lines[0] == "t,H,U,W1,residual"
    rep = json.loads((tmp_path / "functional_report.json").read_text())
    assert all(e["relative"] < 1e-2 for e in rep["identity"])
    assert all(e["margin"] >= 0 for e in rep["jensen"])


def test_verify_command(tmp_path):
    assert execute(parse_config({"command": "verify"}), tmp_path) == 0
    text = (tmp_path / "verify_summary.txt").read_text()
    assert "FAIL" not in text and text.count("PASS") >= 5


def test_determinism(tmp_path):
    cfg = {"command": "solve", "data": {"eps": 2.0}, "grid": {"h": 0.02, "T_max": 0.6}}
    path = _write(tmp_path, cfg)
    for name in ("a", "b"):
        assert main(["--config", path, "--output", str(tmp_path / name), "--threads", "1"]) == 0
    for f in ("solution.csv", "config.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_bad_threads(tmp_path):
    path = _write(tmp_path, {"command": "verify"})
    assert main(["--config", path, "--threads", "0"]) == 1
