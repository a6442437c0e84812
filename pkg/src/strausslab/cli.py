"""Batch front-end: ``strausslab --config run.json --output out/``.

Exit status: 0 on success, 1 on a configuration error (nothing written),
2 on a numerical failure (partial artifacts removed).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

COMMANDS = ("classify", "solve", "functional", "iterate", "verify")


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# -- schema -------------------------------------------------------------------

DEFAULTS = {
    "grid": {"h": 0.01, "T_max": 1.0, "r_max": None, "U_max": 1e8, "store_every": 1},
    "data": {"u0": {"kind": "zero"}, "u1": {"kind": "bump", "amplitude": 1.0, "radius": 1.0, "power": 3},
             "eps": 1.0},
    "testfunc": {"k": 1, "quad_tol": 1e-8, "shift": None},
    "classify": {"lambda0": None, "tau0": None, "tau_floors": None, "band": 0.05},
    "solve": {"scheme": "leapfrog", "n_iter": 6, "csv_every": 1},
    "functional": {"times": None, "residual": True},
    "iterate": {"k": None, "B_k": 1.0, "C_k": 1.0, "L_k": 1.0, "A_k": 1.0, "t0_level": 2.0,
                "c_tilde_inf": None},
    "verify": {"quick": True},
}
TOP_KEYS = {"command", "modulus", "output_dir", *DEFAULTS}
PROFILE_KEYS = {"kind", "amplitude", "radius", "power"}


def _merge(section: str, given) -> dict:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"config.{section}: expected an object")
    base = copy.deepcopy(DEFAULTS[section])
    unknown = set(given) - set(base)
    if unknown:
        raise ConfigError(f"config.{section}.{sorted(unknown)[0]}: unknown key")
    base.update(given)
    return base


def _positive(path, v, allow_none=False):
    if v is None and allow_none:
        return
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v) or v <= 0:
        raise ConfigError(f"{path}: must be a positive number, got {v!r}")


def _int_at_least(path, v, lo):
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        raise ConfigError(f"{path}: must be an integer >= {lo}, got {v!r}")


def _profile(path, d):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(d) - PROFILE_KEYS
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}: unknown key")
    kind = d.get("kind")
    if kind not in ("zero", "constant", "bump"):
        raise ConfigError(f"{path}.kind: must be zero, constant or bump")
    out = {"kind": kind}
    if kind == "constant":
        out["amplitude"] = float(d.get("amplitude", 1.0))
    elif kind == "bump":
        out["amplitude"] = float(d.get("amplitude", 1.0))
        out["radius"] = float(d.get("radius", 1.0))
        out["power"] = d.get("power", 3)
        _positive(f"{path}.radius", out["radius"])
        _int_at_least(f"{path}.power", out["power"], 1)
    return out


@dataclass
class ExperimentConfig:
    command: str
    modulus: dict
    data: dict
    grid: dict
    testfunc: dict
    options: dict = field(default_factory=dict)  # all command sections
    output_dir: str = "."

    def to_dict(self) -> dict:
        d = {"command": self.command, "modulus": self.modulus, "data": self.data,
             "grid": self.grid, "testfunc": self.testfunc, "output_dir": self.output_dir}
        d.update(self.options)
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    # constructed objects
    def modulus_spec(self):
        from .modulus import ModulusSpec
        return ModulusSpec.from_dict(self.modulus)

    def initial_data(self):
        from .radial_wave import InitialData, Profile
        return InitialData(Profile.from_dict(self.data["u0"]), Profile.from_dict(self.data["u1"]),
                           float(self.data["eps"]))

    def grid_obj(self):
        from .radial_wave import CharacteristicGrid
        g = self.grid
        return CharacteristicGrid(g["h"], g["T_max"], g["r_max"])

    def testfunc_params(self):
        from .testfunc import TestFunctionParams
        t = self.testfunc
        return TestFunctionParams(t["k"], t["quad_tol"], t["shift"])


def parse_config(text: str | dict) -> ExperimentConfig:
    """Validate a JSON config document and fill in defaults."""
    if isinstance(text, str):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: not valid JSON ({exc})") from None
    else:
        raw = copy.deepcopy(text)
    if not isinstance(raw, dict):
        raise ConfigError("config: expected an object")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"config.{sorted(unknown)[0]}: unknown key")
    cmd = raw.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"config.command: must be one of {', '.join(COMMANDS)}")

    mod = raw.get("modulus", {"family": "iterated_log", "k": 1})
    if not isinstance(mod, dict):
        raise ConfigError("config.modulus: expected an object")
    if "k" in mod:
        _int_at_least("config.modulus.k", mod["k"], 1)
    try:
        from .modulus import ModulusSpec
        spec = ModulusSpec.from_dict(mod)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config.modulus: {exc}") from None
    mod = spec.to_dict()

    grid = _merge("grid", raw.get("grid"))
    _positive("config.grid.h", grid["h"])
    _positive("config.grid.T_max", grid["T_max"])
    _positive("config.grid.r_max", grid["r_max"], allow_none=True)
    _positive("config.grid.U_max", grid["U_max"])
    _int_at_least("config.grid.store_every", grid["store_every"], 1)
    if grid["T_max"] / grid["h"] > 1e6:
        raise ConfigError("config.grid: more than 1e6 time steps")

    data = _merge("data", raw.get("data"))
    data["u0"] = _profile("config.data.u0", data["u0"])
    data["u1"] = _profile("config.data.u1", data["u1"])
    if not isinstance(data["eps"], (int, float)) or not math.isfinite(data["eps"]) or data["eps"] < 0:
        raise ConfigError("config.data.eps: must be a non-negative number")
    data["eps"] = float(data["eps"])

    tf = _merge("testfunc", raw.get("testfunc"))
    _int_at_least("config.testfunc.k", tf["k"], 1)
    if tf["k"] > 3:
        raise ConfigError("config.testfunc.k: must be <= 3")
    _positive("config.testfunc.quad_tol", tf["quad_tol"])
    if tf["quad_tol"] > 1e-2:
        raise ConfigError("config.testfunc.quad_tol: must be <= 1e-2")
    _positive("config.testfunc.shift", tf["shift"], allow_none=True)

    options = {}
    for sec in ("classify", "solve", "functional", "iterate", "verify"):
        options[sec] = _merge(sec, raw.get(sec))
    c = options["classify"]
    _positive("config.classify.lambda0", c["lambda0"], allow_none=True)
    _positive("config.classify.tau0", c["tau0"], allow_none=True)
    _positive("config.classify.band", c["band"])
    if c["tau_floors"] is not None:
        if not isinstance(c["tau_floors"], list) or not c["tau_floors"]:
            raise ConfigError("config.classify.tau_floors: expected a non-empty list")
        for i, v in enumerate(c["tau_floors"]):
            _positive(f"config.classify.tau_floors[{i}]", v)
    s = options["solve"]
    if s["scheme"] not in ("leapfrog", "picard"):
        raise ConfigError("config.solve.scheme: must be leapfrog or picard")
    _int_at_least("config.solve.n_iter", s["n_iter"], 1)
    _int_at_least("config.solve.csv_every", s["csv_every"], 1)
    f = options["functional"]
    if f["times"] is not None:
        if not isinstance(f["times"], list):
            raise ConfigError("config.functional.times: expected a list")
        for i, v in enumerate(f["times"]):
            _positive(f"config.functional.times[{i}]", v)
    it = options["iterate"]
    if it["k"] is not None:
        _int_at_least("config.iterate.k", it["k"], 1)
    for key in ("B_k", "C_k", "L_k", "A_k", "t0_level"):
        _positive(f"config.iterate.{key}", it[key])
    out_dir = raw.get("output_dir", ".")
    if not isinstance(out_dir, str):
        raise ConfigError("config.output_dir: expected a string")
    return ExperimentConfig(cmd, mod, data, grid, tf, options, out_dir)


# -- execution ----------------------------------------------------------------


def _finite(obj):
    """Replace non-finite floats by None so the JSON stays strict."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


class _Artifacts:
    def __init__(self, root: Path):
        self.root = root
        self.paths: list[Path] = []
        self.created = False

    def open_root(self) -> None:
        self.created = not self.root.exists()
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.root / name
        self.paths.append(p)
        return p

    def json(self, name: str, obj) -> None:
        with open(self.path(name), "w") as fh:
            json.dump(_finite(obj), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")

    def remove_all(self) -> None:
        for p in self.paths:
            if p.exists():
                p.unlink()
        if self.created and self.root.exists() and not any(self.root.iterdir()):
            self.root.rmdir()


def _classify(cfg: ExperimentConfig, art: _Artifacts) -> None:
    from .modulus import c_str_index, critical_integral, decay_predicates
    spec = cfg.modulus_spec()
    c = cfg.options["classify"]
    floors = tuple(float(v) for v in c["tau_floors"]) if c["tau_floors"] else None
    rep = critical_integral(spec, c["lambda0"], tau0=c["tau0"], tau_floors=floors, band=c["band"])
    out = rep.to_dict()
    out["modulus"] = spec.to_dict()
    try:
        out["c_str"] = c_str_index(spec)
    except ValueError as exc:
        out["c_str"] = None
        out["c_str_note"] = str(exc)
    flags = decay_predicates(spec)
    out["decay"] = {"satisfies_chen": flags.satisfies_chen, "satisfies_weak": flags.satisfies_weak}
    art.json("classification.json", out)


def _solve(cfg: ExperimentConfig, art: _Artifacts) -> None:
    from .radial_wave import PicardDivergenceError, picard_iterate, solve_leapfrog
    spec, data, grid = cfg.modulus_spec(), cfg.initial_data(), cfg.grid_obj()
    s = cfg.options["solve"]
    if s["scheme"] == "leapfrog":
        sol = solve_leapfrog(data, spec, grid, cfg.grid["U_max"], store_every=cfg.grid["store_every"])
    else:
        try:
            sol = picard_iterate(data, spec, grid.T_max, s["n_iter"], grid, cfg.grid["U_max"])
        except PicardDivergenceError as exc:
            raise NumericalFailure(str(exc)) from None
        art.json("picard_increments.json", {"increments": sol.increments})
    sol.write_csv(art.path("solution.csv"), every=s["csv_every"])
    if sol.blowup is not None:
        sol.blowup.write_json(art.path("blowup.json"))


def _functional(cfg: ExperimentConfig, art: _Artifacts) -> None:
    import numpy as np
    from .functional import functional_series, identity_residual, jensen_check, write_functional_csv
    from .radial_wave import solve_leapfrog
    spec, data, grid, params = cfg.modulus_spec(), cfg.initial_data(), cfg.grid_obj(), cfg.testfunc_params()
    sol = solve_leapfrog(data, spec, grid, cfg.grid["U_max"], store_every=1)
    f = cfg.options["functional"]
    last = sol.times[-2] if sol.blowup is not None and len(sol.times) > 1 else sol.times[-1]
    if f["times"] is None:
        idx = np.unique(np.linspace(0, np.searchsorted(sol.times, last), 6).round().astype(int))[1:]
        times = [float(sol.times[i]) for i in idx]
    else:
        times = [float(sol.times[np.argmin(np.abs(sol.times - t))]) for t in f["times"]]
        if max(times) > last + 1e-12:
            raise NumericalFailure("requested time beyond the solution horizon")
    use_res = f["residual"] and data.u0.is_zero
    samples = functional_series(sol, params, times, data if use_res else None)
    write_functional_csv(samples, art.path("functional.csv"))
    report = {"times": times, "identity": [], "jensen": []}
    for t in times:
        if use_res:
            ir = identity_residual(sol, params, data, t)
            report["identity"].append({"t": t, "lhs": ir.lhs, "data_term": ir.data_term,
                                       "duhamel_term": ir.duhamel_term, "residual": ir.residual,
                                       "relative": ir.relative})
        if spec.family != "zero":
            jr = jensen_check(sol, params, t)
            report["jensen"].append({"t": t, "margin": jr.margin, "u_max": jr.u_max,
                                     "convexity_violations": jr.convexity_violations})
    if sol.blowup is not None:
        report["blowup"] = sol.blowup.to_dict()
    art.json("functional_report.json", report)


def _iterate(cfg: ExperimentConfig, art: _Artifacts) -> None:
    from .iteration import FrameConstants, blowup_onset
    it = cfg.options["iterate"]
    spec = cfg.modulus_spec()
    k = it["k"] if it["k"] is not None else (int(spec.k) if spec.family == "iterated_log" else None)
    if k is None:
        raise ConfigError("config.iterate.k: needed unless the modulus is iterated_log")
    consts = FrameConstants(it["B_k"], it["C_k"], it["L_k"], it["A_k"], it["t0_level"])
    try:
        est = blowup_onset(consts, k, it["c_tilde_inf"])
    except ArithmeticError as exc:
        raise NumericalFailure(str(exc)) from None
    art.json("blowup_estimate.json", est.to_dict())


def _verify(cfg: ExperimentConfig, art: _Artifacts) -> None:
    from .verify import run_checks
    results = run_checks(quick=cfg.options["verify"]["quick"])
    art.json("verify_summary.json", {name: {"passed": ok, "detail": det} for name, ok, det in results})
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {det}" for name, ok, det in results]
    with open(art.path("verify_summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if not all(ok for _, ok, _ in results):
        raise NumericalFailure("invariant suite reported failures")


RUNNERS = {"classify": _classify, "solve": _solve, "functional": _functional,
           "iterate": _iterate, "verify": _verify}


def execute(cfg: ExperimentConfig, output: str | os.PathLike | None = None) -> int:
    """Run one command; return the exit status."""
    root = Path(output if output is not None else cfg.output_dir)
    art = _Artifacts(root)
    try:
        art.open_root()
        RUNNERS[cfg.command](cfg, art)
        art.json("config.json", cfg.to_dict())
    except ConfigError as exc:
        art.remove_all()
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        # verify keeps its summary so the failures can be inspected
        if cfg.command != "verify":
            art.remove_all()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, FloatingPointError, RuntimeError, ValueError) as exc:
        art.remove_all()
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="strausslab", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--output", help="output directory (overrides output_dir)")
    p.add_argument("--threads", type=int, default=1, help="BLAS/OpenMP threads")
    p.add_argument("--seed", type=int, default=None, help="reserved; all methods are deterministic")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return 1
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(args.threads)
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return execute(cfg, args.output)


if __name__ == "__main__":
    sys.exit(main())
