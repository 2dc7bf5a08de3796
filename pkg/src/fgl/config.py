"""Run configuration: parsing (TOML or JSON), validation and serialization.

Layout (TOML shown; JSON uses the same nesting)::

    [model]
    alpha = 1.5
    beta = [0.01, 0.01]     # a scalar applies to both fields
    eta = 0.01
    mu = 1.0
    zeta = 0.01
    gamma = [0.087, 0.087]
    a = -1.0                # optional, default -1
    b = 1.0                 # optional, default 1
    test_mode = false       # optional

    [grid]
    nx = 40

    [time]
    nt = 20
    T = 1.0

    [solver]                # optional
    tol = 1e-14
    max_iter = 200
    linear_solver = "auto"  # auto | dense | krylov

    [initial]               # optional, default preset "example2"
    preset = "gaussian"     # zero | example2 | example3 | gaussian
    center_u = -0.3
    center_v = 0.3
    width = 0.2
    amplitude = 0.1
    wavenumber = 0.0

    [output]                # optional
    directory = "out"
    snapshots = [0.5, 1.0]
    formats = ["csv"]
"""

from __future__ import annotations

import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .solver import ModelParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "parse_config", "parse_config_text", "config_to_dict", "dump_config", "initial_functions"]

PAIR_KEYS = ("beta", "eta", "mu", "zeta", "gamma")
PRESETS = ("zero", "example2", "example3", "gaussian")
SOLVERS = ("auto", "dense", "krylov")
FORMATS = ("csv",)
GAUSS_DEFAULTS = {"center_u": -0.3, "center_v": 0.3, "width": 0.2, "amplitude": 0.1, "wavenumber": 0.0}
ALLOWED = {
    "model": {"alpha", "a", "b", "test_mode", *PAIR_KEYS},
    "grid": {"nx"},
    "time": {"nt", "T"},
    "solver": {"tol", "max_iter", "linear_solver"},
    "initial": {"preset", *GAUSS_DEFAULTS},
    "output": {"directory", "snapshots", "formats"},
}
REQUIRED = {"model": {"alpha", *PAIR_KEYS}, "grid": {"nx"}, "time": {"nt", "T"}}


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    nx: int
    nt: int
    tol: float = 1e-14
    max_iter: int = 200
    linear_solver: str = "auto"
    initial: dict = field(default_factory=lambda: {"preset": "example2"})
    directory: str = "out"
    snapshots: tuple = ()
    formats: tuple = ("csv",)

    @property
    def T(self) -> float:
        return self.model.T


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _loads(text: str, fmt: str) -> dict:
    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"JSON parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    else:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"TOML parse error: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a table/object")
    return data


def _writable(directory: str) -> bool:
    p = Path(directory).resolve()
    while not p.exists():
        p = p.parent
    return p.is_dir() and os.access(p, os.W_OK)


def parse_config_text(text: str, fmt: str = "toml") -> RunConfig:
    """Parse and validate; every violation is collected before raising."""
    data = _loads(text, fmt)
    problems = []
    for sec in data:
        if sec not in ALLOWED:
            problems.append(f"unknown section [{sec}]")
    secs = {}
    for sec in ALLOWED:
        val = data.get(sec, {})
        if not isinstance(val, dict):
            problems.append(f"[{sec}] must be a table")
            val = {}
        for key in val:
            if key not in ALLOWED[sec]:
                problems.append(f"unknown key {sec}.{key}")
        for key in sorted(REQUIRED.get(sec, ())):
            if key not in val:
                problems.append(f"missing required key {sec}.{key}")
        secs[sec] = val

    m = secs["model"]
    kw = {}
    if "alpha" in m:
        if _is_num(m["alpha"]):
            kw["alpha"] = float(m["alpha"])
        else:
            problems.append(f"model.alpha must be a number, got {m['alpha']!r}")
    for key in PAIR_KEYS:
        if key not in m:
            continue
        v = m[key]
        if _is_num(v):
            v = [v, v]
        if isinstance(v, list) and len(v) == 2 and all(_is_num(x) for x in v):
            kw[f"{key}1"], kw[f"{key}2"] = float(v[0]), float(v[1])
        else:
            problems.append(f"model.{key} must be a number or a pair of numbers, got {v!r}")
    for key, default in (("a", -1.0), ("b", 1.0)):
        v = m.get(key, default)
        if _is_num(v):
            kw[key] = float(v)
        else:
            problems.append(f"model.{key} must be a number, got {v!r}")
    tm = m.get("test_mode", False)
    if not isinstance(tm, bool):
        problems.append(f"model.test_mode must be true or false, got {tm!r}")
        tm = False
    kw["test_mode"] = tm

    t = secs["time"]
    if "T" in t:
        if _is_num(t["T"]):
            kw["T"] = float(t["T"])
        else:
            problems.append(f"time.T must be a number, got {t['T']!r}")
    nt = t.get("nt")
    if nt is not None and not (_is_int(nt) and nt >= 1):
        problems.append(f"time.nt must be an integer >= 1, got {nt!r}")
    nx = secs["grid"].get("nx")
    if nx is not None and not (_is_int(nx) and nx >= 3):
        problems.append(f"grid.nx must be an integer >= 3, got {nx!r}")

    s = secs["solver"]
    tol = s.get("tol", 1e-14)
    if not (_is_num(tol) and tol > 0):
        problems.append(f"solver.tol must be a positive number, got {tol!r}")
    max_iter = s.get("max_iter", 200)
    if not (_is_int(max_iter) and max_iter >= 1):
        problems.append(f"solver.max_iter must be an integer >= 1, got {max_iter!r}")
    lin = s.get("linear_solver", "auto")
    if lin not in SOLVERS:
        problems.append(f"solver.linear_solver must be one of {SOLVERS}, got {lin!r}")

    ini = dict(secs["initial"])
    preset = ini.get("preset", "example2")
    if preset not in PRESETS:
        problems.append(f"initial.preset must be one of {PRESETS}, got {preset!r}")
    initial = {"preset": preset}
    if preset == "gaussian":
        for key, default in GAUSS_DEFAULTS.items():
            v = ini.get(key, default)
            if not _is_num(v):
                problems.append(f"initial.{key} must be a number, got {v!r}")
            else:
                initial[key] = float(v)
        if initial.get("width", 1.0) <= 0:
            problems.append("initial.width must be positive")
    else:
        for key in GAUSS_DEFAULTS:
            if key in ini:
                problems.append(f"initial.{key} only applies to the gaussian preset")

    o = secs["output"]
    directory = o.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        problems.append(f"output.directory must be a non-empty string, got {directory!r}")
    elif not _writable(directory):
        problems.append(f"output.directory {directory!r} is not writable")
    snaps = o.get("snapshots", [])
    if not (isinstance(snaps, list) and all(_is_num(x) and x >= 0 for x in snaps)):
        problems.append(f"output.snapshots must be a list of non-negative times, got {snaps!r}")
        snaps = []
    elif "T" in kw and any(x > kw["T"] for x in snaps):
        problems.append("output.snapshots must not exceed time.T")
    fmts = o.get("formats", ["csv"])
    if not (isinstance(fmts, list) and all(f in FORMATS for f in fmts)):
        problems.append(f"output.formats must be a list drawn from {FORMATS}, got {fmts!r}")
        fmts = ["csv"]

    model = None
    if not problems:
        try:
            model = ModelParams(**kw)
        except ConfigError as e:
            problems.extend(f"model: {p}" for p in e.problems)
    else:
        probe = {k: kw.get(k, 1.5 if k == "alpha" else 1.0) for k in ModelParams.__dataclass_fields__}
        probe.update(kw)
        try:
            ModelParams(**probe)
        except ConfigError as e:
            problems.extend(f"model: {p}" for p in e.problems if not _mentions_missing(p, kw))
        except TypeError:
            pass
    if problems:
        raise ConfigError(problems)
    return RunConfig(
        model=model,
        nx=int(nx),
        nt=int(nt),
        tol=float(tol),
        max_iter=int(max_iter),
        linear_solver=lin,
        initial=initial,
        directory=directory,
        snapshots=tuple(float(x) for x in snaps),
        formats=tuple(fmts),
    )


def _mentions_missing(problem: str, kw: dict) -> bool:
    name = problem.split(" ", 1)[0]
    return name not in kw


def parse_config(path) -> RunConfig:
    """Read a ``.toml`` or ``.json`` file (format chosen by suffix)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    fmt = "json" if path.suffix.lower() == ".json" else "toml"
    return parse_config_text(text, fmt)


def config_to_dict(cfg: RunConfig) -> dict:
    m = cfg.model
    return {
        "model": {
            "alpha": m.alpha,
            **{k: [getattr(m, f"{k}1"), getattr(m, f"{k}2")] for k in PAIR_KEYS},
            "a": m.a,
            "b": m.b,
            "test_mode": m.test_mode,
        },
        "grid": {"nx": cfg.nx},
        "time": {"nt": cfg.nt, "T": m.T},
        "solver": {"tol": cfg.tol, "max_iter": cfg.max_iter, "linear_solver": cfg.linear_solver},
        "initial": dict(cfg.initial),
        "output": {"directory": cfg.directory, "snapshots": list(cfg.snapshots), "formats": list(cfg.formats)},
    }


def dump_config(cfg: RunConfig) -> str:
    """JSON text that :func:`parse_config_text` (``fmt="json"``) reads back to an equal config."""
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def initial_functions(cfg: RunConfig):
    """``(u0, v0)`` callables for the configured preset."""
    ini = cfg.initial
    preset = ini["preset"]
    if preset == "zero":
        z = lambda x: np.zeros_like(x, dtype=complex)  # noqa: E731
        return z, z
    if preset == "example2":
        from .harness import example2_initial

        return example2_initial, example2_initial
    if preset == "example3":
        from .harness import example3_initial

        return example3_initial()
    w, amp, k = ini["width"], ini["amplitude"], ini["wavenumber"]

    def gauss(c, sign):
        return lambda x: amp * np.exp(-(((x - c) / w) ** 2)) * np.exp(sign * 1j * k * x)

    return gauss(ini["center_u"], 1.0), gauss(ini["center_v"], -1.0)
