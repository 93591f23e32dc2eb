"""Run configuration documents (TOML).

Example::

    [grid]
    n = 256
    domain_length = 201.06192982974676

    [solver]
    k = 5
    scheme = "if_rk4"
    dt = 1e-3
    t_end = 1.0
    snapshot_count = 11

    [coefficient]
    variant = "cosine"
    omega = 50.0

    [initial_data]
    kind = "gaussian"
    amplitude = 0.5
    width = 2.0

Omitted keys take the defaults below; ``solver.t_end`` defaults to the
local-existence heuristic of the initial datum.
"""

from __future__ import annotations

import math
import os
import re
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import SolverConfig, existence_time
from .errors import ConfigurationError
from .forcing import VARIANTS, CoefficientSpec, validate_coefficient
from .spectral import DealiasPolicy, Field, make_grid

DEFAULT_DOMAIN_LENGTH = 64.0 * math.pi
INITIAL_KINDS = ("gaussian", "solitary", "from_file", "zero", "random")
EXPERIMENT_KINDS = ("none", "sweep", "dichotomy")

_INITIAL_DEFAULTS = {
    "gaussian": {"amplitude": 1.0, "width": 1.0, "center": 0.0},
    "solitary": {"c": 1.0, "center": 0.0},
    "from_file": {"path": ""},
    "zero": {},
    "random": {"seed": 0, "amplitude": 0.1, "envelope": 4.0},
}
_SWEEP_DEFAULTS = {"omegas": [10.0, 20.0, 40.0, 80.0, 160.0], "t0s": [0.0], "T": None}
_DICHOTOMY_DEFAULTS = {"eps": 0.5, "period": 4.0, "omega_small": None,
                       "omega_large": None, "T_linear": None, "horizon_factor": 2.0,
                       "tail_horizon": None}


@dataclass(frozen=True)
class InitialData:
    kind: str = "gaussian"
    params: dict = field(default_factory=dict)

    def build(self, grid, seed: Optional[int] = None) -> Field:
        from .experiments import gaussian, random_smooth, solitary_wave
        from .files import read_snapshot

        p = self.params
        if self.kind == "gaussian":
            return gaussian(grid, p["amplitude"], p["width"], p["center"])
        if self.kind == "solitary":
            return solitary_wave(p["c"], p["k"], grid, p["center"])
        if self.kind == "from_file":
            return read_snapshot(p["path"], grid)[0]
        if self.kind == "random":
            return random_smooth(grid, p["seed"] if seed is None else seed,
                                 p["amplitude"], p["envelope"])
        return Field.zeros(grid)


@dataclass(frozen=True)
class Outputs:
    snapshot_dir: str = "snapshots"
    csv_path: str = "scalars.csv"
    checkpoint_every: int = 0


@dataclass(frozen=True)
class Experiment:
    kind: str = "none"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    n: int
    domain_length: float
    solver: SolverConfig
    coefficient: CoefficientSpec
    initial_data: InitialData
    outputs: Outputs = Outputs()
    experiment: Experiment = Experiment()

    def grid(self):
        return make_grid(self.n, self.domain_length)

    def initial_field(self, seed: Optional[int] = None) -> Field:
        return self.initial_data.build(self.grid(), seed)


# ---------------------------------------------------------------------------
# parsing


class _Collector:
    def __init__(self):
        self.problems: list = []

    def add(self, key, msg):
        self.problems.append((key, msg))

    def number(self, table, key, path, default=None, integer=False, positive=False):
        val = table.get(key, default)
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.add(path, f"must be a number, got {val!r}")
            return default
        if integer and not isinstance(val, int):
            self.add(path, f"must be an integer, got {val!r}")
            return default
        if not math.isfinite(val):
            self.add(path, "must be finite")
            return default
        if positive and val <= 0:
            self.add(path, f"must be positive, got {val!r}")
        return val

    def unknown(self, table, allowed, section):
        for key in table:
            if key not in allowed:
                self.add(f"{section}.{key}", "unknown key")


def _section(doc, name, col) -> dict:
    val = doc.get(name, {})
    if not isinstance(val, dict):
        col.add(name, "must be a table")
        return {}
    return val


def parse_config(text: str, base_dir: str | None = None) -> RunConfig:
    """Parse and validate a TOML run configuration.

    Raises
    ------
    ConfigurationError
        On syntax errors (with the line number) or with every violated
        constraint listed by key path.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigurationError([("", f"parse error: {exc}")], line=line) from None
    return config_from_dict(doc, base_dir)


def config_from_dict(doc: dict, base_dir: str | None = None) -> RunConfig:
    col = _Collector()
    col.unknown(doc, ("grid", "solver", "coefficient", "initial_data", "outputs",
                      "experiment"), "<root>")

    # grid
    g = _section(doc, "grid", col)
    col.unknown(g, ("n", "domain_length"), "grid")
    if "n" not in g:
        col.add("grid.n", "required")
    n = col.number(g, "n", "grid.n", default=None, integer=True)
    L = col.number(g, "domain_length", "grid.domain_length", DEFAULT_DOMAIN_LENGTH,
                   positive=True)
    grid = None
    if isinstance(n, int) and not (n < 16 or n & (n - 1)):
        if isinstance(L, (int, float)) and L > 0:
            grid = make_grid(n, float(L))
    elif n is not None:
        col.add("grid.n", f"must be a power of two >= 16, got {n}")

    # coefficient
    c = _section(doc, "coefficient", col)
    col.unknown(c, ("variant", "omega", "t0", "period", "value", "eps", "samples"),
                "coefficient")
    variant = c.get("variant", "constant")
    coef = None
    if variant not in VARIANTS:
        col.add("coefficient.variant", f"unknown variant {variant!r}; expected one of {VARIANTS}")
    else:
        kw = dict(variant=variant,
                  omega=col.number(c, "omega", "coefficient.omega", 0.0),
                  t0=col.number(c, "t0", "coefficient.t0", 0.0),
                  period=col.number(c, "period", "coefficient.period", 2.0 * math.pi),
                  value=col.number(c, "value", "coefficient.value", 1.0),
                  eps=col.number(c, "eps", "coefficient.eps", 0.0))
        samples = c.get("samples")
        kw["samples"] = tuple(samples) if samples is not None else None
        kw = {k: (float(v) if isinstance(v, int) and k not in ("variant", "samples") else v)
              for k, v in kw.items()}
        probe = CoefficientSpec.__new__(CoefficientSpec)
        for k, v in kw.items():
            object.__setattr__(probe, k, v)
        probs = validate_coefficient(probe)
        if probs:
            col.problems.extend(probs)
        else:
            coef = CoefficientSpec(**kw)

    # initial data
    d = _section(doc, "initial_data", col)
    kind = d.get("kind", "gaussian")
    init = None
    if kind not in INITIAL_KINDS:
        col.add("initial_data.kind", f"unknown kind {kind!r}; expected one of {INITIAL_KINDS}")
    else:
        params = dict(_INITIAL_DEFAULTS[kind])
        col.unknown(d, ("kind",) + tuple(params), "initial_data")
        for key in params:
            if key in d:
                params[key] = d[key]
        if kind == "from_file":
            if not params["path"]:
                col.add("initial_data.path", "required for from_file")
            elif base_dir is not None and not os.path.isabs(str(params["path"])):
                params["path"] = os.path.abspath(os.path.join(base_dir, params["path"]))
        for key in ("amplitude", "width", "center", "c", "envelope"):
            if key in params:
                params[key] = col.number(params, key, f"initial_data.{key}",
                                         positive=key in ("width", "c", "envelope"))
                if isinstance(params[key], int):
                    params[key] = float(params[key])
        if "seed" in params:
            col.number(params, "seed", "initial_data.seed", integer=True)
        init = InitialData(kind, params)

    # solver
    s = _section(doc, "solver", col)
    col.unknown(s, ("k", "scheme", "dt", "t_end", "dealias", "snapshot_times",
                    "snapshot_count", "blowup_h1_factor", "blowup_amp_max",
                    "conserve_check_every", "existence_constant"), "solver")
    k = col.number(s, "k", "solver.k", 5, integer=True)
    if isinstance(k, int) and k < 1:
        col.add("solver.k", f"must be >= 1, got {k}")
    if init is not None and init.kind == "solitary":
        init.params["k"] = k

    phi = None
    if grid is not None and init is not None and not any(
            p[0].startswith("initial_data") for p in col.problems):
        try:
            phi = init.build(grid)
        except ConfigurationError as exc:
            col.problems.extend(exc.problems)
        except OSError as exc:
            col.add("initial_data.path", f"cannot read: {exc}")

    t_end = s.get("t_end")
    if t_end is None:
        if phi is not None and coef is not None and isinstance(k, int):
            C = col.number(s, "existence_constant", "solver.existence_constant", 1.0,
                           positive=True)
            t_end = existence_time(phi, coef, k, C)
            if not math.isfinite(t_end):
                col.add("solver.t_end", "no default: existence heuristic is unbounded "
                                        "(zero data or zero coefficient); set t_end")
                t_end = None
        else:
            t_end = None
    else:
        t_end = col.number(s, "t_end", "solver.t_end", positive=True)

    dealias_name = s.get("dealias", "exact")
    dealias = None
    if dealias_name == "exact":
        dealias = DealiasPolicy.exact(k) if isinstance(k, int) and k >= 1 else None
    elif dealias_name in ("two_thirds", "none"):
        dealias = DealiasPolicy(dealias_name)
    else:
        col.add("solver.dealias", f"must be 'exact', 'two_thirds' or 'none', got {dealias_name!r}")

    snaps = s.get("snapshot_times")
    count = s.get("snapshot_count")
    if snaps is not None and count is not None:
        col.add("solver.snapshot_count", "give either snapshot_times or snapshot_count")
    if count is not None:
        count = col.number(s, "snapshot_count", "solver.snapshot_count", integer=True)
        if isinstance(count, int) and count < 2:
            col.add("solver.snapshot_count", "must be >= 2")
        elif isinstance(count, int) and t_end:
            snaps = list(np.linspace(0.0, t_end, count))
    if snaps is not None and not (isinstance(snaps, list)
                                  and all(isinstance(v, (int, float)) for v in snaps)):
        col.add("solver.snapshot_times", "must be a list of numbers")
        snaps = None

    solver = None
    solver_kw = dict(
        k=k, scheme=s.get("scheme", "if_rk4"),
        dt=col.number(s, "dt", "solver.dt", 1e-3, positive=True),
        t_end=t_end, dealias=dealias, snapshot_times=tuple(snaps or ()),
        blowup_h1_factor=col.number(s, "blowup_h1_factor", "solver.blowup_h1_factor", 10.0,
                                    positive=True),
        blowup_amp_max=col.number(s, "blowup_amp_max", "solver.blowup_amp_max", 1e6,
                                  positive=True),
        conserve_check_every=col.number(s, "conserve_check_every",
                                        "solver.conserve_check_every", 10, integer=True,
                                        positive=True),
    )
    if all(v is not None for v in solver_kw.values()):
        solver_kw = {key: (float(v) if key in ("dt", "t_end", "blowup_h1_factor",
                                               "blowup_amp_max") else v)
                     for key, v in solver_kw.items()}
        probe = SolverConfig.__new__(SolverConfig)
        for key, v in solver_kw.items():
            object.__setattr__(probe, key, v)
        probs = probe.problems()
        if probs:
            col.problems.extend(probs)
        else:
            solver = SolverConfig(**solver_kw)

    # outputs
    o = _section(doc, "outputs", col)
    col.unknown(o, ("snapshot_dir", "csv_path", "checkpoint_every"), "outputs")
    for key in ("snapshot_dir", "csv_path"):
        if key in o and not isinstance(o[key], str):
            col.add(f"outputs.{key}", "must be a string path")
    outputs = Outputs(
        snapshot_dir=str(o.get("snapshot_dir", "snapshots")),
        csv_path=str(o.get("csv_path", "scalars.csv")),
        checkpoint_every=col.number(o, "checkpoint_every", "outputs.checkpoint_every", 0,
                                    integer=True) or 0,
    )
    if outputs.checkpoint_every < 0:
        col.add("outputs.checkpoint_every", "must be >= 0")

    # experiment
    e = _section(doc, "experiment", col)
    ekind = e.get("kind", "none")
    experiment = Experiment()
    if ekind not in EXPERIMENT_KINDS:
        col.add("experiment.kind", f"unknown kind {ekind!r}; expected one of {EXPERIMENT_KINDS}")
    elif ekind != "none":
        defaults = _SWEEP_DEFAULTS if ekind == "sweep" else _DICHOTOMY_DEFAULTS
        col.unknown(e, ("kind",) + tuple(defaults), "experiment")
        params = {key: e.get(key, val) for key, val in defaults.items()}
        if ekind == "sweep":
            om = params["omegas"]
            if not (isinstance(om, list) and len(om) >= 3
                    and all(isinstance(w, (int, float)) and w > 0 for w in om)
                    and all(b > a for a, b in zip(om, om[1:]))):
                col.add("experiment.omegas",
                        "need at least three positive, increasing frequencies")
            else:
                params["omegas"] = [float(w) for w in om]
            if not (isinstance(params["t0s"], list) and params["t0s"]):
                col.add("experiment.t0s", "need a non-empty list")
            else:
                params["t0s"] = [float(t) for t in params["t0s"]]
            if params["T"] is not None:
                params["T"] = col.number(params, "T", "experiment.T", positive=True)
        else:
            for key in defaults:
                if key != "horizon_factor" and params[key] is not None:
                    params[key] = col.number(params, key, f"experiment.{key}", positive=True)
            params["horizon_factor"] = col.number(params, "horizon_factor",
                                                  "experiment.horizon_factor", positive=True)
            eps, per = params["eps"], params["period"]
            if isinstance(eps, (int, float)) and isinstance(per, (int, float)) and not (
                    per > 1 and 0 < eps < min(1.0, (per - 1) / 2)):
                col.add("experiment.eps", "need period > 1 and 0 < eps < min(1, (period - 1)/2)")
        params = {key: (float(v) if isinstance(v, int) else v) for key, v in params.items()}
        experiment = Experiment(ekind, params)

    if col.problems:
        raise ConfigurationError(col.problems)
    return RunConfig(n=n, domain_length=float(L), solver=solver, coefficient=coef,
                     initial_data=init, outputs=outputs, experiment=experiment)


# ---------------------------------------------------------------------------
# serialization


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    s = cfg.solver
    solver = {
        "k": s.k, "scheme": s.scheme, "dt": s.dt, "t_end": s.t_end,
        "dealias": s.dealias.kind,
        "snapshot_times": list(s.snapshot_times),
        "blowup_h1_factor": s.blowup_h1_factor, "blowup_amp_max": s.blowup_amp_max,
        "conserve_check_every": s.conserve_check_every,
    }
    init = {"kind": cfg.initial_data.kind}
    init.update({k: v for k, v in cfg.initial_data.params.items() if k != "k"})
    doc = {
        "grid": {"n": cfg.n, "domain_length": cfg.domain_length},
        "solver": solver,
        "coefficient": cfg.coefficient.to_dict(),
        "initial_data": init,
        "outputs": {"snapshot_dir": cfg.outputs.snapshot_dir,
                    "csv_path": cfg.outputs.csv_path,
                    "checkpoint_every": cfg.outputs.checkpoint_every},
    }
    if cfg.experiment.kind != "none":
        doc["experiment"] = {"kind": cfg.experiment.kind} | _drop_none(cfg.experiment.params)
    return doc


def serialize_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))
