"""Command-line entry point: ``oscillakdv {simulate,sweep,dichotomy,diagnose}``.

Exit codes: 0 completed, 2 configuration error, 3 growth detected,
4 NaN detected, 5 experiment hypothesis failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import RunConfig, parse_config, serialize_config
from .dynamics import Checkpoint, RunStatus, Trajectory, evolve
from .errors import ConfigurationError, ExperimentError
from .experiments import averaging_sweep, default_sweep_horizon, dichotomy_experiment
from .files import (SCALAR_COLUMNS, list_snapshots, read_snapshot, snapshot_name,
                    write_csv, write_snapshot)
from .forcing import mean

log = logging.getLogger("oscillakdv")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GROWTH = 3
EXIT_NAN = 4
EXIT_EXPERIMENT = 5

_STATUS_CODES = {"completed": EXIT_OK, "blowup_detected": EXIT_GROWTH,
                 "nan_detected": EXIT_NAN}


def _threads(arg) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("OSCILLAKDV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError([("OSCILLAKDV_THREADS", f"not an integer: {env!r}")])
    return 1


def _write_trajectory(cfg: RunConfig, tr: Trajectory, out: Path) -> None:
    snap_dir = out / cfg.outputs.snapshot_dir
    snap_dir.mkdir(parents=True, exist_ok=True)
    digest = cfg.coefficient.digest()
    for i, (t, f) in enumerate(tr.snapshots):
        write_snapshot(snap_dir / snapshot_name(i), f, t, cfg.solver.k, digest)
    write_csv(out / cfg.outputs.csv_path, SCALAR_COLUMNS, [tuple(r) for r in tr.scalars])


def cmd_simulate(cfg: RunConfig, args, out: Path) -> int:
    phi = cfg.initial_field(args.seed)
    ckpt_path = out / "checkpoint.npz"
    resume = None
    if args.resume:
        resume = Checkpoint.load(args.resume, cfg.grid())
        log.info("resuming at t=%.6g (step %d)", resume.t, resume.step_count)
    every = cfg.outputs.checkpoint_every
    tr = evolve(phi, cfg.coefficient, cfg.solver,
                checkpoint_path=ckpt_path if every else None,
                checkpoint_every=every, resume=resume)
    _write_trajectory(cfg, tr, out)
    print(f"status: {tr.status}  snapshots: {len(tr.snapshots)}  "
          f"mass drift: {tr.mass_drift():.3e}")
    if tr.status.reason:
        print(f"reason: {tr.status.reason}")
    return _STATUS_CODES[tr.status.kind]


def cmd_sweep(cfg: RunConfig, args, out: Path) -> int:
    if cfg.experiment.kind != "sweep":
        raise ConfigurationError([("experiment.kind", "sweep subcommand needs kind = 'sweep'")])
    p = cfg.experiment.params
    phi = cfg.initial_field(args.seed)
    T = p["T"] if p["T"] is not None else default_sweep_horizon(phi, cfg.coefficient, cfg.solver)
    res = averaging_sweep(phi, cfg.coefficient, p["omegas"], p["t0s"], T, cfg.solver,
                          workers=_threads(args.threads))
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / cfg.outputs.csv_path
    write_csv(csv_path, res.CSV_COLUMNS,
              [(r.omega, r.t0, r.err_h1_sup, r.err_xt, r.mass_drift, r.status)
               for r in res.rows])
    summary = {"T": T, "fitted_rate": res.fitted_rate, "config_digest": res.config_digest,
               "rates_by_t0": {str(k): v for k, v in res.rates_by_t0().items()},
               "notes": res.fit_notes}
    (out / "sweep_summary.json").write_text(json.dumps(summary, indent=2))
    for r in res.rows:
        print(f"omega={r.omega:<8g} t0={r.t0:<8.4g} err_h1_sup={r.err_h1_sup:.4e} "
              f"err_xt={r.err_xt:.4e} {r.status}")
    print(f"fitted rate: {res.fitted_rate}")
    return EXIT_OK


def cmd_dichotomy(cfg: RunConfig, args, out: Path) -> int:
    if cfg.experiment.kind != "dichotomy":
        raise ConfigurationError([("experiment.kind",
                                   "dichotomy subcommand needs kind = 'dichotomy'")])
    p = cfg.experiment.params
    phi = cfg.initial_field(args.seed)
    report = dichotomy_experiment(phi, p["eps"], p["period"], p["omega_small"],
                                  p["omega_large"], cfg.solver, T_linear=p["T_linear"],
                                  horizon_factor=p["horizon_factor"],
                                  tail_horizon=p["tail_horizon"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "dichotomy.json").write_text(json.dumps(report, indent=2, default=str))
    print(json.dumps(report, indent=2, default=str))
    return EXIT_OK


def load_trajectory(directory, cfg: RunConfig | None = None) -> Trajectory:
    files = list_snapshots(directory)
    if not files:
        raise ConfigurationError([("snapshot_dir", f"no snapshot files in {directory}")])
    grid = cfg.grid() if cfg is not None else None
    snaps = []
    k = cfg.solver.k if cfg is not None else None
    for f in files:
        field, header = read_snapshot(f, grid)
        grid = field.grid
        k = header["k"] if k is None else k
        snaps.append((header["t"], field))
    snaps.sort(key=lambda s: s[0])
    lam = mean(cfg.coefficient) if cfg is not None else 0.0
    return Trajectory(grid, snaps, [], RunStatus("completed", snaps[-1][0]), k, lam)


def diagnose_rows(tr: Trajectory) -> list:
    return [(t, dg.mass(f), dg.energy(f, tr.coefficient_mean, tr.k), dg.sobolev_norm(f, 1.0),
             float(np.max(np.abs(f.values))))
            for t, f in tr.snapshots]


def cmd_diagnose(cfg: RunConfig, args, out: Path) -> int:
    snap_dir = out / cfg.outputs.snapshot_dir
    tr = load_trajectory(snap_dir, cfg)
    rows = diagnose_rows(tr)
    cols = ("t", "mass", "energy", "h1_norm", "max_abs")
    write_csv(out / "diagnostics.csv", cols, rows)
    print(f"{'t':>12} {'mass':>14} {'energy':>14} {'h1_norm':>14} {'max_abs':>12}")
    for r in rows:
        print(f"{r[0]:12.6g} {r[1]:14.8g} {r[2]:14.8g} {r[3]:14.8g} {r[4]:12.6g}")
    if len(tr.snapshots) >= 2:
        comps = dg.xt_components(tr)
        norms = {"X_T": sum(comps.values()), "Y_T": dg.yt_norm(tr)} | comps
        write_csv(out / "norms.csv", ("norm", "value"), list(norms.items()))
        for name, v in norms.items():
            print(f"{name:>18}: {v:.8g}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "dichotomy": cmd_dichotomy,
            "diagnose": cmd_diagnose}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscillakdv", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", default=".", help="output directory (default: cwd)")
    ap.add_argument("--resume", help="checkpoint file to continue from (simulate)")
    ap.add_argument("--threads", type=int, help="sweep workers (env OSCILLAKDV_THREADS)")
    ap.add_argument("--seed", type=int, help="seed for synthetic 'random' initial data")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        text = Path(args.config).read_text()
        cfg = parse_config(text, base_dir=str(Path(args.config).parent))
        out.mkdir(parents=True, exist_ok=True)
        (out / "run_config.toml").write_text(serialize_config(cfg))
        return COMMANDS[args.command](cfg, args, out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as exc:
        print(f"experiment error: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT


if __name__ == "__main__":
    sys.exit(main())
