"""Command-line front end.

    tcion scan           tracked-state moments vs the mean-field curves
    tcion semiclassical  classical trajectory or heated SDE ensemble
    tcion heat           master-equation moments under heating
    tcion sweep          adiabatic drive ramp fidelity

Exit codes: 0 success, 1 usage error, 2 runtime/physics failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .lindblad import DensityOp, HeatingParams, TruncationError, evolve_master
from .model import ContinuationError, ProductSpace
from .observables import LinearRamp, ScanRow, adiabatic_sweep, scan_phase_transition
from .semiclassical import NoFixedPoint, PhasePoint, SweepConfig, fixed_point, integrate, sde_integrate

SCAN_COLUMNS = list(ScanRow.FIELDS)
TRAJ_COLUMNS = ["t", "X", "Y", "jx", "jy", "jz", "energy", "spin_norm2"]
SDE_COLUMNS = ["t", "mean_X", "mean_Y", "var_X", "var_Y", "stderr_X", "stderr_Y"]
HEAT_COLUMNS = ["t", "n_mean", "re_a_mean", "im_a_mean", "jz_mean", "trace", "purity", "min_eig"]
SWEEP_COLUMNS = ["t", "x", "fidelity", "energy", "var_min", "leak"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        # + 0.0 folds -0.0 into 0.0
        return "" if math.isnan(v) else format(float(v) + 0.0, ".17g")
    return str(v)


def _json_value(v):
    if v is None:
        return None
    if isinstance(v, (float, np.floating)):
        return None if math.isnan(v) else float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_table(path: str, fmt: str, metadata: dict, columns: list[str], rows: list[list]) -> None:
    """CSV with '#'-prefixed metadata lines, or a JSON object with the same content."""
    if fmt == "json":
        doc = {
            "metadata": metadata,
            "columns": columns,
            "rows": [[_json_value(v) for v in row] for row in rows],
        }
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    else:
        lines = [f"# {k}: {json.dumps(metadata[k], sort_keys=True)}" for k in sorted(metadata)]
        lines.append(",".join(columns))
        lines.extend(",".join(_cell(v) for v in row) for row in rows)
        text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _metadata(args: argparse.Namespace, **extra) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    meta = {"version": __version__, "command": args.command, "config": config, "seed": getattr(args, "seed", None)}
    meta.update(extra)
    return meta


def _grid(x_min: float, x_max: float, x_step: float) -> list[float]:
    if x_step <= 0 or x_max < x_min or x_min < 0:
        raise ValueError("need 0 <= x_min <= x_max and x_step > 0")
    n = int(math.floor((x_max - x_min) / x_step + 1e-9)) + 1
    return [round(x_min + k * x_step, 12) for k in range(n)]


def cmd_scan(args) -> int:
    try:
        grid = _grid(args.x_min, args.x_max, args.x_step)
    except ValueError as err:
        print(f"scan: {err}", file=sys.stderr)
        return 1
    try:
        rows = scan_phase_transition(args.n_ions, args.omega, grid, args.n_max, max_step=args.track_step)
    except ContinuationError as err:
        # below-threshold failure: keep what was tracked
        write_table(args.out, args.format, _metadata(args, failure=str(err)), SCAN_COLUMNS, [])
        print(f"scan: {err}", file=sys.stderr)
        return 2
    failed = [r.x for r in rows if r.status == "continuation-failed"]
    notes = {}
    if failed:
        notes["failure"] = f"continuation failed before x = {failed[0]:g}; numeric fields left empty"
    table = [[getattr(r, c) for c in SCAN_COLUMNS] for r in rows]
    write_table(args.out, args.format, _metadata(args, time_units="n/a", **notes), SCAN_COLUMNS, table)
    if failed:
        print(f"scan: {notes['failure']}", file=sys.stderr)
        return 2
    return 0


def cmd_semiclassical(args) -> int:
    n = args.n_ions
    if args.fixed_point:
        try:
            p0 = fixed_point(args.chi, n)
        except NoFixedPoint as err:
            print(f"semiclassical: {err}", file=sys.stderr)
            return 2
    else:
        jz0 = -n / 2 if args.jz0 is None else args.jz0
        p0 = PhasePoint(args.x0, args.y0, args.jx0, args.jy0, jz0)
    try:
        cfg = SweepConfig(
            chi=args.chi,
            n_ions_equiv=n,
            t_end=args.t_end,
            rel_tol=args.rel_tol,
            abs_tol=args.abs_tol,
            seed=args.seed,
            gamma=args.gamma,
            n_traj=args.n_traj,
            dt=args.dt,
            n_samples=args.n_samples,
            freeze_spin=args.freeze_spin,
        )
    except ValueError as err:
        print(f"semiclassical: {err}", file=sys.stderr)
        return 1
    units = "scaled (1/(sqrt(2) Omega))"
    if args.gamma == 0 and not args.freeze_spin:
        traj = integrate(p0, cfg)
        table = [
            [t, *state, e, s2]
            for t, state, e, s2 in zip(traj.t, traj.states, traj.energy, traj.spin_norm2)
        ]
        meta = _metadata(
            args,
            mode="deterministic",
            time_units=units,
            initial_state=list(p0.as_array()),
            spin_norm_drift=traj.spin_norm_drift,
            energy_drift=traj.energy_drift,
        )
        write_table(args.out, args.format, meta, TRAJ_COLUMNS, table)
        return 0
    try:
        stats = sde_integrate(p0, cfg)
    except ValueError as err:
        print(f"semiclassical: {err}", file=sys.stderr)
        return 1
    table = [
        list(row)
        for row in zip(stats.t, stats.mean_x, stats.mean_y, stats.var_x, stats.var_y, stats.stderr_x, stats.stderr_y)
    ]
    meta = _metadata(args, mode="sde", time_units=units, initial_state=list(p0.as_array()))
    write_table(args.out, args.format, meta, SDE_COLUMNS, table)
    return 0


def _physical_time(args, t: float) -> float:
    # scaled time is measured in units of 1/(sqrt(2) Omega)
    return t / (math.sqrt(2) * args.omega) if args.scaled else t


def cmd_heat(args) -> int:
    if args.scaled and args.omega <= 0:
        print("heat: --scaled needs --omega > 0", file=sys.stderr)
        return 1
    try:
        hp = HeatingParams(gamma=args.gamma, coupling=args.omega, drive=args.drive)
        space = ProductSpace.build(args.n_ions, args.n_max)
    except ValueError as err:
        print(f"heat: {err}", file=sys.stderr)
        return 1
    t_end = _physical_time(args, args.t_end)
    dt = None if args.dt is None else _physical_time(args, args.dt)
    w0 = DensityOp.from_state(space.ground_state())
    try:
        n_steps = int(round(t_end / (dt or hp.default_dt)))
        every = max(1, n_steps // max(args.n_samples - 1, 1))
        run = evolve_master(
            w0, hp, space, t_end, dt, include_drive=args.drive != 0, sample_every=every
        )
    except TruncationError as err:
        print(f"heat: {err}", file=sys.stderr)
        write_table(
            args.out, args.format, _metadata(args, failure=str(err), required_n_max=err.required_n_max),
            HEAT_COLUMNS, [],
        )
        return 2
    except (ValueError, RuntimeError) as err:
        print(f"heat: {err}", file=sys.stderr)
        return 2
    table = [
        [t, n, a.real, a.imag, jz, tr, pu, me]
        for t, n, a, jz, tr, pu, me in zip(
            run.t, run.n_mean, run.a_mean, run.jz_mean, run.trace, run.purity, run.min_eig
        )
    ]
    meta = _metadata(
        args,
        time_units="scaled (1/(sqrt(2) Omega))" if args.scaled else "physical (1/Omega)",
        trace_drift=run.trace_drift,
        min_eig_excursion=run.min_eig_excursion,
    )
    write_table(args.out, args.format, meta, HEAT_COLUMNS, table)
    return 0


def cmd_sweep(args) -> int:
    ramp_time = _physical_time(args, args.ramp_time)
    t_end = ramp_time if args.t_end is None else _physical_time(args, args.t_end)
    dt = _physical_time(args, args.dt) if args.dt is not None else 0.02 / args.omega
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            samples = adiabatic_sweep(
                args.n_ions,
                args.omega,
                LinearRamp(args.x_final, ramp_time),
                t_end,
                dt,
                args.n_max,
                n_samples=args.n_samples,
                track_step=args.track_step,
            )
        except ContinuationError as err:
            print(f"sweep: {err}", file=sys.stderr)
            write_table(args.out, args.format, _metadata(args, failure=str(err)), SWEEP_COLUMNS, [])
            return 2
        except ValueError as err:
            print(f"sweep: {err}", file=sys.stderr)
            return 1
    notes = [str(w.message) for w in caught]
    for note in notes:
        print(f"sweep: warning: {note}", file=sys.stderr)
    table = [[s.t, s.x, s.fidelity, s.energy, s.var_min, s.leak] for s in samples]
    meta = _metadata(
        args,
        time_units="scaled (1/(sqrt(2) Omega))" if args.scaled else "physical (1/Omega)",
        warnings=notes,
    )
    write_table(args.out, args.format, meta, SWEEP_COLUMNS, table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tcion", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tcion {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=False):
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("scan", help="phase-transition scan over x = 2E/(N Omega)")
    p.add_argument("--n-ions", type=int, required=True)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, required=True)
    p.add_argument("--x-step", type=float, default=0.1)
    p.add_argument("--n-max", type=int, default=80)
    p.add_argument("--track-step", type=float, default=0.02)
    common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("semiclassical", help="classical trajectory or heated SDE ensemble")
    p.add_argument("--chi", type=float, default=0.0)
    p.add_argument("--n-ions", type=float, default=2.0)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--jx0", type=float, default=0.0)
    p.add_argument("--jy0", type=float, default=0.0)
    p.add_argument("--jz0", type=float, default=None, help="default -N/2")
    p.add_argument("--fixed-point", action="store_true", help="start at the nontrivial fixed point")
    p.add_argument("--freeze-spin", action="store_true", help="hold the spin at zero (diffusion check)")
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--n-traj", type=int, default=1000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--n-samples", type=int, default=101)
    p.add_argument("--rel-tol", type=float, default=1e-11)
    p.add_argument("--abs-tol", type=float, default=1e-14)
    common(p, seed=True)
    p.set_defaults(func=cmd_semiclassical)

    p = sub.add_parser("heat", help="master equation with centre-of-mass heating")
    p.add_argument("--n-ions", type=int, default=1)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--drive", type=float, default=0.0)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=None, help="default 1e-3/max(Omega, gamma, E)")
    p.add_argument("--n-samples", type=int, default=101)
    p.add_argument("--scaled", action="store_true", help="times in units of 1/(sqrt(2) Omega)")
    common(p)
    p.set_defaults(func=cmd_heat)

    p = sub.add_parser("sweep", help="adiabatic ramp of the drive")
    p.add_argument("--n-ions", type=int, required=True)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--x-final", type=float, required=True)
    p.add_argument("--ramp-time", type=float, required=True)
    p.add_argument("--t-end", type=float, default=None, help="default: ramp time")
    p.add_argument("--dt", type=float, default=None, help="default 0.02/Omega")
    p.add_argument("--n-max", type=int, default=80)
    p.add_argument("--n-samples", type=int, default=101)
    p.add_argument("--track-step", type=float, default=0.02)
    p.add_argument("--scaled", action="store_true", help="times in units of 1/(sqrt(2) Omega)")
    common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
