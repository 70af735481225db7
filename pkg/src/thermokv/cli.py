"""Batch runner: `thermokv run scenario.toml`, `thermokv validate-material`,
and `thermokv version`.

Artifacts per run: effective_config.toml (echo), ledger.csv (time column
first, then the energy-ledger fields), grid snapshots (JSON text header +
raw float64 blocks, optional legacy-VTK mirror), and summary.json.

Exit codes: 0 ok, 1 invariant violation, 2 config/usage error, 3 runtime
failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import diagnostics, dynamics, materials
from .errors import (InvalidState, NonInvertibleDeformation, NonMonotoneEnthalpy,
                     DegenerateHeatCapacity, NegativeInitialTemperature,
                     ParseError, SingularGram, SingularMass, StepRejected,
                     ThermoKVError, UsageError, ValidationError)

_INVARIANT_ERRORS = (InvalidState, DegenerateHeatCapacity, SingularMass,
                     SingularGram, NonInvertibleDeformation,
                     NonMonotoneEnthalpy, NegativeInitialTemperature,
                     StepRejected)


def _set_threads(n):
    if n is None:
        return
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        pass


# ---------------------------------------------------------------------------
# artifacts


def write_ledger_csv(path, times, ledgers):
    lines = ["time," + ",".join(diagnostics.LEDGER_FIELDS)]
    for led in ledgers:
        lines.append(",".join(repr(float(x)) for x in led.row()))
    Path(path).write_text("\n".join(lines) + "\n")


def snapshot_fields(state, scenario, disc=None):
    """Collocation-grid views of every state field."""
    disc = disc or scenario.discretization()
    grid = disc.grid
    pts = grid.nodes().reshape(-1, 2)
    theta = np.einsum("i,iq->q", state.theta_coeffs,
                      disc.z_space.tables_at(pts, boundary=True)["Phi"])
    if disc.prescribed:
        v = np.asarray(scenario.prescribed_velocity(pts, state.t), dtype=float)
    elif state.v_coeffs.size:
        V_col = disc.V_col
        if V_col is None:
            V_col = disc.v_space.tables_at(pts)["V"]
        v = np.einsum("i,iqc->qc", state.v_coeffs, V_col)
    else:
        v = np.zeros((pts.shape[0], 2))
    n = grid.n
    return {
        "rho": (state.rho.values.reshape(n), "kg/m^3"),
        "theta": (theta.reshape(n), "K"),
        "v": (v.reshape(n + (2,)), "m/s"),
        "F": (state.F.values.reshape(n + (2, 2)), "1"),
    }


def write_snapshot(path, state, scenario, disc=None):
    """JSON text header line followed by raw little-endian float64 blocks."""
    fields = snapshot_fields(state, scenario, disc)
    header = {
        "format": "thermokv-grid", "version": 1,
        "time": float(state.t), "dims": list((disc or scenario.discretization()).grid.n),
        "dtype": "float64", "byte_order": "little",
        "fields": [{"name": k, "shape": list(v.shape), "units": u}
                   for k, (v, u) in fields.items()],
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for _, (arr, _u) in fields.items():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshot(path):
    """Inverse of write_snapshot: (header dict, {name: array})."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        out = {}
        for spec in header["fields"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape))
            out[spec["name"]] = np.frombuffer(
                fh.read(count * 8), dtype="<f8").reshape(shape)
    return header, out


def write_vtk(path, state, scenario, disc=None):
    """Legacy-VTK structured-points mirror of a snapshot (ASCII)."""
    disc = disc or scenario.discretization()
    fields = snapshot_fields(state, scenario, disc)
    nx, ny = disc.grid.n
    hx, hy = disc.grid.spacing
    lines = ["# vtk DataFile Version 3.0", f"t={state.t!r}", "ASCII",
             "DATASET STRUCTURED_POINTS", f"DIMENSIONS {nx} {ny} 1",
             "ORIGIN 0 0 0", f"SPACING {hx!r} {hy!r} 1",
             f"POINT_DATA {nx * ny}"]
    for name, (arr, _u) in fields.items():
        flat = arr.reshape(nx * ny, -1)
        if flat.shape[1] == 1:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(repr(float(x)) for x in flat[:, 0])
        elif flat.shape[1] == 2:
            lines.append(f"VECTORS {name} double")
            lines.extend(f"{x!r} {y!r} 0.0" for x, y in flat)
        else:  # tensor components as separate scalars
            for c in range(flat.shape[1]):
                lines.append(f"SCALARS {name}_{c} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(repr(float(x)) for x in flat[:, c])
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(scenario_path, overrides=(), out_dir=None, threads=None):
    _set_threads(threads)
    text = Path(scenario_path).read_text()
    cfg, scenario = cfgmod.parse_config(text, overrides)
    out = Path(out_dir if out_dir is not None else cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.toml").write_text(cfgmod.echo_config(cfg))

    snap_every = int(cfg["output"]["snapshot_every"])
    disc = scenario.discretization()
    snap_counter = {"n": 0, "written": 0}

    def snapshot_cb(state, _led):
        if snap_every and snap_counter["n"] % snap_every == 0:
            _write_both(state)
        snap_counter["n"] += 1

    def _write_both(state):
        stem = out / f"snapshot_{snap_counter['written']:06d}"
        write_snapshot(stem.with_suffix(".bin"), state, scenario, disc)
        if cfg["output"]["vtk"]:
            write_vtk(stem.with_suffix(".vtk"), state, scenario, disc)
        snap_counter["written"] += 1

    traj = dynamics.run(scenario, callbacks=[snapshot_cb] if snap_every else None)
    _write_both(traj.state)
    write_ledger_csv(out / "ledger.csv", traj.times, traj.ledgers)
    summary = {k: (int(v) if isinstance(v, (int, np.integer))
                   else float(v) if isinstance(v, (float, np.floating)) else v)
               for k, v in traj.summary.items()}
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True,
                                                 indent=2) + "\n")
    return traj


def cmd_validate_material(name, overrides=(), out_path=None):
    if name not in materials.registry:
        known = ", ".join(sorted(materials.registry))
        raise UsageError(f"unknown material '{name}' (known: {known})")
    params, box_kw = {}, {}
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"override '{item}' is not KEY=VALUE")
        key, _, raw = item.partition("=")
        key = key.strip()
        try:
            val = json.loads(raw.strip())
        except json.JSONDecodeError:
            val = raw.strip()
        if key.startswith("box."):
            box_kw[key[4:]] = tuple(val) if isinstance(val, list) else val
        else:
            params[key] = val
    m = materials.registry[name](**params)
    box = materials.SampleBox(**box_kw)
    if box.det_range[0] >= box.det_range[1] or box.theta_range[0] >= box.theta_range[1]:
        raise UsageError("empty sample box")
    report = materials.validate_hypotheses(m, sample_box=box)
    text = report.summary()
    if out_path is not None:
        Path(out_path).write_text(text + "\n")
    print(text)
    return report


def _build_parser():
    p = argparse.ArgumentParser(prog="thermokv",
                                description="viscoelastic thermo-solid simulator")
    sub = p.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario")
    run.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE")
    run.add_argument("--out", default=None)
    run.add_argument("--threads", type=int, default=None)
    val = sub.add_parser("validate-material", help="check constitutive hypotheses")
    val.add_argument("name")
    val.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE")
    val.add_argument("--out", default=None)
    sub.add_parser("version", help="print the package version")
    return p


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        if args.command == "version":
            from . import __version__
            print(__version__)
            return 0
        if args.command == "run":
            cmd_run(args.scenario, args.overrides, args.out, args.threads)
            return 0
        if args.command == "validate-material":
            report = cmd_validate_material(args.name, args.overrides, args.out)
            return 0 if report.passed else 1
    except (ParseError, ValidationError, UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _INVARIANT_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    except (ThermoKVError, TimeoutError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 3
    return 2


if __name__ == "__main__":
    sys.exit(main())
