"""Command-line entry point: ``spinwell <subcommand> --config run.json``.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import analytic, config as cfgmod
from .dynamics import (
    NormDriftError, RampProtocol, StepConvergenceError, DegenerateGroundState,
    default_t_final, dt_convergence_gate, ground_fidelity, initial_state, propagate,
    propagate_converged, validate_elimination,
)
from .fock import Basis
from .lanczos import ConvergenceError
from .model import ModelParams, assemble, two_mode_validity
from .spectra import SolverError, detect_steps, omega_grid, sweep_ground

log = logging.getLogger("spinwell")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SWEEP_COLUMNS = ("omega_over_J", "diff_e", "diff_g", "diff_total",
                 "energy_over_J", "gap_over_J", "xi2")
THRESHOLD_COLUMNS = ("n", "omega_n_analytic_over_J", "omega_n_detected_over_J",
                     "rel_error")
EVOLVE_COLUMNS = ("Jt", "omega_over_J", "diff_e", "diff_g", "diff_total", "norm",
                  "fidelity", "xi2")


# --- formatting -------------------------------------------------------------


def fmt(x, precision: int) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = f"{x:.{precision}g}"
    return "0" if s == "-0" else s


def render_csv(columns, rows, digest, command, precision, notes=()) -> str:
    lines = [f"# spinwell {command} config_sha256={digest}"]
    lines += [f"# {n}" for n in notes]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(x, precision) for x in row))
    return "\n".join(lines) + "\n"


def _json_value(x, precision):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(fmt(x, precision))


def render_json(columns, rows, digest, command, precision, notes=()) -> str:
    doc = {
        "command": command,
        "config_sha256": digest,
        "columns": list(columns),
        "rows": [[_json_value(x, precision) for x in row] for row in rows],
        "notes": list(notes),
    }
    return json.dumps(doc, indent=1) + "\n"


def render(fmt_name, *args, **kw) -> str:
    return (render_json if fmt_name == "json" else render_csv)(*args, **kw)


# --- helpers ----------------------------------------------------------------


def model_params(cfg) -> ModelParams:
    m = cfg["model"]
    return ModelParams(
        N=m["N"], J=m.get("J", 1.0), U=m["U"], Delta=m["Delta"],
        OmegaPrime=m.get("OmegaPrime", 0.0),
    )


def _basis(cfg) -> Basis:
    m = cfg["model"]
    try:
        return Basis(m["N"], max_atoms=m.get("max_atoms", 40))
    except ValueError as exc:
        raise cfgmod.ConfigError(f"config error at model.N: {exc}")


def _exclusive(cfg, need, forbid):
    cfgmod.require(cfg, need)
    if forbid in cfg:
        raise cfgmod.ConfigError(
            f"config error at {forbid}: this command takes a '{need}' block, "
            f"not '{forbid}'"
        )


def _sweep_table(cfg, params, H, threads):
    sw = cfg["sweep"]
    J = params.J
    grid = omega_grid(sw["omega_min"] * J, sw["omega_max"] * J, sw["omega_step"] * J)
    if grid.size == 0:
        raise cfgmod.ConfigError("config error at sweep: empty coupling grid")
    solver = cfg["solver"]
    return sweep_ground(params, grid, H=H, method=solver["method"],
                        dense_threshold=solver["dense_threshold"], threads=threads,
                        omega_prime_ratio=sw.get("omega_prime_ratio"))


# --- subcommands ------------------------------------------------------------


def cmd_ground_sweep(cfg, threads=1, **_):
    _exclusive(cfg, "sweep", "ramp")
    params = model_params(cfg)
    H = assemble(_basis(cfg))
    table = _sweep_table(cfg, params, H, threads)
    J = params.J
    notes = []
    small = table.gap < 1e-6 * max(params.U, 1e-300)
    if params.U > 0 and np.any(small):
        notes.append(
            f"warning: gap below 1e-6 U at {int(small.sum())} grid points "
            "(near-degenerate ground state)"
        )
    rows = [
        (om / J, de, dg, dt, e / J, g / J, x)
        for om, de, dg, dt, e, g, x in zip(
            table.omega, table.diff_e, table.diff_g, table.diff_total,
            table.energy, table.gap, table.xi2)
    ]
    return SWEEP_COLUMNS, rows, notes


def cmd_thresholds(cfg, threads=1, **_):
    cfgmod.require(cfg, "model")
    params = model_params(cfg)
    N, J = params.N, params.J
    ns = list(range(1, N // 2 + 1))
    notes = []
    analytic_vals = []
    for n in ns:
        try:
            analytic_vals.append(analytic.tunneling_threshold(n, params.U, params.Delta) / J)
        except analytic.NoRealThreshold as exc:
            notes.append(f"flagged n={n}: {exc}")
            analytic_vals.append(float("nan"))
    detected = [float("nan")] * len(ns)
    if "sweep" in cfg:
        H = assemble(_basis(cfg))
        table = _sweep_table(cfg, params, H, threads)
        for n in ns:
            step = detect_steps(table, levels=[2 * n - 1])
            if step:
                detected[n - 1] = step[0] / J
    rows = []
    for n, a, d in zip(ns, analytic_vals, detected):
        rel = abs(d - a) / a if (a and math.isfinite(a) and math.isfinite(d)) else float("nan")
        rows.append((n, a, d, rel))
    return THRESHOLD_COLUMNS, rows, notes


def _ramp(cfg, params) -> RampProtocol:
    r = cfg["ramp"]
    J = params.J
    v = r["v"]
    t_final = r.get("t_final")
    if t_final is None:
        if v <= 0:
            raise cfgmod.ConfigError("config error at ramp.t_final: required when v = 0")
        t_final = default_t_final(params.N, params.U, params.Delta, v)
    dt = r.get("dt", 0.01 / J)
    try:
        return RampProtocol(v=v, t_final=t_final, dt=min(dt, t_final),
                            v_prime=r.get("v_prime", 0.0))
    except ValueError as exc:
        raise cfgmod.ConfigError(f"config error at ramp: {exc}")


def _evolve_one(cfg, self_test):
    params = model_params(cfg)
    proto = _ramp(cfg, params)
    H = assemble(_basis(cfg))
    solver = cfg["solver"]
    psi0 = initial_state(H, params, method=solver["method"],
                         dense_threshold=solver["dense_threshold"])
    stride = cfg["ramp"].get("sample_every")
    notes = []
    if cfg["ramp"].get("adaptive_dt"):
        traj, proto, changes = propagate_converged(
            H, params, proto, psi0, sample_every=stride, keep_states=True,
            krylov_tol=solver["krylov_tol"])
        notes.append(f"adaptive dt: accepted dt={proto.step:.6g}")
    else:
        traj = propagate(H, params, proto, psi0, sample_every=stride, keep_states=True,
                         krylov_tol=solver["krylov_tol"])
        changes = None
        if self_test:
            changes = dt_convergence_gate(H, params, proto, psi0, stride, reference=traj,
                                          krylov_tol=solver["krylov_tol"])
    if changes is not None:
        notes.append("self-test: max change under dt halving "
                     + ", ".join(f"{k}={v:.3e}" for k, v in sorted(changes.items())))
    traj.fidelity = ground_fidelity(traj, H, params, proto)
    traj.states = None
    J = params.J
    rows = [
        (t * J, om / J, de, dg, d, nm, f, x)
        for t, om, de, dg, d, nm, f, x in zip(
            traj.times, traj.omega, traj.diff_e, traj.diff_g, traj.diff_total,
            traj.norm, traj.fidelity, traj.xi2)
    ]
    return rows, notes


def cmd_evolve(cfg, threads=1, self_test=False, **_):
    _exclusive(cfg, "ramp", "sweep")
    batch = cfg.get("batch")
    if not batch:
        rows, notes = _evolve_one(cfg, self_test)
        return EVOLVE_COLUMNS, rows, notes
    base = {k: v for k, v in cfg.items() if k != "batch"}
    runs = [cfgmod.validate(cfgmod.merge(base, o)) for o in batch]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda c: _evolve_one(c, self_test), runs))
    return EVOLVE_COLUMNS, results, [json.dumps(o, sort_keys=True) for o in batch]


def cmd_validate_appendix(cfg, **_):
    cfgmod.require(cfg, "three_level")
    tl = cfg["three_level"]
    if tl["Delta_r"] == 0:
        raise cfgmod.ConfigError("config error at three_level.Delta_r: must be non-zero")
    p = analytic.ThreeLevelParams(tl["Omega_g"], tl["Omega_e"], tl["Delta_r"],
                                  tl.get("Delta_e", 0.0))
    rep = validate_elimination(p, t_final=tl.get("t_final"), dt=tl.get("dt"),
                               threshold_factor=tl.get("threshold_factor", 5.0))
    return rep.as_dict()


def cmd_trap_estimate(cfg, **_):
    cfgmod.require(cfg, "trap")
    t = cfg["trap"]
    two_pi = 2 * math.pi
    V_b = analytic.HBAR * two_pi * t["V_b_hz"]
    m = t.get("mass_kg", analytic.RB87_MASS)
    x0 = t["x0_um"] * 1e-6
    omega0 = analytic.effective_trap_frequency(V_b, m, x0)
    out = {"omega0_over_2pi_hz": omega0 / two_pi}
    if "U_hz" in t and "N" in t:
        chk = two_mode_validity(omega0, two_pi * t["U_hz"], t["N"],
                                threshold=t.get("threshold", 0.1))
        out.update(ratio_UN_over_omega0=chk.ratio, valid=chk.valid,
                   threshold=chk.threshold)
    return out


COMMANDS = {
    "ground-sweep": cmd_ground_sweep,
    "thresholds": cmd_thresholds,
    "evolve": cmd_evolve,
    "validate-appendix": cmd_validate_appendix,
    "trap-estimate": cmd_trap_estimate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinwell",
        description="Exact diagonalisation and ramp dynamics of a two-component "
                    "condensate in a laser-addressed double well.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--self-test", action="store_true",
                       help="rerun at half the time step and check convergence")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _threads(arg):
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("SPINWELL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise cfgmod.ConfigError(f"SPINWELL_THREADS is not an integer: {env!r}")
    return 1


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _batch_path(path, k):
    if path is None:
        return None
    root, ext = os.path.splitext(path)
    return f"{root}-{k}{ext}"


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    try:
        cfg = cfgmod.load(args.config)
        threads = _threads(args.threads)
        out_cfg = cfg["output"]
        fmt_name = args.format or out_cfg["format"]
        path = args.out or out_cfg.get("path")
        precision = out_cfg["precision"]
        digest = cfgmod.config_hash(cfg)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = COMMANDS[args.command](cfg, threads=threads,
                                            self_test=args.self_test)
        warn_msgs = [str(w.message) for w in caught]
        for msg in warn_msgs:
            print(f"warning: {msg}", file=sys.stderr)

        files = []
        if isinstance(result, dict):
            doc = {"command": args.command, "config_sha256": digest, **result}
            _write(json.dumps(doc, indent=1, sort_keys=True) + "\n", path)
            files.append(path)
        elif args.command == "evolve" and cfg.get("batch"):
            columns, results, labels = result
            for k, ((rows, notes), label) in enumerate(zip(results, labels)):
                p = _batch_path(path, k)
                _write(render(fmt_name, columns, rows, digest, args.command, precision,
                              notes=[f"batch[{k}] {label}", *notes]), p)
                files.append(p)
        else:
            columns, rows, notes = result
            for n in notes:
                if n.startswith(("warning", "flagged")):
                    print(n, file=sys.stderr)
            _write(render(fmt_name, columns, rows, digest, args.command, precision,
                          notes=notes), path)
            files.append(path)
        if path is not None:
            meta = {
                "command": args.command,
                "config": os.path.abspath(args.config),
                "config_sha256": digest,
                "outputs": files,
                "threads": threads,
                "version": __version__,
                "started_unix": started,
                "elapsed_s": time.time() - started,
                "warnings": warn_msgs,
            }
            with open(path + ".meta.json", "w", encoding="utf-8") as fh:
                json.dump(meta, fh, indent=1, sort_keys=True)
        return EXIT_OK
    except cfgmod.ConfigError as exc:
        print(f"spinwell: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NormDriftError as exc:
        print(f"spinwell: unitarity abort: {exc} (last valid Jt={exc.time:.6g})",
              file=sys.stderr)
        return EXIT_NUMERIC
    except (SolverError, ConvergenceError, StepConvergenceError,
            DegenerateGroundState) as exc:
        print(f"spinwell: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
