"""
Command line entry point: verify-fn, ode, simulate, analyze, report, all.

Exit codes: 0 every check passed, 1 a check failed, 2 usage, configuration
or missing/existing artifacts, 3 numerical failure.
"""

import argparse
import logging
import math
import sys
from typing import Dict, List, Optional

import numpy as np

from src import __version__
from src.diagnostics import RunArtifacts, assemble_report
from src.errors import (
    ArtifactExists,
    ConfigError,
    ConvergenceError,
    DomainError,
    MissingArtifacts,
    NumericalFailure,
)
from src.nonlinearity import coefficient_table, eval_log_F
from src.nonlinearity.suites import function_suite, function_table
from src.ode import ode_integrate
from src.selfsimilar import (
    EnergyRecord,
    LedgerRow,
    build_frames,
    energy_inequality_check,
    energy_series,
    residual_series,
)
from src.solver.run import TABLE_HEADROOM, run_to_blowup
from src.store import ArtifactStore
from src.store.codec import (
    estimate_from_dict,
    estimate_to_dict,
    frame_from_dict,
    frame_to_dict,
    plain,
    snapshot_from_dict,
    snapshot_to_dict,
)
from .config import RunConfig, load_config, parse_value


logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# flag -> dotted config path
OVERRIDES = {
    "p": "nonlinearity.p",
    "q": "nonlinearity.q",
    "family": "nonlinearity.family",
    "n": "grid.n",
    "R": "grid.R",
    "J": "grid.J",
    "amplitude": "init.amplitude",
    "phi_stop": "solver.phi_stop",
    "safety": "solver.safety",
    "alpha": "analysis.alpha",
    "c_compact": "analysis.C_compact",
    "y_resolution": "analysis.y_resolution",
}

FN_TABLE_HEADER = ("u", "log_F", "F", "F_inv_F", "fprimeF", "remainder_scaled")
ODE_HEADER = ("t", "y", "F", "gap", "log_F", "log_gap")
RESIDUAL_HEADER = ("s", "residual_norm")
ESTIMATE_FILE = "snapshots/estimate.json"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="Output directory (defaults to output_dir from the config)")
    common.add_argument("--force", action="store_true", help="Overwrite an existing run")
    common.add_argument("--threads", type=int, default=1, help="Worker threads for frame processing")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="Warnings only")
    for flag in OVERRIDES:
        common.add_argument(f"--{flag.replace('_', '-')}", dest=flag, help=f"Override {OVERRIDES[flag]}")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="Override any configuration leaf")

    parser = argparse.ArgumentParser(description="Blow-up laboratory for u_t = Δu + e^{u^p} u^q")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    subparsers.add_parser("verify-fn", parents=[common], help="Property suites for F, F^-1 and f'F")
    subparsers.add_parser("ode", parents=[common], help="Integrate the spatially constant problem")
    subparsers.add_parser("simulate", parents=[common], help="Run the PDE to Φ_stop and store snapshots")
    subparsers.add_parser("analyze", parents=[common], help="Build frames and energy ledgers from snapshots")
    subparsers.add_parser("report", parents=[common], help="Judge every check and write the report")
    subparsers.add_parser("all", parents=[common], help="verify-fn, ode, simulate, analyze and report")
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, object]:
    overrides: Dict[str, object] = {}
    for flag, path in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[path] = parse_value(value)
    for item in args.set:
        if "=" not in item:
            raise ConfigError([("--set", f"expected SECTION.KEY=VALUE, got {item!r}")])
        key, value = item.split("=", 1)
        overrides[key.strip()] = parse_value(value.strip())
    return overrides


def _print_written(paths: List[str]):
    for path in paths:
        print(f"✓ wrote {path}")


def _manifest_fields(config: RunConfig) -> Dict[str, object]:
    return {
        "config": plain(config.to_dict()),
        "config_hash": config.config_hash(),
        "run_id": config.run_id,
        "code_version": __version__,
    }


def _check_manifest_config(store: ArtifactStore, config: RunConfig):
    stored = store.load_manifest().get("config_hash")
    if stored and stored != config.config_hash():
        logger.warning(f"configuration hash {config.config_hash()[:12]} differs from the stored run's "
                       f"{stored[:12]}; verdicts refer to the stored snapshots")


# Commands

def cmd_verify_fn(config: RunConfig, store: ArtifactStore) -> int:
    nl = config.nl()
    print(f"\nProperty suites for {nl}")
    rows = function_suite(nl)
    for row in rows:
        mark = "✓" if row.passed else "✗"
        where = f" at u={row.worst_u:.6g}" if row.worst_u is not None else ""
        print(f"{mark} {row.name} ({row.anchor}): {row.statistic:.3e} vs {row.threshold:.3e}{where}")

    u = np.linspace(0.0, 50.0, 201)
    written = [
        store.write_table("ledgers/fn_table.csv", FN_TABLE_HEADER, function_table(nl, u)),
        store.write_json("ledgers/fn_suite.json", plain([vars(r) for r in rows])),
    ]
    store.save_manifest(_manifest_fields(config))
    _print_written(written)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK_FAILED


def cmd_ode(config: RunConfig, store: ArtifactStore) -> int:
    nl, ode = config.nl(), config.ode
    run = ode_integrate(nl, ode.y0, ode.stop_value, ode.rel_tol)
    backward = max(
        abs(t + math.exp(eval_log_F(nl, y).log_magnitude) - run.T) / run.T for t, y, _ in run.samples
    )
    print(f"\nODE {nl}: y0={ode.y0} T={run.T:.15g}, {run.steps} steps, max |t + F(y) - T|/T = {backward:.3e}")
    written = [store.write_table("ledgers/ode.csv", ODE_HEADER, run.table())]
    store.save_manifest({**_manifest_fields(config), "ode": {"T": run.T, "steps": run.steps,
                                                             "backward_error": backward}})
    _print_written(written)
    return EXIT_OK


def cmd_simulate(config: RunConfig, store: ArtifactStore, force: bool) -> int:
    store.prepare(force)
    try:
        result = run_to_blowup(config)
    except NumericalFailure as e:
        store.save_manifest({**_manifest_fields(config), "failure": {"error": str(e), "state": plain(e.state)}})
        raise

    written = []
    for k, snap in enumerate(result.snapshots):
        written.append(store.write_json(f"snapshots/snapshot_{k:04d}.json", snapshot_to_dict(snap)))
    for k, snap in enumerate(result.probes):
        written.append(store.write_json(f"snapshots/probe_{k:02d}.json", snapshot_to_dict(snap)))
    written.append(store.write_json(ESTIMATE_FILE, estimate_to_dict(result.estimate)))

    stats = {
        "steps": result.steps,
        "snapshots": len(result.snapshots),
        "amplitude": result.amplitude,
        "center_monotone": result.center_monotone,
    }
    store.save_manifest({**_manifest_fields(config), "estimate": estimate_to_dict(result.estimate),
                         "run_stats": plain(stats)})
    est = result.estimate
    print(f"\n✓ Blow-up estimate T = {est.T_est:.15g} ({est.method}, ±{est.uncertainty:.3e})")
    _print_written(written)
    return EXIT_OK


def _load_snapshots(store: ArtifactStore):
    snap_paths = store.list("snapshots", "snapshot_")
    probe_paths = store.list("snapshots", "probe_")
    estimate_paths = [ESTIMATE_FILE] if store.exists(ESTIMATE_FILE) else []
    store.require({"snapshots": snap_paths, "estimate": estimate_paths})
    snapshots = [snapshot_from_dict(store.read_json(p)) for p in snap_paths]
    probes = [snapshot_from_dict(store.read_json(p)) for p in probe_paths]
    return snapshots, probes, estimate_from_dict(store.read_json(ESTIMATE_FILE))


def cmd_analyze(config: RunConfig, store: ArtifactStore, threads: int) -> int:
    _check_manifest_config(store, config)
    snapshots, _, estimate = _load_snapshots(store)
    nl, grid, analysis = config.nl(), config.radial_grid(), config.analysis

    frames = build_frames(snapshots, estimate.log_gaps, config.alpha, analysis.y_resolution, grid,
                          analysis.y_max, threads)
    if len(frames) < 5:
        raise MissingArtifacts(["frames (fewer than five snapshots reached s >= 1)"])
    top = max(f.s for f in frames) + max(s.phi_max for s in snapshots)
    table = coefficient_table(nl, TABLE_HEADROOM * max(top, config.solver.phi_stop) + 20.0)
    records = energy_series(frames, nl, table, threads)
    ledger = energy_inequality_check(records)

    store.clear("frames", "frame_")
    written = [store.write_json(f"frames/frame_{k:04d}.json", frame_to_dict(f)) for k, f in enumerate(frames)]
    written.append(store.write_table("ledgers/energy.csv", EnergyRecord.FIELDS, [r.row() for r in records]))
    written.append(store.write_table("ledgers/energy_inequality.csv", LedgerRow.FIELDS, [r.row() for r in ledger]))
    written.append(store.write_table("ledgers/veq_residual.csv", RESIDUAL_HEADER,
                                     residual_series(frames, nl, table)))
    store.save_manifest({**_manifest_fields(config), "analysis": {"frames": len(frames),
                                                                  "energy_records": len(records)}})
    held = sum(r.holds for r in ledger)
    print(f"\n✓ {len(frames)} frames, energy inequality on {held}/{len(ledger)} intervals")
    _print_written(written)
    return EXIT_OK


def load_run(config: RunConfig, store: ArtifactStore) -> RunArtifacts:
    snapshots, probes, estimate = _load_snapshots(store)
    frame_paths = store.list("frames", "frame_")
    energy_paths = [p for p in ("ledgers/energy.csv",) if store.exists(p)]
    ledger_paths = [p for p in ("ledgers/energy_inequality.csv",) if store.exists(p)]
    store.require({"frames": frame_paths, "energy": energy_paths, "ledger": ledger_paths})
    return RunArtifacts(
        config=config,
        snapshots=snapshots,
        probes=probes,
        estimate=estimate,
        frames=[frame_from_dict(store.read_json(p)) for p in frame_paths],
        records=[EnergyRecord.from_row(row) for row in store.read_table("ledgers/energy.csv")],
        ledger=[LedgerRow.from_row(row) for row in store.read_table("ledgers/energy_inequality.csv")],
        run_stats=store.load_manifest().get("run_stats", {}),
    )


def cmd_report(config: RunConfig, store: ArtifactStore) -> int:
    _check_manifest_config(store, config)
    report = assemble_report(load_run(config, store), __version__)
    written = [
        store.write_json("report.json", report.to_dict()),
        store.write_text("report.md", report.to_markdown()),
    ]
    store.save_manifest(_manifest_fields(config))
    print()
    for check in report.checks:
        mark = {"pass": "✓", "fail": "✗", "info": "·"}[check.verdict.value]
        print(f"{mark} {check.name}: {check.verdict.value}")
    _print_written(written)
    return EXIT_CHECK_FAILED if report.failed else EXIT_OK


def cmd_all(config: RunConfig, store: ArtifactStore, force: bool, threads: int) -> int:
    codes = [cmd_simulate(config, store, force), cmd_verify_fn(config, store), cmd_ode(config, store),
             cmd_analyze(config, store, threads), cmd_report(config, store)]
    return max(codes)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="[%(name)s] %(message)s")

    try:
        config = load_config(args.config, collect_overrides(args))
        store = ArtifactStore(args.out or config.output_dir)
        if not config.in_theorem_scope:
            print(f"! n={config.grid.n} is out of theorem scope (the profile result covers n <= 2)")

        if args.command == "verify-fn":
            return cmd_verify_fn(config, store)
        elif args.command == "ode":
            return cmd_ode(config, store)
        elif args.command == "simulate":
            return cmd_simulate(config, store, args.force)
        elif args.command == "analyze":
            return cmd_analyze(config, store, args.threads)
        elif args.command == "report":
            return cmd_report(config, store)
        elif args.command == "all":
            return cmd_all(config, store, args.force, args.threads)
    except (ConfigError, DomainError, MissingArtifacts, ArtifactExists) as e:
        print(f"\n✗ {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, ConvergenceError) as e:
        print(f"\n✗ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_USAGE
