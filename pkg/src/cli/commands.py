"""
Command implementations behind the MagnetoSense CLI: run, study, reconstruct.
Each command returns a process exit code:
    0  success
    1  a study assertion failed, or an unexpected error
    2  invalid input (ValidationError and subclasses)
    3  solver failure (SolverError and subclasses)
"""

import functools
import json
import logging
import os
import re
import traceback

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from src.basis.galerkin_basis import GalerkinBasis, synthesize_at
from src.cli.run_config import (
    Discretization,
    RunConfig,
    build_problem,
    build_run_report,
    document_hash,
    is_run_report,
    load_document,
)
from src.diagnostics.report import build_diagnostics
from src.experiments.convergence import convergence_study, differences_decreasing, solve_at
from src.experiments.fd_oracle import fd_oracle, oracle_discrepancy
from src.experiments.random_instances import inequality_suite
from src.experiments.stability import StabilityLadder, stability_experiment
from src.experiments.uniqueness import uniqueness_crosscheck
from src.timestepper.integrator import IntegratorConfig, integrate
from src.utils.errors import SchemaError, SolverError, ValidationError
from src.utils.helpers import (
    format_assertions,
    format_pass_fail,
    format_table,
    print_error,
    print_header,
    print_success,
    print_warning,
)
from src.utils.path_helper import ensure_data_directory

logger = logging.getLogger("Commands")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_SOLVER = 3

FLOAT_FORMAT = "%.17g"
STUDY_KINDS = ("convergence", "stability", "uniqueness", "oracle", "inequality")
STATE_COLUMN = re.compile(r"^(a1|a2|b|bdot)\[(\d+)\]$")


def _write_json(path, document):
    with open(path, "w") as f:
        json.dump(document, f, indent=2, default=float)


def guarded(command):
    """Map package exceptions onto exit codes"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ValidationError as e:
            print_error(str(e))
            logger.error(f"Invalid input: {str(e)}")
            return EXIT_INVALID
        except SolverError as e:
            print_error(str(e))
            logger.error(f"Solver failure: {str(e)}")
            return EXIT_SOLVER
        except Exception as e:
            print_error(f"Unexpected error: {str(e)}")
            logger.error(f"Unexpected error: {str(e)}")
            logger.error(traceback.format_exc())
            return EXIT_FAILED

    return wrapper


# ---------------------------------------------------------------- run


def execute_run(config):
    """Integrate and diagnose one RunConfig; nothing is written"""
    spec = config.spec
    basis, grid = config.discretization.build(spec)
    traj = integrate(spec, config.integrator, basis, grid, config.outputs.times)
    diagnostics = build_diagnostics(
        traj,
        spec,
        basis,
        grid,
        requested=config.outputs.diagnostics,
        jump_times=config.outputs.jump_times,
        delta=config.outputs.jump_delta,
    )
    return traj, diagnostics


def write_run(config, traj, diagnostics, out=None):
    run_dir = out or os.path.join(
        config.outputs.directory or ensure_data_directory("runs"), config.config_hash
    )
    os.makedirs(run_dir, exist_ok=True)
    traj.state_frame().to_csv(os.path.join(run_dir, "trajectory.csv"), index=False, float_format=FLOAT_FORMAT)
    traj.ledger_frame().to_csv(os.path.join(run_dir, "ledger.csv"), index=False, float_format=FLOAT_FORMAT)
    _write_json(os.path.join(run_dir, "diagnostics.json"), diagnostics)
    report = build_run_report(config, traj, diagnostics)
    _write_json(os.path.join(run_dir, "report.json"), report)
    logger.info(f"Run artifacts written to {run_dir}")
    return run_dir, report


def _print_run_summary(traj, diagnostics):
    rows = [["steps", traj.stats.get("steps")], ["rejected", traj.stats.get("rejected", "n/a")],
            ["samples", traj.times.size], ["final energy", traj.ledger[-1].total]]
    if "eq24_residual" in diagnostics:
        rows.append(["max |energy balance residual|", max(abs(x) for x in diagnostics["eq24_residual"])])
    if "eq37_slack" in diagnostics:
        rows.append(["min inequality slack", min(diagnostics["eq37_slack"])])
    if "transmission_defect" in diagnostics:
        rows.append(["max transmission defect", diagnostics["transmission_defect"]])
    if "norms" in diagnostics:
        rows.append(["V2 norm", diagnostics["norms"]["V2"]])
        rows.append(["W11 norm", diagnostics["norms"]["W11"]])
    if "weak_residual" in diagnostics:
        rows.append(["max weak residual", max(diagnostics["weak_residual"].values())])
    print(format_table(rows, headers=["Quantity", "Value"]))


@guarded
def cmd_run(config_path, out=None):
    """Solve one configuration (or re-run the config echoed in a report) and write its artifacts"""
    document = load_document(config_path)
    if is_run_report(document):
        logger.info(f"Re-running configuration {document['config_hash']} from report {config_path}")
        document = document["config"]
    config = RunConfig.from_document(document)

    print_header(f"Run {config.config_hash}: N={config.discretization.N}, T={config.spec.T}, "
                 f"scheme={config.integrator.scheme}")
    traj, diagnostics = execute_run(config)
    run_dir, _ = write_run(config, traj, diagnostics, out)
    _print_run_summary(traj, diagnostics)
    print_success(f"Artifacts written to {run_dir}")
    return EXIT_OK


# ---------------------------------------------------------------- study

STUDY_KEYS = {"kind", "problem", "discretization", "integrator", "N_list", "ladder", "integrator_b",
              "fd", "tolerance", "count", "seed"}


def _study_directory(manifest, out):
    return out or os.path.join(ensure_data_directory("studies"), document_hash(manifest))


def _flush_study(study_dir, manifest, table, assertions, status, error=None, extra=None):
    os.makedirs(study_dir, exist_ok=True)
    if table is not None and len(table):
        table.to_csv(os.path.join(study_dir, "rungs.csv"), index=False, float_format=FLOAT_FORMAT)
    summary = {
        "kind": manifest.get("kind"),
        "manifest_hash": document_hash(manifest),
        "manifest": manifest,
        "assertions": {k: bool(v) for k, v in (assertions or {}).items()},
        "passed": bool(assertions) and all(assertions.values()),
        "status": status,
    }
    if error is not None:
        summary["error"] = error
    if extra:
        summary.update(extra)
    _write_json(os.path.join(study_dir, "summary.json"), summary)
    return summary


def _study_convergence(manifest, spec, disc, config, threads, seed=None):
    N_list = manifest.get("N_list", [8, 16, 32])
    table, _ = convergence_study(spec, N_list, config, disc.panels_per_piece, disc.q, threads=threads)
    assertions = {
        "V2_differences_decreasing": differences_decreasing(table, "V2_difference"),
        "W11_differences_decreasing": differences_decreasing(table, "W11_difference"),
    }
    return table, assertions, {}


def _study_stability(manifest, spec, disc, config, threads, seed=None):
    ladder_doc = dict(manifest.get("ladder") or {})
    unknown = set(ladder_doc) - {"kind", "amplitude", "rungs", "ratio", "discontinuous"}
    if unknown:
        raise SchemaError(f"unknown ladder keys: {sorted(unknown)}")
    if "kind" not in ladder_doc:
        raise SchemaError("stability study needs ladder.kind")
    ladder = StabilityLadder.geometric(spec, **ladder_doc)
    table, assertions = stability_experiment(ladder, disc.N, config, disc.panels_per_piece, disc.q, threads=threads)
    return table, assertions, {}


def _study_uniqueness(manifest, spec, disc, config, threads, seed=None):
    config_b = IntegratorConfig.from_document(manifest.get("integrator_b") or {"scheme": "radau"})
    result = uniqueness_crosscheck(spec, config, config_b, disc.N, disc.panels_per_piece, disc.q, threads=threads)
    table = pd.DataFrame([result])
    return table, {"within_tolerance_budget": result["passed"]}, {"result": result}


def _study_oracle(manifest, spec, disc, config, threads, seed=None):
    fd = dict(manifest.get("fd") or {})
    unknown = set(fd) - {"M", "dt"}
    if unknown:
        raise SchemaError(f"unknown fd keys: {sorted(unknown)}")
    tolerance = float(manifest.get("tolerance", 1e-3))
    M = int(fd.get("M", 512))
    dt = float(fd.get("dt", 1e-3))
    # alignment and step checks come before the spectral solve
    solution = fd_oracle(spec, M, dt)
    traj = solve_at(spec, disc.N, config, disc.panels_per_piece, disc.q)
    discrepancy = oracle_discrepancy(traj, solution)
    table = pd.DataFrame([{"N": disc.N, "M": M, "dt": solution.dt, "discrepancy": discrepancy,
                           "tolerance": tolerance}])
    return table, {"discrepancy_within_tolerance": discrepancy <= tolerance}, {"discrepancy": discrepancy}


def _study_inequality(manifest, spec, disc, config, threads, seed=None):
    count = int(manifest.get("count", 20))
    seed = int(seed if seed is not None else manifest.get("seed", 0))
    tolerance = float(manifest.get("tolerance", 1e-8))
    table = inequality_suite(count, seed, disc.N, config, threads=threads, rel_tol=tolerance)
    return table, {"all_instances_satisfy_inequality": bool(table["passed"].all())}, {"seed": seed}


STUDIES = {
    "convergence": _study_convergence,
    "stability": _study_stability,
    "uniqueness": _study_uniqueness,
    "oracle": _study_oracle,
    "inequality": _study_inequality,
}


@guarded
def cmd_study(manifest_path, out=None, seed=None, threads=1):
    """Run a study manifest and write rungs.csv plus summary.json"""
    manifest = load_document(manifest_path)
    if not isinstance(manifest, dict):
        raise SchemaError("study manifest must be an object")
    kind = manifest.get("kind")
    if kind not in STUDIES:
        raise SchemaError(f"unknown study kind {kind!r}, expected one of {STUDY_KINDS}")
    unknown = set(manifest) - STUDY_KEYS
    if unknown:
        raise SchemaError(f"unknown study manifest keys: {sorted(unknown)}")

    disc = Discretization.from_document(manifest.get("discretization"))
    config = IntegratorConfig.from_document(manifest.get("integrator"))
    spec = None
    if kind != "inequality":
        if "problem" not in manifest:
            raise SchemaError(f"{kind} study needs a 'problem' section")
        spec = build_problem(manifest["problem"])

    study_dir = _study_directory(manifest, out)
    print_header(f"Study {kind} -> {study_dir}")
    try:
        table, assertions, extra = STUDIES[kind](manifest, spec, disc, config, threads, seed=seed)
    except SolverError as e:
        _flush_study(study_dir, manifest, None, None, status="solver_error", error=str(e))
        raise

    summary = _flush_study(study_dir, manifest, table, assertions, status="completed", extra=extra)
    print(format_table(table.to_dict("records"), headers="keys"))
    print(format_assertions(assertions))
    if summary["passed"]:
        print_success(f"Study {kind}: {format_pass_fail(True)}")
        return EXIT_OK
    print_warning(f"Study {kind}: {format_pass_fail(False)}")
    return EXIT_FAILED


# ---------------------------------------------------------------- reconstruct


def read_trajectory(path):
    """(times, state matrix, N) from a trajectory CSV"""
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise SchemaError(f"file not found: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SchemaError(f"{path} is not a readable trajectory CSV: {str(e)}")
    return parse_trajectory_frame(frame)


def parse_trajectory_frame(frame):
    if "t" not in frame.columns:
        raise SchemaError("trajectory CSV has no 't' column")
    blocks = {"a1": {}, "a2": {}, "b": {}, "bdot": {}}
    for column in frame.columns:
        if column == "t":
            continue
        match = STATE_COLUMN.match(column)
        if match is None:
            raise SchemaError(f"unexpected trajectory column {column!r}")
        blocks[match.group(1)][int(match.group(2))] = column
    N = len(blocks["a1"])
    for name, cols in blocks.items():
        if N == 0 or sorted(cols) != list(range(N)):
            raise SchemaError(f"trajectory block {name} must hold columns {name}[0]..{name}[{max(N - 1, 0)}]")
    ordered = [blocks[name][k] for name in ("a1", "a2", "b", "bdot") for k in range(N)]
    try:
        times = frame["t"].to_numpy(dtype=float)
        states = frame[ordered].to_numpy(dtype=float)
    except ValueError as e:
        raise SchemaError(f"trajectory CSV holds non-numeric values: {str(e)}")
    if times.size < 2 or not np.all(np.diff(times) > 0):
        raise SchemaError("trajectory times must be strictly increasing with at least two samples")
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(states))):
        raise SchemaError("trajectory CSV holds non-finite values")
    return times, states, N


def reconstruct_fields(times, states, N, query_times, resolution):
    """
    Fields on z = i/resolution at the query times. Sample times are read back
    exactly; between samples each coefficient is interpolated by a cubic spline.
    """
    if isinstance(resolution, bool) or int(resolution) != resolution or resolution < 1:
        raise ValidationError(f"resolution must be a positive integer, got {resolution!r}")
    resolution = int(resolution)
    spline = CubicSpline(times, states, axis=0)
    basis = GalerkinBasis(N)
    z = np.arange(resolution) / resolution
    frames = []
    for t in query_times:
        t = float(t)
        if not (times[0] <= t <= times[-1]):
            raise ValidationError(f"time {t} outside the trajectory range [{times[0]}, {times[-1]}]")
        k = int(np.argmin(np.abs(times - t)))
        y = states[k] if abs(times[k] - t) <= 1e-13 * max(1.0, abs(t)) else spline(t)
        h1, _ = synthesize_at(y[:N], basis, z)
        h2, _ = synthesize_at(y[N:2 * N], basis, z)
        u, u_z = synthesize_at(y[2 * N:3 * N], basis, z)
        u_t, _ = synthesize_at(y[3 * N:], basis, z)
        frames.append(pd.DataFrame({"t": t, "z": z, "h1": h1, "h2": h2, "u": u, "u_t": u_t, "u_z": u_z}))
    return pd.concat(frames, ignore_index=True)


@guarded
def cmd_reconstruct(trajectory_path, times, resolution, out=None):
    """Evaluate a stored trajectory on a uniform grid at the requested times"""
    sample_times, states, N = read_trajectory(trajectory_path)
    frame = reconstruct_fields(sample_times, states, N, times, resolution)
    out = out or os.path.join(os.path.dirname(os.path.abspath(trajectory_path)), "fields.csv")
    frame.to_csv(out, index=False, float_format=FLOAT_FORMAT)
    print_success(f"Reconstructed {len(times)} time(s) on {int(resolution)} points -> {out}")
    return EXIT_OK
