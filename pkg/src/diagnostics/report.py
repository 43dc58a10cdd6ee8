"""
Assemble the diagnostics block of a run into one JSON-shaped dict.
"""

import logging

from src.diagnostics.energy_checks import (
    coupling_exchange,
    energy_balance_residual,
    energy_inequality_terms,
)
from src.diagnostics.jumps import jump_report, max_delta
from src.diagnostics.norms import max_abs_h, norm_V2, norm_W11
from src.diagnostics.weak_form import weak_residual
from src.galerkin.problem_spec import breakpoints as problem_breakpoints

logger = logging.getLogger("DiagnosticsReport")

DEFAULT_DIAGNOSTICS = ("energy_balance", "energy_inequality", "jumps", "weak_residual", "norms")
DEFAULT_JUMP_DELTA = 0.05


def default_delta(spec):
    return min(DEFAULT_JUMP_DELTA, 0.5 * max_delta(problem_breakpoints(spec)))


def build_diagnostics(traj, spec, basis, grid, requested=DEFAULT_DIAGNOSTICS, jump_times=None, delta=None):
    """
    Keys: times, eq24_residual (energy balance), coupling_exchange,
    eq37_slack (energy inequality), energy_inequality_rhs, jumps, weak_residual,
    transmission_defect, norms, max_abs_h. Blocks not requested are omitted.
    """
    requested = set(requested)
    out = {"times": [float(t) for t in traj.times]}

    if "energy_balance" in requested:
        out["eq24_residual"] = energy_balance_residual(traj).tolist()
        out["coupling_exchange"] = coupling_exchange(traj).tolist()

    if "energy_inequality" in requested:
        terms = energy_inequality_terms(traj)
        out["eq37_slack"] = terms["slack"].tolist()
        out["energy_inequality_rhs"] = terms["rhs"].tolist()

    if "jumps" in requested:
        delta = delta if delta is not None else default_delta(spec)
        times = jump_times if jump_times is not None else [traj.T]
        reports = [jump_report(traj, spec, t, delta) for t in times]
        out["jumps"] = [report.to_document() for report in reports]
        out["transmission_defect"] = max((report.transmission_defect() for report in reports), default=0.0)

    if "weak_residual" in requested:
        res_h1, res_h2, res_u = weak_residual(traj, spec, basis, grid)
        out["weak_residual"] = {"h1": res_h1, "h2": res_h2, "u": res_u}

    if "norms" in requested:
        out["norms"] = {"V2": norm_V2(traj), "W11": norm_W11(traj)}
        out["max_abs_h"] = max_abs_h(traj)

    logger.info(f"Diagnostics built: {sorted(k for k in out if k != 'times')}")
    return out


def inequality_ok(diagnostics, rel_tol=1e-8):
    slack = diagnostics.get("eq37_slack", [])
    rhs = diagnostics.get("energy_inequality_rhs", [])
    return all(s >= -rel_tol * abs(r) for s, r in zip(slack, rhs))
