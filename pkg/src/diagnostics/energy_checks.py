"""
Energy balance and energy inequality checks on a trajectory's ledger.
"""

import logging

import pandas as pd

logger = logging.getLogger("EnergyChecks")


def _ledger(traj):
    frame = traj.ledger_frame()
    return frame.set_index("t")


def energy_balance_residual(traj):
    """
    E(t) - E(0) + dissipation - work_j - work_f - exchange, per sample.
    Zero for an exact solve of the truncated system.
    """
    ledger = _ledger(traj)
    total = ledger["total"]
    residual = (
        total - total.iloc[0]
        + ledger["dissipation_cum"]
        - ledger["work_j_cum"]
        - ledger["work_f_cum"]
        - ledger["exchange_cum"]
    )
    return residual.rename("energy_balance_residual")


def coupling_exchange(traj):
    return _ledger(traj)["exchange_cum"].rename("coupling_exchange")


def energy_inequality_terms(traj):
    """
    Both sides of the energy inequality per sample:
        lhs = E(t) + 1/2 int_0^t p ||sqrt(r) h_z||^2
        rhs = 2 E(0) + int_0^t p (r j, j) + 2 t int_0^t ||f||^2
    with E(0) taken from the projected initial state.
    """
    ledger = _ledger(traj)
    times = pd.Series(ledger.index, index=ledger.index)
    lhs = ledger["total"] + 0.5 * ledger["dissipation_cum"]
    rhs = 2.0 * ledger["total"].iloc[0] + ledger["j_sq_cum"] + 2.0 * times * ledger["f_sq_cum"]
    return pd.DataFrame({"lhs": lhs, "rhs": rhs, "slack": rhs - lhs})


def energy_inequality_slack(traj, spec=None):
    return energy_inequality_terms(traj)["slack"].rename("energy_inequality_slack")


def inequality_holds(traj, rel_tol=1e-8):
    """True when slack >= -rel_tol * rhs at every sample"""
    terms = energy_inequality_terms(traj)
    ok = bool((terms["slack"] >= -rel_tol * terms["rhs"].abs()).all())
    if not ok:
        worst = (terms["slack"] / terms["rhs"].abs().clip(lower=1e-300)).min()
        logger.warning(f"Energy inequality violated: worst slack/rhs = {worst:.3e}")
    return ok


def dissipation_monotone(traj):
    return bool(_ledger(traj)["dissipation_cum"].is_monotonic_increasing)
