"""
Scheme/tolerance independence: two integrator configurations must produce the
same solution up to their combined tolerance budget.
"""

import logging

from src.diagnostics.norms import difference_norms, norm_V2, norm_W11
from src.experiments.convergence import solve_at
from src.utils.helpers import run_indexed

logger = logging.getLogger("Uniqueness")

BUDGET_FACTOR = 10.0


def uniqueness_crosscheck(spec, config_a, config_b, N, panels_per_piece=None, q=12, threads=1):
    """
    Solve twice and compare. The bound is
        10 * (tol_a + tol_b) * max(V2, W11 of run A)
    with tol the relative tolerance of each configuration.
    """
    traj_a, traj_b = run_indexed(
        lambda config: solve_at(spec, N, config, panels_per_piece, q),
        [config_a, config_b],
        threads=threads,
    )
    v2, w11 = difference_norms(traj_a, traj_b)
    scale = max(norm_V2(traj_a), norm_W11(traj_a))
    bound = BUDGET_FACTOR * (config_a.rel_tol + config_b.rel_tol) * scale
    passed = max(v2, w11) <= bound
    logger.info(
        f"Uniqueness check {config_a.scheme}/{config_a.rel_tol:g} vs {config_b.scheme}/{config_b.rel_tol:g}: "
        f"V2 diff {v2:.3e}, W11 diff {w11:.3e}, bound {bound:.3e}"
    )
    return {
        "V2_difference": v2,
        "W11_difference": w11,
        "max_difference": max(v2, w11),
        "scale": scale,
        "bound": bound,
        "passed": bool(passed),
    }
