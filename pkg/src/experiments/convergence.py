"""
N-refinement study: solve the same problem on a ladder of mode counts and
measure the pairwise differences of consecutive solutions.
"""

import logging

import pandas as pd

from src.basis.galerkin_basis import build_basis, build_grid, default_panels
from src.diagnostics.norms import difference_norms
from src.galerkin.problem_spec import breakpoints
from src.timestepper.integrator import integrate
from src.utils.errors import ValidationError
from src.utils.helpers import run_indexed

logger = logging.getLogger("ConvergenceStudy")


def solve_at(spec, N, config, panels_per_piece=None, q=12, output_times=()):
    """One Galerkin solve on a grid aligned with the problem's breakpoints"""
    basis = build_basis(N)
    grid = build_grid(breakpoints(spec), panels_per_piece or default_panels(N), q)
    return integrate(spec, config, basis, grid, output_times)


def convergence_study(spec, N_list, config, panels_per_piece=None, q=12, threads=1):
    """
    Table with one row per consecutive pair (N_i, N_{i+1}) holding the V2 and
    W11 norms of their difference, co-projected onto the larger basis.
    """
    N_list = [int(N) for N in N_list]
    if len(N_list) < 2 or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValidationError(f"N_list must be strictly increasing with at least two entries, got {N_list}")

    trajectories = run_indexed(
        lambda N: solve_at(spec, N, config, panels_per_piece, q),
        N_list,
        threads=threads,
        desc="convergence",
    )

    rows = []
    for (N_a, traj_a), (N_b, traj_b) in zip(zip(N_list, trajectories), zip(N_list[1:], trajectories[1:])):
        v2, w11 = difference_norms(traj_b, traj_a)
        rows.append({"N_coarse": N_a, "N_fine": N_b, "V2_difference": v2, "W11_difference": w11})
        logger.info(f"N={N_a} -> {N_b}: V2 diff {v2:.3e}, W11 diff {w11:.3e}")
    return pd.DataFrame(rows), trajectories


def differences_decreasing(table, column="V2_difference", floor=1e-12):
    """Strict decrease between consecutive rows; pairs already at round-off level count as converged"""
    values = table[column].tolist()
    return all(b < a or (a <= floor and b <= floor) for a, b in zip(values, values[1:]))
