"""
Randomized discontinuous-coefficient instances and the energy inequality suite.
"""

import logging

import numpy as np
import pandas as pd

from src.coefficients.coefficient_field import PiecewiseCoefficient, TrigSeries
from src.coefficients.forcing import ForcingField, ForcingTerm, TimeProfile
from src.diagnostics.energy_checks import energy_inequality_terms
from src.experiments.convergence import solve_at
from src.galerkin.problem_spec import ProblemSpec
from src.utils.helpers import run_indexed

logger = logging.getLogger("RandomInstances")

# breakpoints are drawn from the dyadic grid k/16, at least 2/16 apart
BREAKPOINT_GRID = 16
MIN_SEPARATION = 2
COEFFICIENT_RANGE = (0.5, 2.0)
DATA_AMPLITUDE = 0.3


def _random_breakpoints(rng, m):
    if m == 0:
        return ()
    while True:
        ks = np.sort(rng.choice(np.arange(1, BREAKPOINT_GRID), size=m, replace=False))
        gaps = np.diff(np.concatenate((ks, [ks[0] + BREAKPOINT_GRID])))
        if gaps.min() >= MIN_SEPARATION:
            return tuple(float(k) / BREAKPOINT_GRID for k in ks)


def _random_piecewise(rng, bps):
    lo, hi = COEFFICIENT_RANGE
    return PiecewiseCoefficient(bps, tuple([float(v)] for v in rng.uniform(lo, hi, len(bps) + 1)))


def _random_series(rng, modes=2, amplitude=DATA_AMPLITUDE, mean=True):
    return TrigSeries(
        float(rng.uniform(-amplitude, amplitude)) if mean else 0.0,
        tuple(rng.uniform(-amplitude, amplitude, modes)),
        tuple(rng.uniform(-amplitude, amplitude, modes)),
    )


def random_instance(seed, m, T=0.25):
    """Piecewise-constant r, nu in [0.5, 2] with m shared jumps and low-mode data"""
    rng = np.random.default_rng(seed)
    bps = _random_breakpoints(rng, m)
    decay = TimeProfile("exp", (1.0, -float(rng.uniform(0.0, 2.0))))
    oscillation = TimeProfile("trig", (1.0, float(rng.uniform(0.5, 3.0))))
    return ProblemSpec(
        p=float(rng.uniform(0.5, 2.0)),
        r=_random_piecewise(rng, bps),
        nu=_random_piecewise(rng, bps),
        T=T,
        j1=ForcingField((ForcingTerm(decay, _random_series(rng, 1, 0.3, mean=False)),)),
        j2=ForcingField((ForcingTerm(oscillation, _random_series(rng, 1, 0.3, mean=False)),)),
        f=ForcingField((ForcingTerm(oscillation, _random_series(rng, 1, 0.3)),)),
        h1=_random_series(rng),
        h2=_random_series(rng),
        u0=_random_series(rng, mean=False),
        u1=_random_series(rng, mean=False),
    )


def inequality_suite(count, seed, N, config, threads=1, rel_tol=1e-8):
    """
    Run `count` random instances (m cycling through 0, 1, 2) and report the
    worst slack/rhs of the energy inequality for each.
    """
    cases = [(seed + i, i % 3) for i in range(count)]

    def run(case):
        case_seed, m = case
        spec = random_instance(case_seed, m)
        traj = solve_at(spec, N, config)
        terms = energy_inequality_terms(traj)
        worst = float((terms["slack"] / terms["rhs"].abs()).min())
        return {
            "seed": case_seed,
            "m": m,
            "min_slack": float(terms["slack"].min()),
            "min_slack_ratio": worst,
            "passed": bool((terms["slack"] >= -rel_tol * terms["rhs"].abs()).all()),
        }

    rows = run_indexed(run, cases, threads=threads, desc="inequality")
    table = pd.DataFrame(rows)
    logger.info(f"Inequality suite: {int(table['passed'].sum())}/{len(table)} instances passed")
    return table
