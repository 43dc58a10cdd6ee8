"""
Coefficient and data perturbation ladders.

Each rung perturbs one ingredient of a base problem by an amplitude that
shrinks geometrically. For every rung the difference v = h^m - h,
w = u^m - u is measured as

    lhs = sup_t [p ||v||^2 + ||w_t||^2 + 2 ||nu w_z||^2] + 2 p r0 ||v_z||^2_{space-time}

and compared with the data-side aggregate (unit constant)

    rhs = p ||(r^m - r) h_z||^2 + p ||r^m j^m - r j||^2 + ||f^m - f||^2
          + 2 p ||v(0)||^2 + 2 ||w_t(0)||^2 + 2 ||nu w_z(0)||^2
          [+ ||((nu^m)^2 - nu^2) u_z||^2 for the nu ladder]
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.basis.galerkin_basis import build_basis, build_grid, default_panels
from src.coefficients.coefficient_field import (
    PiecewiseCoefficient,
    TrigSeries,
    add_fields,
    merge_breakpoints,
)
from src.coefficients.forcing import ForcingField
from src.diagnostics.norms import sup_over_time, time_integral
from src.galerkin.problem_spec import breakpoints
from src.timestepper.integrator import integrate
from src.utils.errors import ValidationError
from src.utils.helpers import run_indexed

logger = logging.getLogger("StabilityLadder")

LADDER_KINDS = ("r", "nu", "j", "f", "h0", "u0", "u1")
DECREASE_SLACK = 0.10
RATIO_SPREAD_LIMIT = 4.0
H0_RATIO_LIMIT = 8.0


def _step_field(eps):
    """eps on [1/2, 1), zero on [0, 1/2)"""
    return PiecewiseCoefficient(breakpoints=(0.5,), pieces=([0.0], [eps]))


def perturb(base, kind, eps, discontinuous=False):
    """Base problem with one ingredient perturbed by amplitude eps"""
    if kind not in LADDER_KINDS:
        raise ValidationError(f"unknown ladder kind {kind!r}, expected one of {LADDER_KINDS}")
    mode_cos = TrigSeries.mode("cos", 1, eps)
    mode_sin = TrigSeries.mode("sin", 1, eps)
    if kind in ("r", "nu"):
        shift = _step_field(eps) if discontinuous else PiecewiseCoefficient.constant(eps)
        return base.with_changes(**{kind: add_fields(getattr(base, kind), shift)})
    if kind in ("j", "f") and not isinstance(getattr(base, "j1" if kind == "j" else "f"), ForcingField):
        raise ValidationError(f"ladder kind {kind!r} needs a separable base forcing")
    if kind == "j":
        return base.with_changes(j1=base.j1 + ForcingField.stationary(mode_cos))
    if kind == "f":
        return base.with_changes(f=base.f + ForcingField.stationary(mode_cos))
    if kind == "h0":
        return base.with_changes(h1=add_fields(base.h1, mode_cos))
    if kind == "u0":
        return base.with_changes(u0=add_fields(base.u0, mode_sin))
    return base.with_changes(u1=add_fields(base.u1, mode_cos))


@dataclass
class StabilityLadder:
    base: object
    kind: str
    amplitudes: list
    perturbations: list = field(default_factory=list)
    discontinuous: bool = False

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.amplitudes, self.amplitudes[1:])):
            raise ValidationError(f"ladder amplitudes must be strictly decreasing, got {self.amplitudes}")
        if not self.perturbations:
            self.perturbations = [perturb(self.base, self.kind, eps, self.discontinuous) for eps in self.amplitudes]

    @classmethod
    def geometric(cls, base, kind, amplitude=0.5, rungs=4, ratio=0.5, discontinuous=False):
        if not (0.0 < ratio < 1.0):
            raise ValidationError(f"ladder ratio must lie in (0,1), got {ratio}")
        if rungs < 1:
            raise ValidationError(f"ladder needs at least one rung, got {rungs}")
        amplitudes = [amplitude * ratio**m for m in range(rungs)]
        if amplitude == 0.0:
            amplitudes = [0.0]
        return cls(base=base, kind=kind, amplitudes=amplitudes, discontinuous=discontinuous)

    def breakpoints(self):
        return merge_breakpoints(breakpoints(self.base), *(breakpoints(s) for s in self.perturbations))


class _DifferenceTerms:
    """Nodal and spectral quantities of the rung-minus-base difference"""

    def __init__(self, base_traj, rung_traj, base, rung, grid, kind):
        self.base_traj = base_traj
        self.rung_traj = rung_traj
        self.N = base_traj.N
        self.system = base_traj.system
        self.rung_system = rung_traj.system
        self.omega2 = base_traj.system.basis.omega ** 2
        self.Q = grid.integrate
        self.p = base.p
        self.kind = kind
        self.dr = self.rung_system.r - self.system.r
        self.dnu2 = self.rung_system.nu2 - self.system.nu2

    def blocks(self, y):
        N = self.N
        return y[:N], y[N:2 * N], y[2 * N:3 * N], y[3 * N:]

    def energy(self, t):
        y = self.base_traj.vector_at(t)
        d = self.rung_traj.vector_at(t) - y
        v1, v2, w, w_t = self.blocks(d)
        w_z = w @ self.system.dPsi
        return (
            self.p * float(v1 @ v1 + v2 @ v2)
            + float(w_t @ w_t)
            + 2.0 * float(self.Q(self.system.nu2 * w_z**2))
        )

    def gradient(self, t):
        d = self.rung_traj.vector_at(t) - self.base_traj.vector_at(t)
        v1, v2, _, _ = self.blocks(d)
        return float(self.omega2 @ (v1**2 + v2**2))

    def data_rate(self, t):
        """Integrand of the space-time data terms at time t"""
        base, rung = self.system, self.rung_system
        fld = base.nodal_fields(self.base_traj.vector_at(t))
        Q = self.Q
        out = self.p * Q(self.dr**2 * (fld["h1z"] ** 2 + fld["h2z"] ** 2))
        rj1 = rung.r * rung.j1(t) - base.r * base.j1(t)
        rj2 = rung.r * rung.j2(t) - base.r * base.j2(t)
        out += self.p * Q(rj1**2 + rj2**2)
        out += Q((rung.f(t) - base.f(t)) ** 2)
        if self.kind == "nu":
            out += Q((self.dnu2 * fld["uz"]) ** 2)
        return float(out)

    def initial(self):
        d = self.rung_traj.states[0] - self.base_traj.states[0]
        v1, v2, w, w_t = self.blocks(d)
        w_z = w @ self.system.dPsi
        return (
            2.0 * self.p * float(v1 @ v1 + v2 @ v2)
            + 2.0 * float(w_t @ w_t)
            + 2.0 * float(self.Q(self.system.nu2 * w_z**2))
        )


def ladder_terms(base_traj, rung_traj, base, rung, grid, kind):
    """(lhs, rhs) for one rung"""
    terms = _DifferenceTerms(base_traj, rung_traj, base, rung, grid, kind)
    T = min(base_traj.T, rung_traj.T)
    times = np.union1d(base_traj.times, rung_traj.times)
    times = times[times <= T]
    lhs = sup_over_time(terms.energy, times) + 2.0 * base.p * base.r0 * time_integral(terms.gradient, times)
    rhs = terms.initial() + time_integral(terms.data_rate, times)
    return float(lhs), float(rhs)


def stability_experiment(ladder, N, config, panels_per_piece=None, q=12, threads=1):
    """
    Per-rung (lhs, rhs) and the trend assertions: lhs strictly decreasing,
    decreasing within the slack, bounded lhs/rhs spread (and lhs <= 8 rhs
    for initial-field ladders).
    """
    basis = build_basis(N)
    grid = build_grid(ladder.breakpoints(), panels_per_piece or default_panels(N), q)
    specs = [ladder.base] + list(ladder.perturbations)
    trajectories = run_indexed(lambda s: integrate(s, config, basis, grid), specs, threads=threads, desc="stability")
    base_traj = trajectories[0]

    rows = []
    for m, (eps, rung, traj) in enumerate(zip(ladder.amplitudes, ladder.perturbations, trajectories[1:])):
        lhs, rhs = ladder_terms(base_traj, traj, ladder.base, rung, grid, ladder.kind)
        ratio = lhs / rhs if rhs > 0 else float("nan")
        rows.append({"rung": m, "kind": ladder.kind, "amplitude": eps, "N": N, "lhs": lhs, "rhs": rhs, "ratio": ratio,
                     "discontinuous": ladder.discontinuous})
        logger.info(f"Rung {m} ({ladder.kind}, eps={eps:.3g}): lhs={lhs:.3e}, rhs={rhs:.3e}")

    table = pd.DataFrame(rows)
    return table, ladder_assertions(table, ladder.kind)


def ladder_assertions(table, kind):
    lhs = table["lhs"].tolist()
    ratios = [x for x in table["ratio"].tolist() if np.isfinite(x) and x > 0]
    assertions = {
        "lhs_strictly_decreasing": all(b < a for a, b in zip(lhs, lhs[1:])),
        "lhs_decreasing_within_slack": all(b <= (1.0 + DECREASE_SLACK) * a for a, b in zip(lhs, lhs[1:])),
        "ratio_bounded": (not ratios) or max(ratios) <= RATIO_SPREAD_LIMIT * min(ratios),
    }
    if kind in ("h0", "u0", "u1"):
        assertions["lhs_within_initial_bound"] = all(x <= H0_RATIO_LIMIT for x in ratios)
    return assertions
