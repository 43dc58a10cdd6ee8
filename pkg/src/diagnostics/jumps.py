"""
One-sided jump estimates of the reconstructed fields and fluxes at coefficient breakpoints.

Besides the raw one-sided differences, each flux row carries a conservation
defect: the mean over window half-widths s in [delta, 2 delta] of

    F(z + s) - F(z - s) - int_{z-s}^{z+s} (conserved quantity)_t dz

For the exact solution the flux balance holds on every window, so the defect
carries no O(delta) bias from smooth variation of the flux and shrinks with N
at fixed delta.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.basis.galerkin_basis import GalerkinBasis, synthesize_at
from src.galerkin.problem_spec import breakpoints as problem_breakpoints
from src.utils.errors import ValidationError

logger = logging.getLogger("Jumps")

QUANTITIES = ("h1", "h2", "u", "flux1", "flux2", "elastic_flux")
FLUXES = ("flux1", "flux2", "elastic_flux")
TRANSMISSION_FLUXES = ("flux1", "flux2")
COLUMNS = ["z", "quantity", "jump", "jump_half", "extrapolated", "defect"]
WINDOW_POINTS = 8


@dataclass(frozen=True)
class JumpReport:
    """
    Per breakpoint and quantity: jump at offset delta, at delta/2, the
    extrapolated value 2 J(delta/2) - J(delta), and for the fluxes the
    conservation defect (None for the fields). flux_l is r (h_lz - j_l),
    elastic_flux is nu^2 u_z.
    """

    t: float
    delta: float
    breakpoints: tuple = ()
    rows: list = field(default_factory=list)

    @property
    def is_empty(self):
        return not self.rows

    def as_frame(self):
        return pd.DataFrame(self.rows, columns=COLUMNS)

    def max_abs(self, quantity, column="jump"):
        values = [abs(row[column]) for row in self.rows if row["quantity"] == quantity and row[column] is not None]
        return max(values) if values else 0.0

    def transmission_defect(self):
        """Largest |defect| of the magnetic fluxes over all breakpoints"""
        return max(self.max_abs(q, column="defect") for q in TRANSMISSION_FLUXES)

    def to_document(self):
        return {"t": self.t, "delta": self.delta, "rows": list(self.rows)}


def max_delta(bps):
    """Half the smallest piece width, the wrap-around piece included"""
    if not bps:
        return 0.5
    bps = np.asarray(bps)
    widths = np.diff(np.concatenate((bps, [bps[0] + 1.0])))
    return 0.5 * float(widths.min())


def _one_sided(traj, spec, y, t, z):
    N = traj.N
    basis = GalerkinBasis(N)
    a1, a2, b, bdot = y[:N], y[N:2 * N], y[2 * N:3 * N], y[3 * N:]
    h1, h1z = synthesize_at(a1, basis, z)
    h2, h2z = synthesize_at(a2, basis, z)
    u, uz = synthesize_at(b, basis, z)
    ut, _ = synthesize_at(bdot, basis, z)
    r = np.asarray(spec.r.evaluate(z))
    nu2 = np.asarray(spec.nu.evaluate(z)) ** 2
    j1 = spec.j1.evaluate(t, z)
    j2 = spec.j2.evaluate(t, z)
    return {
        "h1": h1,
        "h2": h2,
        "u": u,
        "ut": ut,
        "flux1": r * (h1z - j1),
        "flux2": r * (h2z - j2),
        "elastic_flux": nu2 * uz,
        "pressure": spec.p * (h1**2 + h2**2),
    }


def _jumps(traj, spec, y, t, z, delta):
    right = _one_sided(traj, spec, y, t, z + delta)
    left = _one_sided(traj, spec, y, t, z - delta)
    return {q: right[q] - left[q] for q in QUANTITIES}


def _balance_fluxes(sided):
    """Full fluxes whose z-derivative is the rate of h1, h2 and u_t - f"""
    return {
        "flux1": sided["flux1"] - sided["h1"] * sided["ut"],
        "flux2": sided["flux2"] - sided["h2"] * sided["ut"],
        "elastic_flux": sided["elastic_flux"] - sided["pressure"],
    }


def _forcing_integral(spec, t, z, s, nodes, weights):
    """int_{z-s}^{z+s} f(t, .) dz, split at z so breakpoints at z stay on panel edges"""
    if spec.f.is_zero:
        return np.zeros(z.shape)
    offsets = 0.5 * s * (1.0 + nodes)
    left = spec.f.evaluate(t, (z[:, None] - offsets[None, :]).ravel()).reshape(z.size, -1)
    right = spec.f.evaluate(t, (z[:, None] + offsets[None, :]).ravel()).reshape(z.size, -1)
    return 0.5 * s * ((left + right) @ weights)


def _conservation_defects(traj, spec, y, t, z, delta):
    N = traj.N
    basis = GalerkinBasis(N)
    dy = traj.system.rhs_vector(t, y)
    rates = {"flux1": dy[:N], "flux2": dy[N:2 * N], "elastic_flux": dy[3 * N:]}
    psi, _ = basis.evaluate(z)

    nodes, weights = np.polynomial.legendre.leggauss(WINDOW_POINTS)
    offsets = delta * (1.5 + 0.5 * nodes)
    defects = {q: np.zeros(z.shape) for q in FLUXES}
    for s, w in zip(offsets, 0.5 * weights):
        span = 2.0 * s * np.sinc(basis.omega * s / np.pi)
        right = _balance_fluxes(_one_sided(traj, spec, y, t, z + s))
        left = _balance_fluxes(_one_sided(traj, spec, y, t, z - s))
        forcing = _forcing_integral(spec, t, z, s, nodes, weights)
        for q in FLUXES:
            stored = (rates[q] * span) @ psi
            if q == "elastic_flux":
                stored = stored - forcing
            defects[q] = defects[q] + w * (right[q] - left[q] - stored)
    return defects


def jump_report(traj, spec, t, delta):
    bps = problem_breakpoints(spec)
    if not (0.0 <= t <= traj.T):
        raise ValidationError(f"t={t} outside [0, {traj.T}]")
    limit = max_delta(bps)
    if not (0.0 < delta < limit):
        raise ValidationError(f"delta must lie in (0, {limit:.6g}), got {delta}")
    if not bps:
        return JumpReport(t=float(t), delta=float(delta))

    y = traj.vector_at(t)
    z = np.asarray(bps)
    full = _jumps(traj, spec, y, t, z, delta)
    half = _jumps(traj, spec, y, t, z, 0.5 * delta)
    defects = _conservation_defects(traj, spec, y, t, z, delta)
    rows = []
    for k, zk in enumerate(bps):
        for q in QUANTITIES:
            rows.append({
                "z": float(zk),
                "quantity": q,
                "jump": float(full[q][k]),
                "jump_half": float(half[q][k]),
                "extrapolated": float(2.0 * half[q][k] - full[q][k]),
                "defect": float(defects[q][k]) if q in defects else None,
            })
    logger.debug(f"jump report at t={t:.6g}: {len(bps)} breakpoints, delta={delta:.3g}")
    return JumpReport(t=float(t), delta=float(delta), breakpoints=tuple(bps), rows=rows)
