"""
Galerkin ODE system for the coupled field/displacement equations

    h_t  = (r h_z - h u_t - r j)_z
    u_tt = (nu^2 u_z - p |h|^2)_z + f

on the torus, with every pairing evaluated pointwise at the quadrature nodes.
State vectors are laid out as y = [a1, a2, b, bdot], each block of length N.
"""

import logging
from dataclasses import dataclass, fields

import numpy as np

from src.basis.galerkin_basis import build_basis, project_field
from src.utils.errors import BlowUpError, ValidationError

logger = logging.getLogger("GalerkinSystem")

LEDGER_RATES = ("dissipation", "work_j", "work_f", "exchange", "j_sq", "f_sq")


@dataclass(frozen=True, eq=False)
class SpectralState:
    t: float
    a1: np.ndarray
    a2: np.ndarray
    b: np.ndarray
    bdot: np.ndarray

    def __post_init__(self):
        blocks = [np.asarray(getattr(self, name), dtype=float) for name in ("a1", "a2", "b", "bdot")]
        N = blocks[0].size
        if any(block.shape != (N,) for block in blocks):
            raise ValidationError("state blocks must be vectors of the same length")
        for name, block in zip(("a1", "a2", "b", "bdot"), blocks):
            object.__setattr__(self, name, block)

    @property
    def N(self):
        return self.a1.size

    def to_vector(self):
        return np.concatenate((self.a1, self.a2, self.b, self.bdot))

    @classmethod
    def from_vector(cls, t, y):
        y = np.asarray(y, dtype=float)
        N = y.size // 4
        return cls(float(t), y[:N].copy(), y[N:2 * N].copy(), y[2 * N:3 * N].copy(), y[3 * N:].copy())

    @classmethod
    def zeros(cls, N, t=0.0):
        return cls.from_vector(t, np.zeros(4 * N))

    def is_finite(self):
        return bool(np.all(np.isfinite(self.to_vector())))


@dataclass(frozen=True, eq=False)
class StateDerivative:
    da1: np.ndarray
    da2: np.ndarray
    db: np.ndarray
    dbdot: np.ndarray

    @classmethod
    def from_vector(cls, dy):
        N = dy.size // 4
        return cls(dy[:N], dy[N:2 * N], dy[2 * N:3 * N], dy[3 * N:])

    def to_vector(self):
        return np.concatenate((self.da1, self.da2, self.db, self.dbdot))


@dataclass(frozen=True)
class EnergyRecord:
    """
    Instantaneous energy terms plus the time integrals accumulated from t=0.

    exchange_cum integrates the nonlinear coupling exchange
    p(h u_t, h_z) + p(|h|^2, u_tz), the part of the power balance the
    two nonlinear pairings leave over. j_sq_cum and f_sq_cum integrate
    p(r j, j) and (f, f).
    """

    t: float
    term_h: float
    term_ut: float
    term_uz: float
    dissipation_cum: float = 0.0
    work_j_cum: float = 0.0
    work_f_cum: float = 0.0
    exchange_cum: float = 0.0
    j_sq_cum: float = 0.0
    f_sq_cum: float = 0.0

    @property
    def total(self):
        return self.term_h + self.term_ut + self.term_uz

    def as_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["total"] = self.total
        return out


class GalerkinSystem:
    """Nodal tables for one (problem, basis, grid) triple and the resulting ODE right-hand side"""

    def __init__(self, spec, basis, grid):
        self.spec = spec
        self.basis = basis
        self.grid = grid
        self.N = basis.N
        self.p = spec.p

        self.Psi, self.dPsi = grid.basis_tables(basis)
        self.w = grid.weights
        self.r = np.asarray(spec.r.evaluate(grid.nodes), dtype=float)
        self.nu2 = np.asarray(spec.nu.evaluate(grid.nodes), dtype=float) ** 2
        self.r_mean = float(grid.integrate(self.r))

        self.j1 = spec.j1.bind(grid.nodes)
        self.j2 = spec.j2.bind(grid.nodes)
        self.f = spec.f.bind(grid.nodes)
        self.rhs_evaluations = 0

        logger.debug(f"GalerkinSystem ready: N={self.N}, nodes={grid.nodes.size}, mean r={self.r_mean:.6g}")

    @property
    def size(self):
        return 4 * self.N

    def initial_vector(self):
        spec, basis, grid = self.spec, self.basis, self.grid
        return np.concatenate([
            project_field(spec.h1, basis, grid),
            project_field(spec.h2, basis, grid),
            project_field(spec.u0, basis, grid),
            project_field(spec.u1, basis, grid),
        ])

    def linear_diagonal(self):
        """Diagonal of the mean-diffusion operator -r_mean omega^2 acting on the h blocks"""
        decay = -self.r_mean * self.basis.omega**2
        zeros = np.zeros(self.N)
        return np.concatenate((decay, decay, zeros, zeros))

    def nodal_fields(self, y):
        N = self.N
        a1, a2, b, bdot = y[:N], y[N:2 * N], y[2 * N:3 * N], y[3 * N:]
        return {
            "h1": a1 @ self.Psi,
            "h2": a2 @ self.Psi,
            "h1z": a1 @ self.dPsi,
            "h2z": a2 @ self.dPsi,
            "u": b @ self.Psi,
            "uz": b @ self.dPsi,
            "ut": bdot @ self.Psi,
            "utz": bdot @ self.dPsi,
        }

    def rhs_vector(self, t, y):
        """dy/dt of the Galerkin system; raises BlowUpError on non-finite values"""
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise BlowUpError(f"non-finite state at t={t:.6g}", last_valid_time=t)
        self.rhs_evaluations += 1
        fld = self.nodal_fields(y)
        w, r = self.w, self.r

        g1 = w * (-r * fld["h1z"] + fld["h1"] * fld["ut"])
        g2 = w * (-r * fld["h2z"] + fld["h2"] * fld["ut"])
        if not self.j1.is_zero:
            g1 = g1 + w * r * self.j1(t)
        if not self.j2.is_zero:
            g2 = g2 + w * r * self.j2(t)

        h_sq = fld["h1"] ** 2 + fld["h2"] ** 2
        gb = w * (-self.nu2 * fld["uz"] + self.p * h_sq)
        dbdot = self.dPsi @ gb
        if not self.f.is_zero:
            dbdot = dbdot + self.Psi @ (w * self.f(t))

        dy = np.concatenate((self.dPsi @ g1, self.dPsi @ g2, y[3 * self.N:], dbdot))
        if not np.all(np.isfinite(dy)):
            raise BlowUpError(f"non-finite right-hand side at t={t:.6g}", last_valid_time=t)
        return dy

    def rates(self, t, y):
        """Integrands of the energy ledger at one state"""
        fld = self.nodal_fields(np.asarray(y, dtype=float))
        r, p = self.r, self.p
        j1, j2, f = self.j1(t), self.j2(t), self.f(t)
        hz_sq = fld["h1z"] ** 2 + fld["h2z"] ** 2
        h_sq = fld["h1"] ** 2 + fld["h2"] ** 2
        h_hz = fld["h1"] * fld["h1z"] + fld["h2"] * fld["h2z"]
        Q = self.grid.integrate
        return {
            "dissipation": p * Q(r * hz_sq),
            "work_j": p * Q(r * (j1 * fld["h1z"] + j2 * fld["h2z"])),
            "work_f": Q(f * fld["ut"]),
            "exchange": p * Q(h_hz * fld["ut"]) + p * Q(h_sq * fld["utz"]),
            "j_sq": p * Q(r * (j1**2 + j2**2)),
            "f_sq": Q(f**2),
        }

    def energy_terms(self, y):
        fld = self.nodal_fields(np.asarray(y, dtype=float))
        Q = self.grid.integrate
        term_h = 0.5 * self.p * Q(fld["h1"] ** 2 + fld["h2"] ** 2)
        term_ut = 0.5 * Q(fld["ut"] ** 2)
        term_uz = 0.5 * Q(self.nu2 * fld["uz"] ** 2)
        return term_h, term_ut, term_uz

    def energy(self, state, cumulative=None):
        term_h, term_ut, term_uz = self.energy_terms(state.to_vector())
        cumulative = cumulative or {}
        return EnergyRecord(
            t=state.t,
            term_h=float(term_h),
            term_ut=float(term_ut),
            term_uz=float(term_uz),
            dissipation_cum=float(cumulative.get("dissipation", 0.0)),
            work_j_cum=float(cumulative.get("work_j", 0.0)),
            work_f_cum=float(cumulative.get("work_f", 0.0)),
            exchange_cum=float(cumulative.get("exchange", 0.0)),
            j_sq_cum=float(cumulative.get("j_sq", 0.0)),
            f_sq_cum=float(cumulative.get("f_sq", 0.0)),
        )

    def power_balance(self, t, y):
        """
        Both sides of the semidiscrete energy law at one state:
            p a.da + bdot.dbdot + (nu^2 u_z, u_zt)
            = -dissipation + work_j + work_f + exchange
        """
        y = np.asarray(y, dtype=float)
        dy = self.rhs_vector(t, y)
        N = self.N
        fld = self.nodal_fields(y)
        lhs = (
            self.p * (y[:N] @ dy[:N] + y[N:2 * N] @ dy[N:2 * N])
            + y[3 * N:] @ dy[3 * N:]
            + self.grid.integrate(self.nu2 * fld["uz"] * fld["utz"])
        )
        rate = self.rates(t, y)
        rhs_value = -rate["dissipation"] + rate["work_j"] + rate["work_f"] + rate["exchange"]
        return float(lhs), float(rhs_value)


def _system(spec, basis, grid):
    return GalerkinSystem(spec, basis, grid)


def init_state(spec, basis, grid):
    """Galerkin projection of the initial data at t=0"""
    return SpectralState.from_vector(0.0, _system(spec, basis, grid).initial_vector())


def rhs(state, spec, basis, grid):
    if state.N != basis.N:
        raise ValidationError(f"state has N={state.N}, basis has N={basis.N}")
    dy = _system(spec, basis, grid).rhs_vector(state.t, state.to_vector())
    return StateDerivative.from_vector(dy)


def energy(state, spec, grid):
    return _system(spec, build_basis(state.N), grid).energy(state)
