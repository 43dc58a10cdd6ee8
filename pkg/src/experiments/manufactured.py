"""
Manufactured solutions: closed-form space-time fields, the forcing that makes
them exact solutions, and the runs that measure the solver against them.

Exact fields are finite sums of TimeProfile(t) x TrigSeries(z) terms, so all
derivatives and the periodic antiderivative of h_t are available in closed form.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.basis.galerkin_basis import SQRT2, build_basis, build_grid, default_panels
from src.coefficients.coefficient_field import PiecewiseCoefficient, TrigSeries
from src.coefficients.forcing import TimeProfile
from src.diagnostics.norms import error_norms
from src.galerkin.problem_spec import ProblemSpec
from src.timestepper.integrator import integrate
from src.utils.errors import ValidationError

logger = logging.getLogger("Manufactured")

MEAN_CHECK_SAMPLES = 11
MEAN_CHECK_TOL = 1e-13


@dataclass(frozen=True)
class SeparableField:
    """sum_i profile_i(t) * series_i(z)"""

    terms: tuple = ()

    @classmethod
    def zero(cls):
        return cls(())

    @property
    def max_frequency(self):
        return max((series.max_frequency for _, series in self.terms), default=0)

    def time_weights(self, t, order=0):
        return np.array([profile.evaluate(t, order) for profile, _ in self.terms])

    def value(self, t, z, t_order=0, z_order=0):
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape)
        for profile, series in self.terms:
            s = series
            for _ in range(z_order):
                s = s.derivative()
            out = out + profile.evaluate(t, t_order) * s.evaluate(z)
        return out

    def spatial(self, t, t_order=0):
        """The field (or a time derivative of it) frozen at time t, as a TrigSeries"""
        series = TrigSeries()
        for profile, part in self.terms:
            series = series + part.scaled(profile.evaluate(t, t_order))
        return series

    def mean_rate(self, t):
        return sum(profile.evaluate(t, 1) * series.mean for profile, series in self.terms)

    def coefficients(self, t, N, t_order=0):
        """Closed-form Galerkin coefficients on the first N modes"""
        series = self.spatial(t, t_order)
        out = np.zeros(N)
        out[0] = series.mean
        for k, c in enumerate(series.cos, start=1):
            if 2 * k - 1 < N:
                out[2 * k - 1] = c / SQRT2
        for k, s in enumerate(series.sin, start=1):
            if 2 * k < N:
                out[2 * k] = s / SQRT2
        return out


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact fields plus the coefficient setting they are manufactured for"""

    name: str
    exact_h1: SeparableField = field(default_factory=SeparableField.zero)
    exact_h2: SeparableField = field(default_factory=SeparableField.zero)
    exact_u: SeparableField = field(default_factory=SeparableField.zero)
    p: float = 1.0
    r: object = field(default_factory=lambda: PiecewiseCoefficient.constant(1.0))
    nu: object = field(default_factory=lambda: PiecewiseCoefficient.constant(1.0))
    T: float = 0.5

    @property
    def modes_needed(self):
        K = max(f.max_frequency for f in (self.exact_h1, self.exact_h2, self.exact_u))
        return 2 * K + 1

    def exact_vector(self, t, N=None):
        N = N or self.modes_needed
        return np.concatenate([
            self.exact_h1.coefficients(t, N),
            self.exact_h2.coefficients(t, N),
            self.exact_u.coefficients(t, N),
            self.exact_u.coefficients(t, N, t_order=1),
        ])


def _stack(rows, z):
    if not rows:
        return np.zeros((0, np.size(z)))
    return np.array([np.broadcast_to(row, np.shape(z)) for row in rows], dtype=float).reshape(len(rows), -1)


class _NodalTable:
    """Spatial factors of one separable field tabulated on fixed points"""

    def __init__(self, fld, z):
        series = [s for _, s in fld.terms]
        self.field = fld
        self.S = _stack([s.evaluate(z) for s in series], z)
        self.Sz = _stack([s.derivative().evaluate(z) for s in series], z)
        self.Szz = _stack([s.derivative().derivative().evaluate(z) for s in series], z)
        # zero-mean antiderivative of each factor with its mean removed
        self.A = _stack([TrigSeries(0.0, s.cos, s.sin).antiderivative().evaluate(z) for s in series], z)

    def at(self, t, table, order=0):
        if not self.field.terms:
            return np.zeros(self.S.shape[1])
        return self.field.time_weights(t, order) @ table


class ManufacturedForcing:
    """
    Non-separable forcing derived from a manufactured case.

    component 'j1' / 'j2':  j_l = h_lz - (h_l u_t + W_l) / r, with W_l the
                            zero-mean periodic antiderivative of h_lt
    component 'f':          f = u_tt - (nu^2)_z u_z - nu^2 u_zz + 2 p h . h_z
    """

    def __init__(self, case, component, p, r, nu):
        if component not in ("j1", "j2", "f"):
            raise ValidationError(f"unknown forcing component {component!r}")
        self.case = case
        self.component = component
        self.p = p
        self.r = r
        self.nu = nu

    @property
    def breakpoints(self):
        return ()

    @property
    def is_zero(self):
        return False

    def bind(self, nodes):
        return _BoundManufactured(self, nodes)

    def evaluate(self, t, z):
        return _BoundManufactured(self, np.atleast_1d(np.asarray(z, dtype=float)))(t).reshape(np.shape(z))

    __call__ = evaluate

    def to_document(self):
        return {"manufactured": self.case.name, "component": self.component}


class _BoundManufactured:
    def __init__(self, forcing, nodes):
        self.forcing = forcing
        self.is_zero = False
        case = forcing.case
        nodes = np.asarray(nodes, dtype=float)
        self.h1 = _NodalTable(case.exact_h1, nodes)
        self.h2 = _NodalTable(case.exact_h2, nodes)
        self.u = _NodalTable(case.exact_u, nodes)
        self.r = np.asarray(forcing.r.evaluate(nodes), dtype=float)
        nu = np.asarray(forcing.nu.evaluate(nodes), dtype=float)
        self.nu2 = nu**2
        self.nu2_z = 2.0 * nu * np.asarray(forcing.nu.derivative().evaluate(nodes), dtype=float)

    def __call__(self, t):
        component = self.forcing.component
        u_t = self.u.at(t, self.u.S, order=1)
        if component in ("j1", "j2"):
            h = self.h1 if component == "j1" else self.h2
            h_val = h.at(t, h.S)
            h_z = h.at(t, h.Sz)
            W = h.at(t, h.A, order=1)
            return h_z - (h_val * u_t + W) / self.r

        p = self.forcing.p
        u_tt = self.u.at(t, self.u.S, order=2)
        u_z = self.u.at(t, self.u.Sz)
        u_zz = self.u.at(t, self.u.Szz)
        h_hz = (
            self.h1.at(t, self.h1.S) * self.h1.at(t, self.h1.Sz)
            + self.h2.at(t, self.h2.S) * self.h2.at(t, self.h2.Sz)
        )
        return u_tt - self.nu2_z * u_z - self.nu2 * u_zz + 2.0 * p * h_hz


@dataclass
class DerivedForcing:
    j1: ManufacturedForcing
    j2: ManufacturedForcing
    f: ManufacturedForcing

    def table(self, times, z):
        """Space-time tabulation of the derived forcing"""
        rows = []
        z = np.asarray(z, dtype=float)
        for t in times:
            j1, j2, f = self.j1.evaluate(t, z), self.j2.evaluate(t, z), self.f.evaluate(t, z)
            rows.append(pd.DataFrame({"t": float(t), "z": z, "j1": j1, "j2": j2, "f": f}))
        return pd.concat(rows, ignore_index=True)


def check_mean_constancy(case, T=None):
    T = case.T if T is None else T
    for name, fld in (("h1", case.exact_h1), ("h2", case.exact_h2)):
        for t in np.linspace(0.0, T, MEAN_CHECK_SAMPLES):
            rate = fld.mean_rate(t)
            if abs(rate) > MEAN_CHECK_TOL:
                raise ValidationError(
                    f"manufactured {name} has a time-varying spatial mean (d/dt mean = {rate:.3g} at t={t:.3g}); "
                    "the periodic antiderivative of h_t does not exist"
                )


def derive_forcing(case, p=None, r=None, nu=None):
    """Forcing (j1, j2, f) for which the case's exact fields solve the system"""
    p = case.p if p is None else p
    r = case.r if r is None else r
    nu = case.nu if nu is None else nu
    if r.breakpoints or nu.breakpoints:
        raise ValidationError("manufactured cases need smooth coefficients without breakpoints")
    check_mean_constancy(case)
    return DerivedForcing(
        j1=ManufacturedForcing(case, "j1", p, r, nu),
        j2=ManufacturedForcing(case, "j2", p, r, nu),
        f=ManufacturedForcing(case, "f", p, r, nu),
    )


def manufactured_problem(case, T=None):
    forcing = derive_forcing(case)
    return ProblemSpec(
        p=case.p,
        r=case.r,
        nu=case.nu,
        T=case.T if T is None else T,
        j1=forcing.j1,
        j2=forcing.j2,
        f=forcing.f,
        h1=case.exact_h1.spatial(0.0),
        h2=case.exact_h2.spatial(0.0),
        u0=case.exact_u.spatial(0.0),
        u1=case.exact_u.spatial(0.0, t_order=1),
    )


def _fft_derivative(values):
    M = values.size
    k = np.fft.fftfreq(M, d=1.0 / M)
    return np.real(np.fft.ifft(2j * np.pi * k * np.fft.fft(values)))


def forcing_self_check(case, M=256, times=None):
    """
    Largest nodal residual of both equations with the derived forcing,
    z-derivatives taken by FFT on a uniform grid.
    """
    forcing = derive_forcing(case)
    z = np.arange(M) / M
    times = np.linspace(0.0, case.T, 5) if times is None else times
    r = np.asarray(case.r.evaluate(z), dtype=float)
    nu2 = np.asarray(case.nu.evaluate(z), dtype=float) ** 2
    worst = 0.0
    for t in times:
        h = [case.exact_h1.value(t, z), case.exact_h2.value(t, z)]
        h_t = [case.exact_h1.value(t, z, t_order=1), case.exact_h2.value(t, z, t_order=1)]
        u = case.exact_u.value(t, z)
        u_t = case.exact_u.value(t, z, t_order=1)
        u_tt = case.exact_u.value(t, z, t_order=2)
        j = [forcing.j1.evaluate(t, z), forcing.j2.evaluate(t, z)]
        f = forcing.f.evaluate(t, z)
        for hl, hlt, jl in zip(h, h_t, j):
            flux = r * _fft_derivative(hl) - hl * u_t - r * jl
            worst = max(worst, float(np.max(np.abs(hlt - _fft_derivative(flux)))))
        stress = nu2 * _fft_derivative(u) - case.p * (h[0] ** 2 + h[1] ** 2)
        worst = max(worst, float(np.max(np.abs(u_tt - _fft_derivative(stress) - f))))
    return worst


def manufactured_run(case, N, config, panels_per_piece=None, q=12):
    """Solve with the derived forcing and report errors against the exact fields"""
    spec = manufactured_problem(case)
    basis = build_basis(N)
    grid = build_grid((), panels_per_piece or default_panels(N), q)
    traj = integrate(spec, config, basis, grid)

    N_exact = max(N, case.modes_needed)
    final = _pad_blocks(traj.states[-1], N, N_exact)
    exact = case.exact_vector(traj.T, N_exact)
    diff = final - exact
    l2_error = float(np.sqrt(diff[: 3 * N_exact] @ diff[: 3 * N_exact]))
    v2_error, w11_error = error_norms(traj, lambda t: case.exact_vector(t, N_exact), N_exact)

    logger.info(f"Manufactured case {case.name} at N={N}: L2 error at T = {l2_error:.3e}")
    return {
        "case": case.name,
        "N": N,
        "l2_error": l2_error,
        "V2_error": v2_error,
        "W11_error": w11_error,
        "steps": traj.stats["steps"],
        "trajectory": traj,
    }


def _pad_blocks(y, n0, N):
    return np.concatenate([np.pad(y[i * n0:(i + 1) * n0], (0, N - n0)) for i in range(4)])


def standard_cases():
    """Three smooth cases: single harmonic, coupled two-harmonic, broadband"""
    decay = TimeProfile("exp", (1.0, -1.0))
    heat_like = ManufacturedCase(
        name="heat_like",
        exact_h1=SeparableField(((decay, TrigSeries.mode("cos", 1)),)),
        p=1.0,
        T=0.5,
    )

    coupled = ManufacturedCase(
        name="coupled",
        exact_h1=SeparableField((
            (TimeProfile("exp", (1.0, -0.5)), TrigSeries.mode("cos", 1)),
            (TimeProfile.constant(1.0), TrigSeries(mean=0.3)),
        )),
        exact_h2=SeparableField(((TimeProfile("trig", (0.5, 3.0)), TrigSeries.mode("sin", 2)),)),
        exact_u=SeparableField((
            (TimeProfile("poly", (0.2, 0.0, 0.2)), TrigSeries.mode("sin", 1)),
            (TimeProfile("trig", (0.1, 2.0)), TrigSeries.mode("cos", 2)),
        )),
        p=0.5,
        r=PiecewiseCoefficient.constant(0.5),
        nu=TrigSeries(mean=1.0, cos=(0.2,)),
        T=0.5,
    )

    rho = 0.5
    K = 24
    spectrum = TrigSeries(0.0, tuple(rho**k for k in range(1, K + 1)), ())
    broadband = ManufacturedCase(
        name="broadband",
        exact_h1=SeparableField(((decay, spectrum),)),
        exact_u=SeparableField((
            (TimeProfile("trig", (0.1, 1.0)), TrigSeries(0.0, (), tuple(rho**k for k in range(1, K + 1)))),
        )),
        p=1.0,
        T=0.5,
    )
    return {case.name: case for case in (heat_like, coupled, broadband)}


def zero_case(T=0.5):
    return ManufacturedCase(name="zero", T=T)

