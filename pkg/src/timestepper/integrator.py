"""
Time integration of the Galerkin system with dense output and an energy ledger.

Two schemes are available:
    imex   exponential RK3(2), mean diffusion integrated exactly
    radau  fully implicit Radau IIA from scipy
"""

import logging
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss
from scipy.integrate import Radau

from src.galerkin.galerkin_system import LEDGER_RATES, GalerkinSystem, SpectralState
from src.timestepper.exponential_rk import ETDRK3
from src.utils.errors import MaxStepsExceeded, SchemaError, SolverError, ValidationError

logger = logging.getLogger("Integrator")

SCHEMES = ("imex", "radau")
LEDGER_GAUSS_POINTS = 3
TIME_MATCH_TOL = 1e-13


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    dt_init: float = 1e-3
    dt_max: float = 1e-2
    scheme: str = "imex"
    max_steps: int = 100000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "dt_init", "dt_max"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise SchemaError(f"integrator {name} must be positive, got {value!r}")
        if self.dt_init > self.dt_max:
            raise SchemaError(f"dt_init ({self.dt_init}) must not exceed dt_max ({self.dt_max})")
        if self.scheme not in SCHEMES:
            raise SchemaError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if not isinstance(self.max_steps, int) or self.max_steps < 1:
            raise SchemaError(f"max_steps must be a positive integer, got {self.max_steps!r}")

    @classmethod
    def from_document(cls, document):
        document = document or {}
        if not isinstance(document, dict):
            raise SchemaError("integrator config must be an object")
        names = {f.name for f in fields(cls)}
        unknown = set(document) - names
        if unknown:
            raise SchemaError(f"unknown integrator keys: {sorted(unknown)}")
        return cls(**document)

    def to_document(self):
        return asdict(self)


class RadauSegment:
    def __init__(self, t0, t1, y0, y1, interpolant):
        self.t0 = t0
        self.t1 = t1
        self.y0 = y0
        self.y1 = y1
        self.interpolant = interpolant

    def __call__(self, t):
        if t <= self.t0:
            return self.y0.copy()
        if t >= self.t1:
            return self.y1.copy()
        return np.asarray(self.interpolant(t), dtype=float)


class Trajectory:
    """
    Samples at step endpoints and requested output times, the per-step dense
    segments they came from, and the energy ledger (one record per sample).
    """

    def __init__(self, system, times, states, segments, ledger, stats, config):
        self.system = system
        self.times = times
        self.states = states
        self.segments = segments
        self.ledger = ledger
        self.stats = stats
        self.config = config
        self._segment_ends = np.array([seg.t1 for seg in segments])

    @property
    def N(self):
        return self.system.N

    @property
    def T(self):
        return float(self.times[-1])

    @property
    def spec(self):
        return self.system.spec

    @property
    def samples(self):
        return [SpectralState.from_vector(t, y) for t, y in zip(self.times, self.states)]

    def vector_at(self, t):
        t = float(t)
        if t < 0.0 or t > self.T * (1.0 + TIME_MATCH_TOL) + TIME_MATCH_TOL:
            raise ValidationError(f"t={t} outside the trajectory horizon [0, {self.T}]")
        k = int(np.searchsorted(self.times, t))
        if k < self.times.size and abs(self.times[k] - t) <= TIME_MATCH_TOL * max(1.0, abs(t)):
            return self.states[k].copy()
        if k > 0 and abs(self.times[k - 1] - t) <= TIME_MATCH_TOL * max(1.0, abs(t)):
            return self.states[k - 1].copy()
        idx = min(int(np.searchsorted(self._segment_ends, t)), len(self.segments) - 1)
        return self.segments[idx](t)

    def ledger_frame(self):
        return pd.DataFrame([record.as_dict() for record in self.ledger])

    def state_frame(self):
        N = self.N
        columns = ["t"] + [f"{block}[{k}]" for block in ("a1", "a2", "b", "bdot") for k in range(N)]
        data = np.column_stack((self.times, self.states))
        return pd.DataFrame(data, columns=columns)


def _run_imex(system, config, y0, T):
    stepper = ETDRK3(
        system.rhs_vector,
        system.linear_diagonal(),
        rtol=config.rel_tol,
        atol=config.abs_tol,
        dt_init=config.dt_init,
        dt_max=config.dt_max,
        max_steps=config.max_steps,
    )
    segments = stepper.solve(y0, T)
    return segments, stepper.stats.as_dict()


def _run_radau(system, config, y0, T):
    solver = Radau(
        system.rhs_vector,
        0.0,
        y0,
        T,
        rtol=config.rel_tol,
        atol=config.abs_tol,
        first_step=min(config.dt_init, T),
        max_step=config.dt_max,
    )
    segments = []
    while solver.status == "running":
        if len(segments) >= config.max_steps:
            raise MaxStepsExceeded(
                f"step cap of {config.max_steps} reached at t={solver.t:.6g} (T={T:.6g})", time_reached=solver.t
            )
        t0, y_start = solver.t, solver.y.copy()
        message = solver.step()
        if solver.status == "failed":
            raise SolverError(f"Radau integration failed at t={t0:.6g}: {message}")
        segments.append(RadauSegment(t0, solver.t, y_start, solver.y.copy(), solver.dense_output()))
    # rejections happen inside Radau.step and are not exposed
    stats = {"steps": len(segments), "rhs_evaluations": int(solver.nfev), "jacobians": int(solver.njev),
             "lu_decompositions": int(solver.nlu)}
    return segments, stats


def _sample_grid(segments, output_times, T):
    times = [0.0] + [seg.t1 for seg in segments]
    times.extend(float(t) for t in output_times)
    times = np.unique(np.asarray(times))
    keep = [0]
    for i in range(1, times.size):
        if times[i] - times[keep[-1]] > TIME_MATCH_TOL * max(1.0, times[i]):
            keep.append(i)
    times = times[keep]
    times[-1] = T
    return times


def _accumulate_ledger(system, times, evaluate):
    """Per-interval 3-point Gauss-Legendre integrals of the ledger rates"""
    x, w = leggauss(LEDGER_GAUSS_POINTS)
    cumulative = {name: 0.0 for name in LEDGER_RATES}
    totals = [dict(cumulative)]
    for t0, t1 in zip(times[:-1], times[1:]):
        half = 0.5 * (t1 - t0)
        for xi, wi in zip(x, w):
            tau = t0 + half * (xi + 1.0)
            rate = system.rates(tau, evaluate(tau, t0, t1))
            for name in LEDGER_RATES:
                cumulative[name] += half * wi * rate[name]
        totals.append(dict(cumulative))
    return totals


def integrate(spec, config, basis, grid, output_times=()):
    """Solve the Galerkin system on [0, T] and attach the energy ledger"""
    T = spec.T
    for t in output_times:
        if not (0.0 <= float(t) <= T):
            raise ValidationError(f"output time {t} outside [0, {T}]")

    system = GalerkinSystem(spec, basis, grid)
    y0 = system.initial_vector()
    logger.info(f"Integrating N={basis.N} to T={T} with scheme={config.scheme}, rtol={config.rel_tol}")

    if config.scheme == "imex":
        segments, stats = _run_imex(system, config, y0, T)
    else:
        segments, stats = _run_radau(system, config, y0, T)

    ends = np.array([seg.t1 for seg in segments])

    def segment_for(t):
        return segments[min(int(np.searchsorted(ends, t)), len(segments) - 1)]

    times = _sample_grid(segments, output_times, T)
    states = np.empty((times.size, y0.size))
    states[0] = y0
    for i, t in enumerate(times[1:], start=1):
        seg = segment_for(t)
        states[i] = seg.y1 if abs(seg.t1 - t) <= TIME_MATCH_TOL * max(1.0, t) else seg(t)

    def evaluate(tau, t0, t1):
        return segment_for(0.5 * (t0 + t1))(tau)

    totals = _accumulate_ledger(system, times, evaluate)
    ledger = [system.energy(SpectralState.from_vector(t, y), cum) for t, y, cum in zip(times, states, totals)]

    stats["samples"] = int(times.size)
    logger.info(
        f"Integration finished: {stats['steps']} steps, {stats.get('rejected', 'n/a')} rejected, "
        f"{stats['rhs_evaluations']} rhs evaluations"
    )
    return Trajectory(system, times, states, segments, ledger, stats, config)


def dense_eval(traj, t):
    """State at t from the scheme's dense output; exact at sample times"""
    return SpectralState.from_vector(float(t), traj.vector_at(t))
