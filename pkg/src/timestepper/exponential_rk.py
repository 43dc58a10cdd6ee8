"""
Exponential time-differencing Runge-Kutta of order 3 (Cox-Matthews form).

The system is split as y' = L y + N(t, y) with L diagonal. Each step
integrates L exactly and the quadratic interpolant of N through the stage
values N(t), N(t + h/2), N(t + h) through the phi-functions, so forcing that
varies slowly in time is integrated without exp(hL) weighting. The embedded
second-order solution replaces the endpoint stage N(t + h, b) by
N(t + h, y_new), which is reused as the first stage of the next step.

The local error estimate has two parts: the embedded difference, which sees
the dependence of N on y, and the cubic term of N in time that the quadratic
interpolant misses. The cubic coefficient is the third divided difference
through the previous step start and the three current stage times, weighted
by int_0^1 exp((1 - s) hL) s (s - 1/2) (s - 1) ds, which decays like (hL)^-2
on stiff modes and vanishes as hL -> 0.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.utils.errors import BlowUpError, MaxStepsExceeded

logger = logging.getLogger("ExponentialRK")

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
ERROR_EXPONENT = -0.25
TAYLOR_TERMS = 20
TAYLOR_RADIUS = 0.5


def phi_functions(z, count=3):
    """phi_1 .. phi_count of a real array, phi_k(z) = sum_n z^n / (n+k)!"""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < TAYLOR_RADIUS
    phi = [np.empty_like(z) for _ in range(count)]

    if np.any(small):
        zs = z[small]
        for k in range(1, count + 1):
            acc = np.zeros_like(zs)
            # Horner on sum_n z^n/(n+k)!
            for n in range(TAYLOR_TERMS - 1, -1, -1):
                acc = acc * zs + 1.0 / math.factorial(n + k)
            phi[k - 1][small] = acc

    large = ~small
    if np.any(large):
        zl = z[large]
        phi[0][large] = np.expm1(zl) / zl
        # phi_{k+1} = (phi_k - 1/k!) / z
        for k in range(1, count):
            phi[k][large] = (phi[k - 1][large] - 1.0 / math.factorial(k)) / zl
    return tuple(phi)


def quadratic_weights(N_start, N_mid, N_end):
    """Coefficients d1, d2 of N_start + d1 theta + d2 theta^2 through theta = 0, 1/2, 1"""
    d1 = -3.0 * N_start + 4.0 * N_mid - N_end
    d2 = 2.0 * (N_start - 2.0 * N_mid + N_end)
    return d1, d2


def third_divided_difference(N_prev, h_prev, N_start, N_mid, N_end, h):
    """N[t - h_prev, t, t + h/2, t + h]"""
    d2 = quadratic_weights(N_start, N_mid, N_end)[1]
    backward = ((N_mid - N_start) / (0.5 * h) - (N_start - N_prev) / h_prev) / (0.5 * h + h_prev)
    return (d2 / h**2 - backward) / (h + h_prev)


class ExponentialSegment:
    """
    Dense output over one accepted step [t0, t0 + h]: the exact solution of
    y' = L y + g(t) with g the quadratic stage interpolant. It reproduces the
    step end without correction.
    """

    def __init__(self, t0, h, L, y0, y1, N_start, N_mid, N_end, t1=None):
        self.t0 = t0
        self.t1 = t0 + h if t1 is None else t1
        self.h = h
        self.L = L
        self.y0 = y0
        self.y1 = y1
        self.N_start = N_start
        self.d1, self.d2 = quadratic_weights(N_start, N_mid, N_end)

    def _propagate(self, s):
        zL = s * self.L
        phi1, phi2, phi3 = phi_functions(zL)
        return (
            np.exp(zL) * self.y0
            + s * phi1 * self.N_start
            + (self.d1 / self.h) * s**2 * phi2
            + 2.0 * (self.d2 / self.h**2) * s**3 * phi3
        )

    def __call__(self, t):
        s = t - self.t0
        if s <= 0.0:
            return self.y0.copy()
        if t >= self.t1:
            return self.y1.copy()
        return self._propagate(s)


@dataclass
class StepStats:
    steps: int = 0
    rejected: int = 0
    rhs_evaluations: int = 0

    def as_dict(self):
        return {"steps": self.steps, "rejected": self.rejected, "rhs_evaluations": self.rhs_evaluations}


def error_norm(y, y_new, err, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


class ETDRK3:
    """Adaptive exponential RK3 stepper for y' = F(t, y), with F = L y + N"""

    def __init__(self, fun, L, rtol, atol, dt_init, dt_max, max_steps):
        self.fun = fun
        self.L = np.asarray(L, dtype=float)
        self.rtol = rtol
        self.atol = atol
        self.dt_init = dt_init
        self.dt_max = dt_max
        self.max_steps = max_steps
        self.stats = StepStats()

    def explicit_part(self, t, y):
        self.stats.rhs_evaluations += 1
        return self.fun(t, y) - self.L * y

    def attempt(self, t, y, h, N_start, history=None):
        """
        One trial step; returns (y_new, err_vector, N_mid, N_end, N_new).
        history is (N_prev, h_prev) from the previous accepted step, or None
        on the first step, where the cubic term is not estimated.
        """
        E_half = np.exp(0.5 * h * self.L)
        E_one = np.exp(h * self.L)
        half1 = phi_functions(0.5 * h * self.L, count=1)[0]
        phi1, phi2, phi3, phi4 = phi_functions(h * self.L, count=4)

        a = E_half * y + 0.5 * h * half1 * N_start
        N_mid = self.explicit_part(t + 0.5 * h, a)
        b = E_one * y + h * phi1 * (2.0 * N_mid - N_start)
        N_end = self.explicit_part(t + h, b)

        y_new = E_one * y + h * (
            (phi1 - 3.0 * phi2 + 4.0 * phi3) * N_start
            + 4.0 * (phi2 - 2.0 * phi3) * N_mid
            + (4.0 * phi3 - phi2) * N_end
        )
        N_new = self.explicit_part(t + h, y_new)
        err = np.abs(h * (4.0 * phi3 - phi2) * (N_end - N_new))
        if history is not None:
            cubic = third_divided_difference(*history, N_start, N_mid, N_end, h)
            err = err + np.abs(h**4 * (6.0 * phi4 - 3.0 * phi3 + 0.5 * phi2) * cubic)
        return y_new, err, N_mid, N_end, N_new

    def solve(self, y0, t_end):
        """Integrate from 0 to t_end; returns the list of ExponentialSegment"""
        t = 0.0
        y = np.asarray(y0, dtype=float).copy()
        h = min(self.dt_init, self.dt_max, t_end)
        N_start = self.explicit_part(t, y)
        history = None
        segments = []
        attempts = 0

        while t < t_end:
            if attempts >= self.max_steps:
                raise MaxStepsExceeded(
                    f"step cap of {self.max_steps} reached at t={t:.6g} (T={t_end:.6g})", time_reached=t
                )
            attempts += 1
            last = t + h >= t_end * (1.0 - 1e-14)
            if last:
                h = t_end - t

            try:
                y_new, err_vector, N_mid, N_end, N_new = self.attempt(t, y, h, N_start, history)
                err = error_norm(y, y_new, err_vector, self.rtol, self.atol)
                if not np.isfinite(err):
                    raise BlowUpError(f"non-finite error estimate at t={t:.6g}", last_valid_time=t)
            except BlowUpError:
                self.stats.rejected += 1
                h *= MIN_FACTOR
                if h <= 1e-14 * max(1.0, t):
                    raise BlowUpError(f"solution blew up after t={t:.6g}", last_valid_time=t)
                continue

            if err <= 1.0:
                t_next = t_end if last else t + h
                segments.append(ExponentialSegment(t, h, self.L, y, y_new, N_start, N_mid, N_end, t1=t_next))
                history = (N_start, t_next - t)
                t = t_next
                y = y_new
                N_start = N_new
                self.stats.steps += 1
                factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, SAFETY * err**ERROR_EXPONENT)
                logger.debug(f"accepted t={t:.6g} h={h:.3g} err={err:.3g}")
            else:
                self.stats.rejected += 1
                factor = max(MIN_FACTOR, SAFETY * err**ERROR_EXPONENT)
                logger.debug(f"rejected t={t:.6g} h={h:.3g} err={err:.3g}")
            h = min(self.dt_max, h * max(MIN_FACTOR, min(MAX_FACTOR, factor)))

        return segments
