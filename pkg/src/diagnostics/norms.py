"""
Space-time norms of computed trajectories.

The basis is orthonormal, so spatial L2 norms are sums of squared
coefficients and derivative norms carry the factor omega_k^2.
Time integrals use 3-point Gauss-Legendre on each sample interval,
evaluated through dense output.
"""

import logging

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.basis.galerkin_basis import GalerkinBasis, pad_coefficients
from src.utils.errors import ValidationError

logger = logging.getLogger("Norms")

GAUSS_POINTS = 3
SUP_REFINEMENT_ROUNDS = 3


class TrajectoryView:
    """Coefficient history t -> y on a common mode count, with its sample times"""

    def __init__(self, vector_at, times, N):
        self.vector_at = vector_at
        self.times = np.asarray(times, dtype=float)
        self.N = N
        self.omega2 = GalerkinBasis(N).omega ** 2

    @classmethod
    def of(cls, traj, N=None):
        N = N or traj.N
        n0 = traj.N

        def vector_at(t):
            y = traj.vector_at(t)
            return np.concatenate([pad_coefficients(y[i * n0:(i + 1) * n0], N) for i in range(4)])

        return cls(vector_at, traj.times, N)

    def blocks(self, t):
        y = self.vector_at(t)
        N = self.N
        return y[:N], y[N:2 * N], y[2 * N:3 * N], y[3 * N:]

    def h_sq(self, t):
        a1, a2, _, _ = self.blocks(t)
        return float(a1 @ a1 + a2 @ a2)

    def hz_sq(self, t):
        a1, a2, _, _ = self.blocks(t)
        return float(self.omega2 @ (a1**2 + a2**2))

    def w11_integrand(self, t):
        _, _, b, bdot = self.blocks(t)
        return float(b @ b + self.omega2 @ b**2 + bdot @ bdot)


def difference_view(view_a, view_b):
    """Pointwise difference of two views on the merged time grid"""
    if view_a.N != view_b.N:
        raise ValidationError("views must share a mode count; build them with a common N")
    times = np.union1d(view_a.times, view_b.times)
    times = times[(times >= 0.0) & (times <= min(view_a.times[-1], view_b.times[-1]))]
    return TrajectoryView(lambda t: view_a.vector_at(t) - view_b.vector_at(t), times, view_a.N)


def time_integral(fn, times):
    x, w = leggauss(GAUSS_POINTS)
    total = 0.0
    for t0, t1 in zip(times[:-1], times[1:]):
        half = 0.5 * (t1 - t0)
        total += half * sum(wi * fn(t0 + half * (xi + 1.0)) for xi, wi in zip(x, w))
    return total


def sup_over_time(fn, times):
    """Max over samples, refined by bisection around the best sample"""
    values = np.array([fn(t) for t in times])
    k = int(np.argmax(values))
    best_t, best = float(times[k]), float(values[k])
    lo = float(times[max(k - 1, 0)])
    hi = float(times[min(k + 1, times.size - 1)])
    for _ in range(SUP_REFINEMENT_ROUNDS):
        candidates = [(best, best_t)]
        for t in (0.5 * (lo + best_t), 0.5 * (best_t + hi)):
            if lo <= t <= hi:
                candidates.append((fn(t), t))
        best, best_t = max(candidates)
        width = 0.5 * (hi - lo)
        lo = max(lo, best_t - 0.5 * width)
        hi = min(hi, best_t + 0.5 * width)
    return best


def v2_norm(view):
    """sup_t ||h|| + ||h_z|| over space-time"""
    if view.times.size == 0:
        return 0.0
    sup = np.sqrt(max(sup_over_time(view.h_sq, view.times), 0.0))
    grad = np.sqrt(max(time_integral(view.hz_sq, view.times), 0.0))
    return float(sup + grad)


def w11_norm(view):
    """Space-time L2 norm of (u, u_z, u_t)"""
    if view.times.size == 0:
        return 0.0
    return float(np.sqrt(max(time_integral(view.w11_integrand, view.times), 0.0)))


def norm_V2(traj):
    return v2_norm(TrajectoryView.of(traj))


def norm_W11(traj):
    return w11_norm(TrajectoryView.of(traj))


def difference_norms(traj_a, traj_b):
    """(V2, W11) norms of traj_a - traj_b, both co-projected onto the larger basis"""
    N = max(traj_a.N, traj_b.N)
    view = difference_view(TrajectoryView.of(traj_a, N), TrajectoryView.of(traj_b, N))
    return v2_norm(view), w11_norm(view)


def error_norms(traj, exact_vector_at, N_exact):
    """(V2, W11) norms of traj minus an exact coefficient history"""
    N = max(traj.N, N_exact)
    exact = TrajectoryView(lambda t: _pad_state(exact_vector_at(t), N_exact, N), traj.times, N)
    view = difference_view(TrajectoryView.of(traj, N), exact)
    return v2_norm(view), w11_norm(view)


def _pad_state(y, n0, N):
    return np.concatenate([pad_coefficients(y[i * n0:(i + 1) * n0], N) for i in range(4)])


def max_abs_h(traj):
    """Largest |h_l| over samples and quadrature nodes (reported, not certified)"""
    system = traj.system
    peak = 0.0
    for y in traj.states:
        fld = system.nodal_fields(y)
        peak = max(peak, float(np.max(np.abs(fld["h1"]))), float(np.max(np.abs(fld["h2"]))))
    return peak
