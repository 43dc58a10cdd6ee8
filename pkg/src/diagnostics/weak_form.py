"""
Defects of the weak integral identities for test functions alpha(t) psi_k(z).

With alpha(T) = 0 the identities read

    -int alpha' (h_l, psi) + int alpha (r h_lz - h_l u_t - r j_l, psi_z) - alpha(0) (h0_l, psi) = 0
    -int alpha' (u_t, psi) + int alpha [(nu^2 u_z - p|h|^2, psi_z) - (f, psi)] - alpha(0) (u1, psi) = 0

Time integrals are per-interval Gauss rules over dense output; the initial
pairings use the exact initial data on the grid.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.polynomial.legendre import leggauss

from src.galerkin.galerkin_system import GalerkinSystem
from src.utils.errors import ValidationError

logger = logging.getLogger("WeakForm")

MAX_TEST_MODE = 16
GAUSS_POINTS = 4
EQUATIONS = ("h1", "h2", "u")


@dataclass(frozen=True)
class WeakFormTest:
    """alpha(t) psi_k(z), alpha given by polynomial coefficients in t"""

    alpha: tuple
    k: int


def default_test_spec(T, N):
    alphas = [(T, -1.0), (T * T, -2.0 * T, 1.0)]
    return [WeakFormTest(alpha, k) for alpha in alphas for k in range(min(N, MAX_TEST_MODE))]


def _check_tests(tests, T, N):
    for test in tests:
        alpha_T = P.polyval(T, test.alpha)
        scale = max(1.0, float(np.max(np.abs(test.alpha))))
        if abs(alpha_T) > 1e-12 * scale:
            raise ValidationError(f"test function alpha must vanish at T={T}, got alpha(T)={alpha_T:.3g}")
        if not (0 <= test.k < N):
            raise ValidationError(f"test mode {test.k} outside the basis of size {N}")


def _pairings(system, tau, y):
    """(value, flux) mode vectors of each equation at one time"""
    N = system.N
    fld = system.nodal_fields(y)
    w, r, dPsi = system.w, system.r, system.dPsi
    h_sq = fld["h1"] ** 2 + fld["h2"] ** 2
    return {
        "h1": (y[:N], dPsi @ (w * (r * fld["h1z"] - fld["h1"] * fld["ut"] - r * system.j1(tau)))),
        "h2": (y[N:2 * N], dPsi @ (w * (r * fld["h2z"] - fld["h2"] * fld["ut"] - r * system.j2(tau)))),
        "u": (
            y[3 * N:],
            dPsi @ (w * (system.nu2 * fld["uz"] - system.p * h_sq)) - system.Psi @ (w * system.f(tau)),
        ),
    }


def _time_moments(traj, system, degree):
    """int t^i value dt and int t^i flux dt, i < degree, for every equation"""
    N = system.N
    x, gw = leggauss(GAUSS_POINTS)
    values = {name: np.zeros((degree, N)) for name in EQUATIONS}
    fluxes = {name: np.zeros((degree, N)) for name in EQUATIONS}
    for t0, t1 in zip(traj.times[:-1], traj.times[1:]):
        half = 0.5 * (t1 - t0)
        for xi, wi in zip(x, gw):
            tau = t0 + half * (xi + 1.0)
            y = _on_basis(traj.vector_at(tau), traj.N, N)
            powers = half * wi * tau ** np.arange(degree)
            for name, (value, flux) in _pairings(system, tau, y).items():
                values[name] += np.outer(powers, value)
                fluxes[name] += np.outer(powers, flux)
    return values, fluxes


def weak_residual(traj, spec, basis, grid, test_spec=None):
    """Largest absolute defect over the test family: (res_h1, res_h2, res_u)"""
    T = traj.T
    N = basis.N
    tests = list(test_spec) if test_spec is not None else default_test_spec(T, N)
    _check_tests(tests, T, N)
    if not tests:
        return 0.0, 0.0, 0.0

    system = GalerkinSystem(spec, basis, grid)
    initial = {
        "h1": system.Psi @ (system.w * spec.h1.evaluate(grid.nodes)),
        "h2": system.Psi @ (system.w * spec.h2.evaluate(grid.nodes)),
        "u": system.Psi @ (system.w * spec.u1.evaluate(grid.nodes)),
    }
    u0 = system.Psi @ (system.w * spec.u0.evaluate(grid.nodes))

    degree = max(len(test.alpha) for test in tests)
    values, fluxes = _time_moments(traj, system, degree)

    residual = dict.fromkeys(EQUATIONS, 0.0)
    for test in tests:
        alpha = np.zeros(degree)
        alpha[: len(test.alpha)] = test.alpha
        dalpha = np.zeros(degree)
        deriv = P.polyder(alpha)
        dalpha[: deriv.size] = deriv
        for name in EQUATIONS:
            defect = (
                -dalpha @ values[name][:, test.k]
                + alpha @ fluxes[name][:, test.k]
                - alpha[0] * initial[name][test.k]
            )
            residual[name] = max(residual[name], abs(float(defect)))

    modes = sorted({test.k for test in tests})
    b0 = _on_basis(traj.states[0], traj.N, N)[2 * N:3 * N]
    residual["u"] = max(residual["u"], float(np.max(np.abs(b0[modes] - u0[modes]))))
    logger.debug(f"Weak residuals: {residual}")
    return residual["h1"], residual["h2"], residual["u"]


def _on_basis(y, n0, N):
    """Truncate or zero-pad a state vector from n0 to N modes per block"""
    if n0 == N:
        return y
    blocks = [y[i * n0:(i + 1) * n0] for i in range(4)]
    if n0 > N:
        return np.concatenate([b[:N] for b in blocks])
    return np.concatenate([np.pad(b, (0, N - n0)) for b in blocks])
