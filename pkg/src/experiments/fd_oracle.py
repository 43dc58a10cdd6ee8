"""
Independent finite-difference solver used as a cross-check.

Conservative cell-centred scheme on a periodic grid of M cells, with
harmonic-mean coefficients on faces and every breakpoint on a face.
h: Crank-Nicolson diffusion, Adams-Bashforth 2 for transport and the j flux.
u: Crank-Nicolson for the wave pair (u, v = u_t), body force averaged
   over the step.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from src.basis.galerkin_basis import GalerkinBasis, synthesize_at
from src.galerkin.problem_spec import breakpoints
from src.utils.errors import BlowUpError, CFLViolation, GridError, ValidationError

logger = logging.getLogger("FDOracle")

FACE_TOL = 1e-9


@dataclass
class FDSolution:
    z: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    u: np.ndarray
    u_t: np.ndarray
    t: float
    dt: float
    steps: int

    @property
    def M(self):
        return self.z.size


class PeriodicFVOperators:
    """Face gradient, cell divergence and face averaging on a periodic grid"""

    def __init__(self, M):
        self.M = M
        self.dz = 1.0 / M
        eye = sp.identity(M, format="csr")
        # face i sits between cells i-1 and i
        shift_back = sp.csr_matrix((np.ones(M), (np.arange(M), (np.arange(M) - 1) % M)), shape=(M, M))
        shift_fwd = sp.csr_matrix((np.ones(M), (np.arange(M), (np.arange(M) + 1) % M)), shape=(M, M))
        self.grad = (eye - shift_back) / self.dz
        self.div = (shift_fwd - eye) / self.dz
        self.face_avg = 0.5 * (eye + shift_back)

    def diffusion(self, face_coefficient):
        return (self.div @ sp.diags(face_coefficient) @ self.grad).tocsc()


def harmonic_face(cell_values):
    left = np.roll(cell_values, 1)
    return 2.0 * left * cell_values / (left + cell_values)


def _check_alignment(spec, M):
    for b in breakpoints(spec):
        if abs(b * M - round(b * M)) > FACE_TOL:
            raise GridError(f"breakpoint {b} does not fall on a face of the {M}-cell grid")


def fd_oracle(spec, M, dt):
    """Cell values of h1, h2, u, u_t at T"""
    if M < 4:
        raise ValidationError(f"finite-difference grid needs at least 4 cells, got M={M}")
    if dt <= 0:
        raise ValidationError(f"time step must be positive, got dt={dt}")
    _check_alignment(spec, M)

    ops = PeriodicFVOperators(M)
    z = (np.arange(M) + 0.5) * ops.dz
    r = np.asarray(spec.r.evaluate(z), dtype=float)
    nu2 = np.asarray(spec.nu.evaluate(z), dtype=float) ** 2
    D = ops.diffusion(harmonic_face(r))
    W = ops.diffusion(harmonic_face(nu2))

    steps = max(1, math.ceil(spec.T / dt - 1e-12))
    dt = spec.T / steps
    eye = sp.identity(M, format="csc")
    heat_solver = splu((eye - 0.5 * dt * D).tocsc())
    heat_explicit = (eye + 0.5 * dt * D).tocsr()
    wave_solver = splu((eye - 0.25 * dt * dt * W).tocsc())
    W = W.tocsr()

    h = [np.asarray(spec.h1.evaluate(z), dtype=float), np.asarray(spec.h2.evaluate(z), dtype=float)]
    u = np.asarray(spec.u0.evaluate(z), dtype=float)
    v = np.asarray(spec.u1.evaluate(z), dtype=float)
    j_fields = (spec.j1, spec.j2)

    def transport(t, h_l, j_field, v_now):
        """-(h v + r j)_z in conservative form"""
        flux = ops.face_avg @ (h_l * v_now + r * j_field.evaluate(t, z))
        return -(ops.div @ flux)

    def body_force(t, h_now):
        h_sq = h_now[0] ** 2 + h_now[1] ** 2
        return -(ops.div @ (ops.face_avg @ (spec.p * h_sq))) + spec.f.evaluate(t, z)

    logger.info(f"FD oracle: M={M}, dt={dt:.3g}, {steps} steps to T={spec.T}")
    previous = None
    for n in range(steps):
        t = n * dt
        cfl = dt * float(np.max(np.abs(v))) / ops.dz
        if cfl > 1.0:
            raise CFLViolation(f"transport CFL number {cfl:.3g} exceeds 1 at t={t:.4g}", cfl_number=cfl)

        current = [transport(t, h[l], j_fields[l], v) for l in range(2)]
        if previous is None:
            explicit = current
        else:
            explicit = [1.5 * c - 0.5 * prev for c, prev in zip(current, previous)]
        h_new = [heat_solver.solve(heat_explicit @ h[l] + dt * explicit[l]) for l in range(2)]

        force = 0.5 * (body_force(t, h) + body_force(t + dt, h_new))
        rhs = v + dt * (W @ u) + 0.25 * dt * dt * (W @ v) + dt * force
        v_new = wave_solver.solve(rhs)
        u = u + 0.5 * dt * (v + v_new)
        v = v_new
        h = h_new
        previous = current

        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(h[0])) and np.all(np.isfinite(h[1]))):
            raise BlowUpError(f"finite-difference solution blew up at t={t + dt:.4g}", last_valid_time=t)

    return FDSolution(z=z, h1=h[0], h2=h[1], u=u, u_t=v, t=spec.T, dt=dt, steps=steps)


def oracle_discrepancy(traj, fd_solution):
    """Discrete L2 distance between the spectral reconstruction and the oracle cells at T"""
    N = traj.N
    basis = GalerkinBasis(N)
    y = traj.vector_at(fd_solution.t)
    h1, _ = synthesize_at(y[:N], basis, fd_solution.z)
    h2, _ = synthesize_at(y[N:2 * N], basis, fd_solution.z)
    u, _ = synthesize_at(y[2 * N:3 * N], basis, fd_solution.z)
    sq = (h1 - fd_solution.h1) ** 2 + (h2 - fd_solution.h2) ** 2 + (u - fd_solution.u) ** 2
    return float(np.sqrt(np.sum(sq) / fd_solution.M))
