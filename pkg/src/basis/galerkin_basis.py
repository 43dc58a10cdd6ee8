"""
Trigonometric fundamental system on the unit torus and the breakpoint-aligned
composite Gauss-Legendre rule used for every inner product.

Mode order (0-based index i):
    i = 0          psi = 1
    i = 2j - 1     psi = sqrt(2) cos(2 pi j z)
    i = 2j         psi = sqrt(2) sin(2 pi j z)
"""

import logging
import threading
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.utils.errors import GridError, ValidationError

logger = logging.getLogger("GalerkinBasis")

TWO_PI = 2.0 * np.pi
SQRT2 = np.sqrt(2.0)
DEFAULT_Q = 12
BREAKPOINT_MERGE_TOL = 1e-14


@dataclass(frozen=True)
class GalerkinBasis:
    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValidationError(f"basis needs at least one mode, got N={self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def mode_table(self):
        """(frequency, kind) per mode; kind is 'const', 'cos' or 'sin'"""
        table = []
        for i in range(self.N):
            if i == 0:
                table.append((0, "const"))
            else:
                table.append(((i + 1) // 2, "cos" if i % 2 == 1 else "sin"))
        return table

    @property
    def frequencies(self):
        """Integer frequency of each mode"""
        return (np.arange(self.N) + 1) // 2

    @property
    def omega(self):
        """Angular wave number 2 pi j of each mode"""
        return TWO_PI * self.frequencies

    @property
    def cos_mask(self):
        i = np.arange(self.N)
        return (i % 2 == 1)

    @property
    def sin_mask(self):
        i = np.arange(self.N)
        return (i % 2 == 0) & (i > 0)

    def evaluate(self, z):
        """Values and derivatives of every mode at z; both shaped (N, len(z))"""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        w = self.omega[:, None]
        phase = w * z[None, :]
        cos_mask = self.cos_mask[:, None]
        sin_mask = self.sin_mask[:, None]

        values = np.where(cos_mask, SQRT2 * np.cos(phase), np.where(sin_mask, SQRT2 * np.sin(phase), 1.0))
        derivs = np.where(cos_mask, -SQRT2 * w * np.sin(phase), np.where(sin_mask, SQRT2 * w * np.cos(phase), 0.0))
        return values, derivs


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    panels: np.ndarray   # panel edges, shape (n_panels + 1,), from 0 to 1
    nodes: np.ndarray
    weights: np.ndarray
    q: int
    breakpoints: tuple = ()
    _tables: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: object = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def n_panels(self):
        return self.panels.size - 1

    def integrate(self, values):
        """Quadrature of nodal values over the torus (last axis = nodes)"""
        return np.asarray(values) @ self.weights

    def basis_tables(self, basis):
        """Cached (Psi, dPsi) tables at the grid nodes, shape (N, n_nodes)"""
        with self._lock:
            tables = self._tables.get(basis.N)
            if tables is None:
                values, derivs = basis.evaluate(self.nodes)
                values.setflags(write=False)
                derivs.setflags(write=False)
                tables = (values, derivs)
                self._tables[basis.N] = tables
        return tables


def default_panels(N):
    return max(8, 2 * int(N))


def merge_close(breakpoints, tol=BREAKPOINT_MERGE_TOL):
    merged = []
    for b in breakpoints:
        if merged and abs(b - merged[-1]) <= tol:
            continue
        merged.append(b)
    return merged


def build_basis(N):
    return GalerkinBasis(N)


def build_grid(breakpoints=(), panels_per_piece=8, q=DEFAULT_Q):
    """
    Composite Gauss-Legendre rule with panel edges at every breakpoint.
    Each smooth piece [z_k, z_{k+1}) is split into panels_per_piece equal panels
    carrying q nodes each.
    """
    bps = [float(b) for b in breakpoints]
    if any(b2 < b1 for b1, b2 in zip(bps, bps[1:])):
        raise GridError(f"breakpoints must be sorted, got {bps}")
    if any(not (0.0 < b < 1.0) for b in bps):
        raise GridError(f"breakpoints must lie in (0,1), got {bps}")
    if int(panels_per_piece) < 1:
        raise GridError(f"panels_per_piece must be at least 1, got {panels_per_piece}")
    if int(q) < 2:
        raise GridError(f"Gauss order must be at least 2, got {q}")
    bps = merge_close(bps)

    edges = np.concatenate(([0.0], bps, [1.0]))
    panel_edges = [0.0]
    for a, b in zip(edges[:-1], edges[1:]):
        sub = np.linspace(a, b, int(panels_per_piece) + 1)
        panel_edges.extend(sub[1:-1])
        panel_edges.append(b)
    # keep the breakpoints bit-exact as panel edges
    panel_edges = np.asarray(panel_edges)

    x, w = leggauss(int(q))
    left = panel_edges[:-1, None]
    half = 0.5 * np.diff(panel_edges)[:, None]
    nodes = (left + half * (x[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()

    grid = QuadratureGrid(panels=panel_edges, nodes=nodes, weights=weights, q=int(q), breakpoints=tuple(bps))
    logger.debug(f"Built grid with {grid.n_panels} panels, q={q}, {nodes.size} nodes")
    return grid


def _check_length(coeffs, basis):
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != basis.N:
        raise ValidationError(f"coefficient vector has length {coeffs.shape[-1]}, basis has N={basis.N}")
    return coeffs


def synthesize(coeffs, basis, grid):
    """Pointwise expansion and its z-derivative at every quadrature node"""
    coeffs = _check_length(coeffs, basis)
    Psi, dPsi = grid.basis_tables(basis)
    return coeffs @ Psi, coeffs @ dPsi


def synthesize_at(coeffs, basis, z):
    """Expansion and z-derivative at arbitrary points"""
    coeffs = _check_length(coeffs, basis)
    values, derivs = basis.evaluate(z)
    return coeffs @ values, coeffs @ derivs


def project(nodal_values, basis, grid):
    """L2 coefficients c_k = (v, psi_k) by grid quadrature"""
    nodal_values = np.asarray(nodal_values, dtype=float)
    if nodal_values.shape[-1] != grid.nodes.size:
        raise ValidationError(
            f"nodal values have {nodal_values.shape[-1]} entries, grid has {grid.nodes.size} nodes"
        )
    Psi, _ = grid.basis_tables(basis)
    return Psi @ (grid.weights * nodal_values)


def project_field(field, basis, grid):
    return project(field.evaluate(grid.nodes), basis, grid)


def pad_coefficients(coeffs, N):
    """Zero-pad a coefficient array (last axis) to N modes"""
    coeffs = np.asarray(coeffs, dtype=float)
    missing = N - coeffs.shape[-1]
    if missing < 0:
        raise ValidationError(f"cannot pad {coeffs.shape[-1]} modes down to {N}")
    if missing == 0:
        return coeffs
    pad = [(0, 0)] * (coeffs.ndim - 1) + [(0, missing)]
    return np.pad(coeffs, pad)
