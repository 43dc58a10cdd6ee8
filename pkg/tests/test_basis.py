import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.basis.galerkin_basis import (
    GalerkinBasis,
    build_basis,
    build_grid,
    default_panels,
    pad_coefficients,
    project,
    project_field,
    synthesize,
    synthesize_at,
)
from src.coefficients.coefficient_field import PiecewiseCoefficient, TrigSeries
from src.utils.errors import GridError, ValidationError


def test_mode_table_order():
    assert build_basis(5).mode_table == [(0, "const"), (1, "cos"), (1, "sin"), (2, "cos"), (2, "sin")]
    assert list(GalerkinBasis(4).frequencies) == [0, 1, 1, 2]


def test_basis_rejects_empty():
    with pytest.raises(ValidationError):
        GalerkinBasis(0)


@pytest.mark.parametrize("N", [1, 6, 17, 64])
def test_gram_matrices(N):
    basis = build_basis(N)
    grid = build_grid((0.3, 0.7), default_panels(N))
    Psi, dPsi = grid.basis_tables(basis)
    gram = Psi @ (grid.weights[:, None] * Psi.T)
    stiffness = dPsi @ (grid.weights[:, None] * dPsi.T)
    assert np.allclose(gram, np.eye(N), atol=1e-12)
    assert np.allclose(stiffness, np.diag(basis.omega**2), atol=1e-9 * max(1.0, basis.omega.max() ** 2))


def test_basis_is_periodic_at_endpoints():
    values, derivs = build_basis(64).evaluate(np.array([0.0, 1.0]))
    assert np.allclose(values[:, 0], values[:, 1], atol=1e-12)
    assert np.allclose(derivs[:, 0], derivs[:, 1], atol=1e-12 * 2 * np.pi * 32)


def test_grid_places_breakpoints_on_panel_edges():
    grid = build_grid((0.3, 0.7), panels_per_piece=4, q=6)
    assert 0.3 in grid.panels
    assert 0.7 in grid.panels
    assert grid.n_panels == 12
    assert grid.nodes.size == 72
    assert grid.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all((grid.nodes > 0.0) & (grid.nodes < 1.0))


def test_grid_integrates_piecewise_polynomials_exactly():
    c = PiecewiseCoefficient(breakpoints=(0.3,), pieces=([1.0], [0.0, 0.0, 1.0]))
    grid = build_grid(c.breakpoints, panels_per_piece=1, q=2)
    assert grid.integrate(c(grid.nodes)) == pytest.approx(0.3 + 0.7**3 / 3.0, abs=1e-15)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"breakpoints": (0.6, 0.2)},
        {"breakpoints": (1.2,)},
        {"breakpoints": (0.0,)},
        {"panels_per_piece": 0},
        {"q": 1},
    ],
)
def test_grid_preconditions(kwargs):
    with pytest.raises(GridError):
        build_grid(**kwargs)


def test_project_recovers_trigonometric_field():
    field = TrigSeries(0.5, (0.3, 0.0), (0.0, -0.2))
    basis = build_basis(7)
    grid = build_grid((), 8)
    coeffs = project_field(field, basis, grid)
    expected = np.array([0.5, 0.3, 0.0, 0.0, -0.2, 0.0, 0.0]) / np.array([1.0] + [np.sqrt(2.0)] * 6)
    assert np.allclose(coeffs, expected, atol=1e-14)
    values, derivs = synthesize(coeffs, basis, grid)
    assert np.allclose(values, field(grid.nodes), atol=1e-13)
    assert np.allclose(derivs, field.derivative()(grid.nodes), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=64), st.integers(min_value=0, max_value=2**31 - 1))
def test_projection_inverts_synthesis(N, seed):
    coeffs = np.random.default_rng(seed).standard_normal(N)
    basis = build_basis(N)
    grid = build_grid((0.5,), default_panels(N))
    values, _ = synthesize(coeffs, basis, grid)
    assert np.max(np.abs(project(values, basis, grid) - coeffs)) <= 1e-10


def test_synthesized_derivative_matches_centered_differences():
    rng = np.random.default_rng(7)
    basis = build_basis(9)
    coeffs = rng.standard_normal(9)
    z = rng.uniform(0.0, 1.0, 20)
    delta = 1e-5
    _, derivs = synthesize_at(coeffs, basis, z)
    plus, _ = synthesize_at(coeffs, basis, z + delta)
    minus, _ = synthesize_at(coeffs, basis, z - delta)
    assert np.allclose((plus - minus) / (2 * delta), derivs, atol=1e-6 * np.abs(derivs).max())


def test_length_checks():
    basis = build_basis(4)
    grid = build_grid()
    with pytest.raises(ValidationError):
        synthesize(np.zeros(5), basis, grid)
    with pytest.raises(ValidationError):
        project(np.zeros(3), basis, grid)


def test_pad_coefficients():
    padded = pad_coefficients(np.array([[1.0, 2.0]]), 4)
    assert padded.tolist() == [[1.0, 2.0, 0.0, 0.0]]
    with pytest.raises(ValidationError):
        pad_coefficients(np.zeros(5), 3)
