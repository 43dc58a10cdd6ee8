import numpy as np
import pytest

from src.basis.galerkin_basis import build_basis, build_grid, default_panels
from src.coefficients.coefficient_field import PiecewiseCoefficient, TrigSeries
from src.galerkin.problem_spec import ProblemSpec, breakpoints
from src.timestepper.integrator import IntegratorConfig, integrate

HEAT_RATE = 4.0 * np.pi**2


def constant(value):
    return PiecewiseCoefficient.constant(value)


def discontinuous(left, right, at=0.5):
    return PiecewiseCoefficient(breakpoints=(at,), pieces=([left], [right]))


def heat_spec(T=0.1, r=1.0):
    """p = 0 decouples h from u; h1 = cos 2 pi z decays as exp(-4 pi^2 r t)"""
    return ProblemSpec(
        p=0.0,
        diagnostic_zero_p=True,
        r=constant(r),
        nu=constant(1.0),
        T=T,
        h1=TrigSeries.mode("cos", 1),
    )


def steady_spec(c=0.7, T=1.0, p=1.0):
    return ProblemSpec(p=p, r=constant(1.0), nu=constant(1.0), T=T, h1=constant(c))


def solve(spec, N, config, output_times=()):
    basis = build_basis(N)
    grid = build_grid(breakpoints(spec), default_panels(N))
    return integrate(spec, config, basis, grid, output_times), basis, grid


@pytest.fixture
def tight_config():
    return IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)


@pytest.fixture
def loose_config():
    return IntegratorConfig(rel_tol=1e-6, abs_tol=1e-8)


@pytest.fixture
def zero_spec():
    """Zero data with two shared jumps in r and nu"""
    bps = (0.25, 0.625)
    return ProblemSpec(
        p=1.0,
        r=PiecewiseCoefficient(bps, ([1.0], [2.0], [0.5])),
        nu=PiecewiseCoefficient(bps, ([1.5], [0.75], [1.0])),
        T=1.0,
    )


@pytest.fixture(autouse=True)
def data_dir(tmp_path, monkeypatch):
    """Keep run and study artifacts inside the test's temporary directory"""
    root = tmp_path / "data"
    monkeypatch.setenv("MAGNETOSENSE_DATA_DIR", str(root))
    return root
