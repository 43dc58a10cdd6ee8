import math

import numpy as np
import pytest

from src.basis.galerkin_basis import build_basis, build_grid, default_panels
from src.coefficients.coefficient_field import TrigSeries
from src.diagnostics.energy_checks import (
    coupling_exchange,
    dissipation_monotone,
    energy_balance_residual,
    energy_inequality_slack,
    energy_inequality_terms,
    inequality_holds,
)
from src.diagnostics.jumps import jump_report, max_delta
from src.diagnostics.norms import difference_norms, max_abs_h, norm_V2, norm_W11, sup_over_time, time_integral
from src.diagnostics.report import build_diagnostics, default_delta, inequality_ok
from src.diagnostics.weak_form import WeakFormTest, weak_residual
from src.experiments.random_instances import random_instance
from src.galerkin.problem_spec import ProblemSpec
from src.timestepper.integrator import IntegratorConfig
from src.utils.errors import ValidationError

from tests.conftest import constant, discontinuous, heat_spec, solve, steady_spec


def test_zero_data_stays_zero(zero_spec, loose_config):
    traj, basis, grid = solve(zero_spec, 16, loose_config)
    assert norm_V2(traj) <= 1e-12
    assert norm_W11(traj) <= 1e-12
    assert max_abs_h(traj) <= 1e-12
    diagnostics = build_diagnostics(traj, zero_spec, basis, grid)
    assert max(abs(x) for x in diagnostics["eq24_residual"]) <= 1e-12
    assert all(abs(row["jump"]) <= 1e-12 for row in diagnostics["jumps"][0]["rows"])
    assert diagnostics["transmission_defect"] <= 1e-12
    assert max(diagnostics["weak_residual"].values()) <= 1e-12


def test_steady_state_norms_and_inequality(tight_config):
    c, p = 0.7, 1.0
    spec = steady_spec(c=c, p=p, T=1.0)
    traj, basis, grid = solve(spec, 6, tight_config)
    assert norm_V2(traj) == pytest.approx(c, abs=1e-10)
    assert norm_W11(traj) <= 1e-10
    assert max_abs_h(traj) == pytest.approx(c, abs=1e-10)
    terms = energy_inequality_terms(traj)
    assert terms["lhs"].iloc[-1] == pytest.approx(0.5 * p * c * c, rel=1e-10)
    assert terms["rhs"].iloc[-1] == pytest.approx(p * c * c, rel=1e-10)
    assert energy_inequality_slack(traj).min() == pytest.approx(0.5 * p * c * c, rel=1e-10)
    assert inequality_holds(traj)
    assert dissipation_monotone(traj)


def test_steady_state_weak_residual(tight_config):
    spec = steady_spec(c=0.7, T=1.0)
    traj, basis, grid = solve(spec, 6, tight_config)
    tests = [WeakFormTest((1.0, -1.0), k) for k in range(1, 6)]
    assert max(weak_residual(traj, spec, basis, grid, tests)) <= 1e-10


def test_heat_weak_residual_and_test_function_validation(tight_config):
    spec = heat_spec(T=0.1)
    traj, basis, grid = solve(spec, 5, tight_config)
    res_h1, res_h2, res_u = weak_residual(traj, spec, basis, grid)
    assert res_h1 <= 1e-8
    assert res_h2 <= 1e-12
    assert res_u <= 1e-12
    with pytest.raises(ValidationError):
        weak_residual(traj, spec, basis, grid, [WeakFormTest((1.0,), 1)])
    with pytest.raises(ValidationError):
        weak_residual(traj, spec, basis, grid, [WeakFormTest((0.1, -1.0), 7)])


def test_heat_energy_ledger(tight_config):
    spec = heat_spec(T=0.1)
    traj, _, _ = solve(spec, 5, tight_config)
    # p = 0 and u stays identically zero
    assert energy_balance_residual(traj).abs().max() <= 1e-14
    assert coupling_exchange(traj).abs().max() == 0.0


def test_time_quadrature_helpers():
    times = np.linspace(0.0, 1.0, 5)
    assert time_integral(lambda t: t**5, times) == pytest.approx(1.0 / 6.0, rel=1e-12)
    peak = sup_over_time(lambda t: -(t - 0.3) ** 2, times)
    assert peak <= 0.0
    assert peak >= -(0.05**2)


def test_difference_norms_across_mode_counts(loose_config):
    spec = heat_spec(T=0.05)
    coarse, _, _ = solve(spec, 3, loose_config)
    fine, _, _ = solve(spec, 7, loose_config)
    v2, w11 = difference_norms(fine, coarse)
    assert v2 <= 1e-6
    assert w11 == 0.0


def test_max_delta_includes_wraparound():
    assert max_delta(()) == 0.5
    assert max_delta((0.125, 0.875)) == pytest.approx(0.125)


def test_elastic_flux_jump_at_initial_time(loose_config):
    spec = ProblemSpec(p=1.0, r=constant(1.0), nu=discontinuous(1.0, 2.0), T=0.05,
                       u0=TrigSeries.mode("sin", 1))
    traj, _, _ = solve(spec, 3, loose_config)
    delta = 0.01
    report = jump_report(traj, spec, 0.0, delta)
    rows = {row["quantity"]: row for row in report.rows}
    expected = -6.0 * math.pi * math.cos(2.0 * math.pi * delta)
    assert rows["elastic_flux"]["z"] == 0.5
    assert rows["elastic_flux"]["jump"] == pytest.approx(expected, rel=1e-9)
    # u is continuous: the offset jump is O(delta), the extrapolated value O(delta^3)
    assert rows["u"]["jump"] == pytest.approx(-2.0 * math.sin(2.0 * math.pi * delta), rel=1e-9)
    assert abs(rows["u"]["extrapolated"]) <= 1e-4
    assert report.max_abs("h1") <= 1e-14
    frame = report.as_frame()
    assert set(frame["quantity"]) == {"h1", "h2", "u", "flux1", "flux2", "elastic_flux"}
    assert rows["h1"]["defect"] is None
    assert frame["defect"].notna().sum() == 3


def test_jump_report_validation(loose_config):
    spec = heat_spec(T=0.05)
    traj, _, _ = solve(spec, 3, loose_config)
    assert jump_report(traj, spec, 0.05, 0.1).is_empty
    with pytest.raises(ValidationError):
        jump_report(traj, spec, 0.05, 0.6)
    with pytest.raises(ValidationError):
        jump_report(traj, spec, 0.2, 0.1)


def test_report_blocks_follow_request(loose_config):
    spec = heat_spec(T=0.05)
    traj, basis, grid = solve(spec, 3, loose_config)
    diagnostics = build_diagnostics(traj, spec, basis, grid, requested=("norms",))
    assert set(diagnostics) == {"times", "norms", "max_abs_h"}
    full = build_diagnostics(traj, spec, basis, grid)
    assert inequality_ok(full)
    assert len(full["eq37_slack"]) == len(full["times"])
    assert default_delta(spec) == 0.05


def test_random_instance_satisfies_inequality():
    spec = random_instance(seed=11, m=2)
    traj, _, _ = solve(spec, 8, IntegratorConfig(rel_tol=1e-9, abs_tol=1e-11))
    terms = energy_inequality_terms(traj)
    assert (terms["slack"] >= -1e-8 * terms["rhs"].abs()).all()


def _kinked_spec(T=0.1):
    """r jumps from 1 to 2 at z = 1/2, so h has a kink there"""
    return ProblemSpec(p=1.0, r=discontinuous(1.0, 2.0), nu=constant(1.0), T=T,
                       h1=TrigSeries(0.0, (0.5,), (0.3,)))


@pytest.mark.slow
def test_transmission_defect_falls_with_modes():
    spec = _kinked_spec()
    config = IntegratorConfig(rel_tol=1e-9, abs_tol=1e-13)
    defects = {}
    for N in (8, 32):
        traj, _, _ = solve(spec, N, config)
        defects[N] = jump_report(traj, spec, spec.T, 0.1).transmission_defect()
    assert defects[8] > 0.0
    assert defects[32] <= 0.5 * defects[8]


def test_continuous_field_jump_is_first_order_in_delta():
    spec = _kinked_spec()
    traj, _, _ = solve(spec, 16, IntegratorConfig(rel_tol=1e-9, abs_tol=1e-13))
    report = jump_report(traj, spec, spec.T, 0.1)
    row = next(row for row in report.rows if row["quantity"] == "h1")
    assert row["jump"] != 0.0
    assert row["jump_half"] / row["jump"] == pytest.approx(0.5, rel=0.3)


@pytest.mark.slow
def test_weak_residual_falls_with_modes():
    spec = ProblemSpec(
        p=1.0,
        r=TrigSeries(mean=1.0, cos=(0.3,)),
        nu=constant(1.0),
        T=0.2,
        h1=TrigSeries(0.2, (0.5,), ()),
        u0=TrigSeries(0.0, (), (0.1,)),
    )
    config = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    reference = build_basis(48)
    grid = build_grid((), default_panels(48))
    tests = [WeakFormTest((spec.T, -1.0), k) for k in range(1, 41)]
    residuals = []
    for N in (8, 16, 32):
        traj, _, _ = solve(spec, N, config)
        residuals.append(max(weak_residual(traj, spec, reference, grid, tests)))
    assert residuals[0] > residuals[1] > residuals[2]
