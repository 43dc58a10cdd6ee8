import math

import numpy as np
import pytest

from src.coefficients.coefficient_field import TrigSeries
from src.coefficients.forcing import ForcingField, ForcingTerm, TimeProfile
from src.galerkin.problem_spec import ProblemSpec
from src.timestepper.integrator import IntegratorConfig, dense_eval
from src.timestepper.exponential_rk import ETDRK3, phi_functions
from src.diagnostics.energy_checks import energy_balance_residual
from src.experiments.random_instances import random_instance
from src.utils.errors import BlowUpError, MaxStepsExceeded, SchemaError, ValidationError

from tests.conftest import HEAT_RATE, constant, discontinuous, heat_spec, solve, steady_spec


def test_phi_functions_at_zero_and_across_branches():
    phi1, phi2, phi3 = phi_functions(np.array([0.0]))
    assert (phi1[0], phi2[0], phi3[0]) == pytest.approx((1.0, 0.5, 1.0 / 6.0))
    below = phi_functions(np.array([-0.5 + 1e-9, 0.5 - 1e-9]))
    above = phi_functions(np.array([-0.5 - 1e-9, 0.5 + 1e-9]))
    for lo, hi in zip(below, above):
        assert np.allclose(lo, hi, rtol=1e-8)
    big = phi_functions(np.array([-400.0]))[0][0]
    assert big == pytest.approx(-math.expm1(-400.0) / 400.0)
    phi4 = phi_functions(np.array([0.0, -0.5 - 1e-9, -0.5 + 1e-9]), count=4)[3]
    assert phi4[0] == pytest.approx(1.0 / 24.0)
    assert phi4[1] == pytest.approx(phi4[2], rel=1e-8)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"rel_tol": 0.0},
        {"abs_tol": -1e-3},
        {"dt_init": 0.1, "dt_max": 0.01},
        {"scheme": "euler"},
        {"max_steps": 0},
    ],
)
def test_integrator_config_validation(kwargs):
    with pytest.raises(SchemaError):
        IntegratorConfig(**kwargs)


def test_integrator_config_documents():
    config = IntegratorConfig.from_document({"rel_tol": 1e-9, "scheme": "radau"})
    assert config.to_document()["scheme"] == "radau"
    with pytest.raises(SchemaError):
        IntegratorConfig.from_document({"tolerance": 1e-9})


def test_linear_problem_dense_output_is_exact():
    L = np.array([-3.0, 0.0])
    stepper = ETDRK3(lambda t, y: L * y, L, rtol=1e-8, atol=1e-10, dt_init=0.05, dt_max=0.1, max_steps=100)
    segments = stepper.solve(np.array([1.0, 2.0]), 1.0)
    assert segments[-1].t1 == 1.0
    for seg in segments:
        mid = 0.5 * (seg.t0 + seg.t1)
        assert seg(mid) == pytest.approx([math.exp(-3.0 * mid), 2.0], rel=1e-13)
    assert segments[-1].y1[0] == pytest.approx(math.exp(-3.0), rel=1e-13)


def test_nonlinear_scalar_reaches_tolerance():
    stepper = ETDRK3(lambda t, y: -y**2, np.zeros(1), rtol=1e-9, atol=1e-12, dt_init=1e-3, dt_max=0.1,
                     max_steps=10000)
    segments = stepper.solve(np.array([1.0]), 2.0)
    assert segments[-1].y1[0] == pytest.approx(1.0 / 3.0, rel=1e-6)
    assert segments[5](0.5 * (segments[5].t0 + segments[5].t1))[0] == pytest.approx(
        1.0 / (1.0 + 0.5 * (segments[5].t0 + segments[5].t1)), rel=1e-6
    )
    assert stepper.stats.steps == len(segments)


def test_blow_up_is_reported():
    stepper = ETDRK3(lambda t, y: np.full_like(y, np.nan), np.zeros(2), rtol=1e-6, atol=1e-8,
                     dt_init=1e-3, dt_max=1e-2, max_steps=1000)
    with pytest.raises(BlowUpError) as info:
        stepper.solve(np.ones(2), 1.0)
    assert info.value.last_valid_time == 0.0


def test_stiff_forcing_does_not_shrink_steps():
    # y = sin t solves y' = L y - L sin t + cos t for any L
    L = np.array([-1.0e4])
    stepper = ETDRK3(lambda t, y: L * y - L * math.sin(t) + math.cos(t), L, rtol=1e-6, atol=1e-8,
                     dt_init=1e-3, dt_max=0.1, max_steps=1000)
    segments = stepper.solve(np.zeros(1), 1.0)
    assert stepper.stats.steps <= 20
    assert segments[-1].y1[0] == pytest.approx(math.sin(1.0), abs=1e-6)
    mid = 0.5 * (segments[-1].t0 + segments[-1].t1)
    assert segments[-1](mid)[0] == pytest.approx(math.sin(mid), abs=1e-6)


def test_time_dependent_forcing_is_resolved():
    # y = sin 3t; the explicit part depends on t only, so the step is limited by its cubic term
    L = np.array([-20.0])
    stepper = ETDRK3(lambda t, y: L * y - L * math.sin(3.0 * t) + 3.0 * math.cos(3.0 * t), L, rtol=1e-10,
                     atol=1e-12, dt_init=1e-3, dt_max=0.1, max_steps=10000)
    segments = stepper.solve(np.zeros(1), 1.0)
    assert stepper.stats.steps > 50
    assert segments[-1].y1[0] == pytest.approx(math.sin(3.0), abs=1e-8)


def test_step_cap():
    config = IntegratorConfig(max_steps=3, dt_init=1e-3, dt_max=1e-2)
    with pytest.raises(MaxStepsExceeded):
        solve(steady_spec(T=1.0), 4, config)


def test_heat_decay_imex(tight_config):
    traj, _, _ = solve(heat_spec(T=0.1), 5, tight_config)
    expected = math.exp(-HEAT_RATE * 0.1) / math.sqrt(2.0)
    final = traj.states[-1]
    assert traj.times[-1] == 0.1
    assert abs(final[1] - expected) <= 1e-8
    assert np.max(np.abs(np.delete(final, 1))) <= 1e-12


def test_heat_decay_radau():
    config = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12, scheme="radau")
    traj, _, _ = solve(heat_spec(T=0.1), 5, config)
    expected = math.exp(-HEAT_RATE * 0.1) / math.sqrt(2.0)
    assert abs(traj.states[-1][1] - expected) <= 1e-7


def test_constant_steady_state_is_preserved(tight_config):
    traj, _, _ = solve(steady_spec(c=0.7, T=1.0), 6, tight_config)
    assert np.allclose(traj.states[-1], traj.states[0], atol=1e-10)


def test_output_times_are_sampled_exactly(loose_config):
    traj, _, _ = solve(heat_spec(T=0.1), 3, loose_config, output_times=(0.0123, 0.05))
    assert 0.0123 in traj.times
    assert 0.05 in traj.times
    state = dense_eval(traj, 0.0123)
    k = int(np.flatnonzero(traj.times == 0.0123)[0])
    assert np.array_equal(state.to_vector(), traj.states[k])
    assert state.a1[1] == pytest.approx(math.exp(-HEAT_RATE * 0.0123) / math.sqrt(2.0), rel=1e-5)
    with pytest.raises(ValidationError):
        traj.vector_at(0.2)
    with pytest.raises(ValidationError):
        solve(heat_spec(T=0.1), 3, loose_config, output_times=(0.5,))


def test_trajectory_frames(loose_config):
    traj, _, _ = solve(heat_spec(T=0.05), 3, loose_config)
    frame = traj.state_frame()
    assert list(frame.columns[:4]) == ["t", "a1[0]", "a1[1]", "a1[2]"]
    assert list(frame.columns[-1:]) == ["bdot[2]"]
    assert len(frame) == traj.times.size
    ledger = traj.ledger_frame()
    assert ledger["dissipation_cum"].iloc[0] == 0.0
    assert ledger["dissipation_cum"].is_monotonic_increasing


def test_ledger_closes_energy_balance():
    config = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    spec = random_instance(seed=3, m=2)
    traj, _, _ = solve(spec, 8, config)
    residual = energy_balance_residual(traj)
    scale = max(1.0, traj.ledger[0].total)
    assert residual.abs().max() <= 1e-6 * scale


def test_radau_step_cap_and_stats():
    capped = IntegratorConfig(max_steps=3, dt_init=1e-3, dt_max=1e-2, scheme="radau")
    with pytest.raises(MaxStepsExceeded) as info:
        solve(steady_spec(T=1.0), 4, capped)
    assert info.value.time_reached < 1.0

    config = IntegratorConfig(rel_tol=1e-6, abs_tol=1e-8, scheme="radau")
    traj, _, _ = solve(heat_spec(T=0.05), 3, config)
    assert traj.stats["steps"] == len(traj.segments)
    assert "rejected" not in traj.stats
    assert traj.segments[-1].t1 == 0.05


def test_mean_of_h_is_conserved(loose_config):
    spec = ProblemSpec(
        p=1.0,
        r=discontinuous(1.0, 2.0),
        nu=constant(1.0),
        T=0.2,
        f=ForcingField.stationary(TrigSeries.mode("cos", 1)),
        h1=TrigSeries(0.4, (0.3,), ()),
        h2=TrigSeries(-0.2, (), (0.1,)),
        u0=TrigSeries(0.0, (), (0.1,)),
    )
    N = 8
    traj, _, _ = solve(spec, N, loose_config, output_times=(0.05,))
    assert np.all(traj.states[:, 0] == traj.states[0, 0])
    assert np.all(traj.states[:, N] == traj.states[0, N])


def test_current_response_superposes(tight_config):
    # with p = 0 and u at rest the h equations are linear in j
    common = dict(p=0.0, diagnostic_zero_p=True, r=discontinuous(1.0, 2.0), nu=constant(1.0), T=0.1)
    j_a = ForcingField.stationary(TrigSeries.mode("cos", 1))
    j_b = ForcingField((ForcingTerm(TimeProfile("exp", (0.5, -2.0)), TrigSeries.mode("sin", 2)),))
    final = {}
    for name, j1 in (("a", j_a), ("b", j_b), ("sum", j_a + j_b)):
        traj, _, _ = solve(ProblemSpec(j1=j1, **common), 8, tight_config)
        final[name] = traj.states[-1]
    assert np.allclose(final["sum"], final["a"] + final["b"], rtol=0.0, atol=1e-9)


def test_runs_are_bit_identical(loose_config):
    spec = random_instance(seed=4, m=1)
    first, _, _ = solve(spec, 8, loose_config)
    second, _, _ = solve(spec, 8, loose_config)
    assert np.array_equal(first.times, second.times)
    assert np.array_equal(first.states, second.states)
