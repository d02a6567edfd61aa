import math
import time

import numpy as np # type: ignore
import pytest

import scenario_factories
from engine import DenseHistory, Engine, batch_run, event_table, integrate_segment, iss_sweep, run_closed_loop
from event_kinds import EventKind
from exact_predictor import FeedforwardGains, local_decay
from exceptions import BlowUp, ConfigError, DomainError
from gains import sigma_fit
from loader_functions.random_utils import random_initial_state
from observer import estimation_error
from simulation_log import emit_csv

def test_rk4_on_zero_field_keeps_the_state():
    path = integrate_segment(lambda t, y: np.zeros_like(y), np.array([1.0, -2.0]), 0.0, 1.0, 0.1)
    assert np.array_equal(path.final, [1.0, -2.0])

def test_rk4_last_step_is_shortened():
    path = integrate_segment(lambda t, y: y, np.array([1.0]), 0.0, 0.25, 0.1)
    assert np.allclose(path.times, [0.0, 0.1, 0.2, 0.25])
    assert path.times[-1] == 0.25

def test_rk4_accuracy_and_order():
    exact = math.e
    assert abs(integrate_segment(lambda t, y: y, np.array([1.0]), 0.0, 1.0, 1e-3).final[0] - exact) < 1e-10
    coarse = abs(integrate_segment(lambda t, y: y, np.array([1.0]), 0.0, 1.0, 0.1).final[0] - exact)
    fine = abs(integrate_segment(lambda t, y: y, np.array([1.0]), 0.0, 1.0, 0.05).final[0] - exact)
    assert 14.0 < coarse / fine < 18.0

def test_rk4_reports_blow_up():
    with pytest.raises(BlowUp):
        integrate_segment(lambda t, y: y * y, np.array([1.0]), 0.0, 2.0, 0.01)

def test_rk4_rejects_empty_segments():
    with pytest.raises(DomainError):
        integrate_segment(lambda t, y: y, np.array([1.0]), 1.0, 1.0, 0.1)

def test_dense_history_reproduces_cubics():
    path = integrate_segment(lambda t, y: np.array([3.0 * t * t]), np.array([0.0]), 0.0, 1.0, 0.1)
    history = DenseHistory(np.array([0.0]))
    history.append(path, 1)
    for t in (0.05, 0.537, 0.99, 1.0):
        assert history(t)[0] == pytest.approx(t ** 3, abs = 1e-12)

def test_dense_history_before_start_is_the_initial_state():
    history = DenseHistory(np.array([2.0, 3.0]))
    assert np.array_equal(history(-0.3), [2.0, 3.0])
    with pytest.raises(DomainError):
        history(0.5)

def test_event_table_merges_and_orders_kinds():
    table = event_table({
        EventKind.SAMPLE: [0.0, 0.03],
        EventKind.HOLD: [0.0, 0.01, 0.02, 0.03 + 1e-15],
        EventKind.BREAK: [0.015],
    }, 1e-10)
    assert [t for t, _ in table] == [0.0, 0.01, 0.015, 0.02, 0.03 + 1e-15]
    assert table[0][1] == [EventKind.SAMPLE, EventKind.HOLD]
    assert table[2][1] == [EventKind.BREAK]
    assert table[-1][1] == [EventKind.SAMPLE, EventKind.HOLD]

def test_zero_initial_data_stays_at_the_origin(saturated_chain_scenario):
    scenario = saturated_chain_scenario.replace(
        x0 = (0.0, 0.0), u0 = 0.0, horizon = 1.0, step = saturated_chain_scenario.T2 / 2,
    )
    log = run_closed_loop(scenario)
    for columns in (log.x, log.z, log.w, log.u):
        assert np.all(columns == 0.0)

def test_log_rows_follow_the_schedule(saturated_chain_scenario):
    scenario = saturated_chain_scenario.replace(horizon = 0.5, step = saturated_chain_scenario.T2 / 2)
    engine = Engine(scenario)
    log = engine.run_closed_loop()
    assert np.all(np.diff(log.t) > 0.0)
    assert log.t[0] == 0.0 and log.t[-1] == pytest.approx(0.5)
    holds = engine.schedule()[EventKind.HOLD]
    assert np.array_equal(log.t[log.event_rows(EventKind.HOLD)], holds)
    assert np.count_nonzero(log.event_rows(EventKind.SAMPLE)) == 17

def test_identical_seeds_give_identical_csv(saturated_chain_scenario, tmp_path):
    scenario = saturated_chain_scenario.replace(
        horizon = 1.0, step = saturated_chain_scenario.T2 / 2,
        b = {"kind": "random_steps", "amplitude": 0.5, "period": 0.05},
        xi = {"kind": "random_steps", "amplitude": 0.01, "period": 0.05},
    )
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_closed_loop(scenario), str(first))
    emit_csv(run_closed_loop(scenario), str(second))
    assert first.read_bytes() == second.read_bytes()

def test_feedforward_plant_rejects_disturbances():
    scenario = scenario_factories.feedforward_two_output.replace(d = {"kind": "constant", "value": 0.1})
    with pytest.raises(ConfigError):
        Engine(scenario)

@pytest.mark.parametrize("scenario", [
    scenario_factories.feedforward_two_output.replace(horizon = 5.0),
    scenario_factories.feedforward_one_output.replace(horizon = 5.0),
], ids = ["two_output", "one_output"])
def test_feedforward_reconstruction_is_exact(scenario):
    engine = Engine(scenario)
    log = engine.run_closed_loop()
    required = 2 if scenario.output_case.value == "two_output" else 3
    holds = np.flatnonzero(log.event_rows(EventKind.HOLD))
    checked = 0
    for index, row in enumerate(holds):
        if index < required:
            continue
        delayed = engine.history(log.t[row] - scenario.r)
        assert np.allclose(log.z[row], delayed, rtol = 0.0, atol = 1e-8)
        checked += 1
    assert checked > 10

def _random_history(scenario, seed, radius, input_scale):
    rng = np.random.default_rng(seed)
    x0 = tuple(float(v) for v in random_initial_state(rng, 3, radius))
    return scenario.replace(x0 = x0, u0 = float(rng.uniform(-input_scale, input_scale)), seed = seed)

def _norm_near(log, t):
    return log.state_norm()[int(np.argmin(np.abs(log.t - t)))]

@pytest.mark.parametrize("output_case", ["two_output", "one_output"])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_feedforward_loop_converges_from_random_histories(output_case, seed):
    if output_case == "two_output":
        scenario = _random_history(scenario_factories.feedforward_two_output, seed, 0.1, 0.5)
        log = run_closed_loop(scenario)
        assert _norm_near(log, 50 * scenario.T2) <= 1e-3 * log.state_norm().max()
        assert np.all(np.abs(log.u) <= 6.0 + 1e-12)
        return
    scenario = _random_history(scenario_factories.feedforward_one_output, seed, 0.01, 0.02)
    log = run_closed_loop(scenario)
    gains = FeedforwardGains(**scenario.ff_gains)
    assert np.all(np.abs(log.u) <= gains.input_bound + 1e-12)
    middle, end = 100 * scenario.T2, 200 * scenario.T2
    ratio = _norm_near(log, end) / _norm_near(log, middle)
    expected = local_decay(gains, scenario.T2, 100)
    assert 0.5 * expected <= ratio <= 1.5 * expected
    assert _norm_near(log, end) < 0.5 * log.state_norm().max()

def test_wrong_measurement_delay_still_runs(saturated_chain_scenario):
    scenario = saturated_chain_scenario.replace(
        horizon = 1.0, step = saturated_chain_scenario.T2 / 2, r_actual = 0.3, checks = False,
    )
    log = run_closed_loop(scenario)
    assert np.all(np.isfinite(log.x))

@pytest.fixture(scope = "module")
def saturated_chain_run():
    started = time.perf_counter()
    log = run_closed_loop(scenario_factories.saturated_chain)
    return log, time.perf_counter() - started

@pytest.fixture(scope = "module")
def saturated_chain_log(saturated_chain_run):
    return saturated_chain_run[0]

@pytest.mark.slow
def test_worked_example_runs_in_under_five_seconds(saturated_chain_run):
    _, elapsed = saturated_chain_run
    assert elapsed < 5.0

@pytest.mark.slow
def test_worked_example_converges(saturated_chain_log):
    peak = saturated_chain_log.sup_norm()
    assert saturated_chain_log.sup_norm(15.0, 20.0) <= 1e-2 * peak
    assert not saturated_chain_log.message_log.errors()

@pytest.mark.slow
def test_worked_example_estimation_error_decays(saturated_chain_log):
    error = estimation_error(saturated_chain_log, saturated_chain_log.r)
    rows = saturated_chain_log.mask(2.0, 15.0)
    sigma, _ = sigma_fit(saturated_chain_log.t[rows], saturated_chain_log.state_norm()[rows] + error[rows])
    assert sigma > 0.0

@pytest.mark.slow
def test_worked_example_observer_error_is_small_by_ten_seconds(saturated_chain_log):
    error = estimation_error(saturated_chain_log, saturated_chain_log.r)
    peak = np.nanmax(error)
    late = error[saturated_chain_log.mask(10.0, saturated_chain_log.t[-1])]
    assert peak > 0.0
    assert np.max(late) <= 1e-3 * peak

@pytest.mark.slow
def test_worked_example_refines_with_the_step(saturated_chain_log):
    half = scenario_factories.saturated_chain.replace(step = scenario_factories.saturated_chain.T2 / 8)
    refined = run_closed_loop(half)
    assert np.linalg.norm(refined.terminal_state() - saturated_chain_log.terminal_state()) <= 1e-6

@pytest.mark.slow
def test_worked_example_with_measurement_noise_stays_bounded():
    scenario = scenario_factories.saturated_chain.replace(
        xi = {"kind": "sinusoid", "amplitude": 0.01, "frequency": 1.0},
    )
    log = run_closed_loop(scenario)
    assert log.sup_norm(15.0, 20.0) < 1.0

@pytest.mark.slow
def test_disturbance_response_at_worked_example_amplitudes():
    scenario = scenario_factories.saturated_chain.replace(d = {"kind": "constant", "value": [0.0, 1.0]})
    sweep = iss_sweep(scenario, [0.1, 0.2, 0.4], workers = 1)
    sizes = [size for _, size in sweep]
    assert [a for a, _ in sweep] == [0.1, 0.2, 0.4]
    assert 0.0 < sizes[0] < sizes[1] < sizes[2] < 10.0
    assert 1.6 <= sizes[1] / sizes[0] <= 2.4
    # the disturbed equilibrium sits in the curved part of f at a = 0.4
    assert 2.4 < sizes[2] / sizes[1] <= 3.2

@pytest.mark.slow
def test_small_disturbance_response_scales_linearly():
    scenario = scenario_factories.saturated_chain.replace(
        x0 = (0.0, 0.0), u0 = 0.0, d = {"kind": "constant", "value": [0.0, 1.0]},
    )
    sweep = iss_sweep(scenario, [0.02, 0.04, 0.08], workers = 1)
    sizes = [size for _, size in sweep]
    assert all(size > 0.0 for size in sizes)
    for small, large in zip(sizes, sizes[1:]):
        assert 1.6 <= large / small <= 2.4

@pytest.mark.slow
def test_lti_loop_is_robust_to_sampling_perturbations():
    base = scenario_factories.double_integrator_lti.replace(step = scenario_factories.double_integrator_lti.T2 / 4)
    scenarios = [
        base.replace(seed = seed, b = {"kind": "random_steps", "amplitude": 1.0, "period": 0.03})
        for seed in range(20)
    ]
    rates = []
    for log in batch_run(scenarios):
        assert log.state_norm()[-1] <= 1e-3
        rows = log.mask(5.0, 15.0)
        sigma, _ = sigma_fit(log.t[rows], log.state_norm()[rows])
        rates.append(sigma)
    assert (max(rates) - min(rates)) / np.mean(rates) <= 0.1
