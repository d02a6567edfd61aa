import json

import numpy as np # type: ignore
import pytest

import scenario_factories
from controller_kinds import OutputCase, PlantKind
from controllers import (
    ApproxPredictorController, Controller, ExactFeedforwardController, LtiPredictorController, build_controller,
)
from exceptions import ConfigError, HistoryUnderflow
from loader_functions.data_loaders import load_scenario, save_scenario
from loader_functions.plant_init import build_plant
from loader_functions.random_utils import build_signal, random_initial_state
from message_log import MessageLog
from plants import FeedforwardPlant, LtiPlant, StrictFeedbackPlant
from scenario import Scenario
from signals import constant_signal

def test_builtin_scenarios_validate():
    for scenario in scenario_factories.by_name.values():
        assert scenario.validate() is scenario

def test_history_lengths():
    assert scenario_factories.saturated_chain.input_history_length == pytest.approx(0.5)
    assert scenario_factories.feedforward_two_output.input_history_length == pytest.approx(0.5)
    assert scenario_factories.feedforward_one_output.input_history_length == pytest.approx(0.75)

def test_default_step_divides_the_shorter_period():
    assert scenario_factories.saturated_chain.integration_step == pytest.approx(0.01 / 4)
    assert scenario_factories.saturated_chain.replace(step = 0.002).integration_step == 0.002

def test_dict_round_trip():
    for scenario in scenario_factories.by_name.values():
        assert Scenario.from_dict(scenario.to_dict()) == scenario

def test_from_dict_fills_defaults():
    scenario = Scenario.from_dict({"controller_kind": "approx_lipschitz"})
    assert scenario.plant_kind is PlantKind.STRICT_FEEDBACK
    assert scenario.k == (-15.0, -9.0)
    assert scenario.name == "<unnamed>"

@pytest.mark.parametrize("data", [
    {"controller_kind": "approx_lipschitz", "colour": "red"},
    {"plant": {"name": "saturated_chain"}},
    {"controller_kind": "smith_predictor"},
    {"controller_kind": "approx_lipschitz", "T1": 0.0},
    {"controller_kind": "lti_exact"},
    {"controller_kind": "approx_lipschitz", "k": [1.0]},
    {"controller_kind": "approx_lipschitz", "theta": 0.5},
    {"controller_kind": "exact_ff", "plant": {"name": "feedforward"}, "x0": [0, 0, 0]},
    {"controller_kind": "exact_ff", "plant": {"name": "feedforward"}, "x0": [0, 0, 0], "T1": 0.25, "T2": 0.25},
])
def test_bad_scenarios_are_rejected(data):
    with pytest.raises(ConfigError):
        Scenario.from_dict(data)

def test_scenario_files(tmp_path):
    path = str(tmp_path / "scenario.json")
    save_scenario(scenario_factories.feedforward_one_output, path)
    assert load_scenario(path) == scenario_factories.feedforward_one_output
    with open(path) as data_file:
        assert json.load(data_file)["controller_kind"] == "exact_ff"

def test_scenario_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_scenario(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario(str(broken))
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_scenario(str(listing))

def test_build_plant():
    assert isinstance(build_plant({"name": "saturated_chain"}, 0.25, 0.25), StrictFeedbackPlant)
    assert build_plant({"name": "chain", "n": 3}, 0.1, 0.1).n == 3
    assert isinstance(build_plant({"name": "double_integrator"}, 0.1, 0.1), LtiPlant)
    lti = build_plant({"name": "lti", "A": [[-1.0]], "B": [1.0], "c": [1.0]}, 0.1, 0.1)
    assert lti.n == 1
    ff = build_plant({"name": "feedforward", "output_case": "one_output", "eps": 0.1}, 0.05, 0.1, 0.25)
    assert isinstance(ff, FeedforwardPlant) and ff.output_case is OutputCase.ONE_OUTPUT
    for spec, T in (({"name": "lti", "A": [[0.0]]}, None), ({"name": "feedforward"}, None), ({"name": "boiler"}, None)):
        with pytest.raises(ConfigError):
            build_plant(spec, 0.1, 0.1, T)

def test_signal_processes():
    assert build_signal(None, 2).is_zero
    constant = build_signal({"kind": "constant", "value": [0.5, -1.0]}, 2)
    assert np.array_equal(constant.vector(3.0), [0.5, -1.0])
    assert constant.sup_bound() == pytest.approx(np.hypot(0.5, 1.0))
    wave = build_signal({"kind": "sinusoid", "amplitude": 2.0, "frequency": 0.25}, 1)
    assert wave(1.0) == pytest.approx(2.0)
    assert wave.breakpoints(0.0, 10.0).size == 0

def test_random_steps_are_seeded_and_piecewise_constant():
    spec = {"kind": "random_steps", "amplitude": 1.0, "period": 0.1}
    first = build_signal(spec, 1, seed = 4, nonnegative = True)
    second = build_signal(spec, 1, seed = 4, nonnegative = True)
    times = np.linspace(0.0, 2.0, 57)
    values = [first(t) for t in times]
    assert values == [second(t) for t in reversed(times)][::-1]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert first(0.31) == first(0.39)
    assert np.allclose(first.breakpoints(0.0, 0.35), [0.1, 0.2, 0.3])
    assert build_signal(spec, 1, seed = 5)(0.05) != first(0.05)

def test_signal_spec_errors():
    with pytest.raises(ConfigError):
        build_signal({"kind": "brownian"}, 1)
    with pytest.raises(ConfigError):
        build_signal({"kind": "constant", "valu": 1.0}, 1)
    with pytest.raises(ConfigError):
        build_signal({"kind": "constant", "value": -1.0}, 1, nonnegative = True)

def test_random_initial_state_lies_in_the_ball(rng):
    for _ in range(100):
        assert np.linalg.norm(random_initial_state(rng, 3, 0.5)) <= 0.5

def test_controllers_are_built_by_kind():
    log = MessageLog()
    pairs = [
        (scenario_factories.saturated_chain, ApproxPredictorController),
        (scenario_factories.double_integrator_lti, LtiPredictorController),
        (scenario_factories.feedforward_two_output, ExactFeedforwardController),
    ]
    for scenario, cls in pairs:
        plant = build_plant(scenario.plant, scenario.r, scenario.tau, scenario.T2)
        assert isinstance(build_controller(scenario, plant, log), cls)
    assert any("vacuous" in m.plain_text for m in log.messages)

def test_base_controller_is_abstract():
    with pytest.raises(NotImplementedError):
        Controller(None).perform(0, 0.0, None, constant_signal(0.0, -1.0, 0.0))

def test_predictor_controller_needs_input_up_to_now():
    scenario = scenario_factories.saturated_chain
    plant = build_plant(scenario.plant, scenario.r, scenario.tau)
    controller = build_controller(scenario, plant)
    u = constant_signal(0.0, -0.5, 0.0)
    assert controller.perform(0, 0.0, np.zeros(3), u) == 0.0
    with pytest.raises(HistoryUnderflow):
        controller.perform(1, 0.01, np.zeros(3), u)

def test_lti_controller_matches_gain_on_zero_history():
    scenario = scenario_factories.double_integrator_lti
    plant = build_plant(scenario.plant, scenario.r, scenario.tau)
    controller = build_controller(scenario, plant)
    z = np.array([1.0, 0.0])
    u = constant_signal(0.0, -0.5, 0.0)
    # prediction of the double integrator at rest input: (1, 0) stays put
    assert controller.perform(0, 0.0, np.append(z, 0.0), u) == pytest.approx(-2.0)
