from controller_kinds import ControllerKind
from loader_functions.initialize_scenario import get_constants
from scenario import Scenario

constants = get_constants()

saturated_chain = Scenario(
    name = "saturated_chain",
    controller_kind = ControllerKind.APPROX_LIPSCHITZ,
    plant = {"name": "saturated_chain"},
    r = constants['r'],
    tau = constants['tau'],
    T1 = constants['T1'],
    T2 = constants['T2'],
    horizon = constants['horizon'],
    k = constants['k'],
    theta = constants['theta'],
    p = constants['p'],
    l = constants['l'],
    m = constants['m'],
    N = constants['picard_nodes'],
    x0 = constants['x0'],
    u0 = constants['u0'],
    z0 = constants['z0'],
    w0 = constants['w0'],
)

double_integrator_lti = Scenario(
    name = "double_integrator_lti",
    controller_kind = ControllerKind.LTI_EXACT,
    plant = {"name": "double_integrator"},
    r = 0.25,
    tau = 0.25,
    T1 = constants['lti_T1'],
    T2 = constants['lti_T2'],
    horizon = 20.0,
    k = constants['lti_k'],
    p = constants['lti_p'],
    x0 = (1.0, 0.0),
    u0 = 0.0,
    z0 = (0.0, 0.0),
)

feedforward_two_output = Scenario(
    name = "feedforward_two_output",
    controller_kind = ControllerKind.EXACT_FF,
    plant = {"name": "feedforward", "output_case": "two_output"},
    r = constants['ff_r'],
    tau = constants['ff_tau'],
    T1 = constants['ff_period'],
    T2 = constants['ff_period'],
    horizon = 50 * constants['ff_period'],
    ff_gains = dict(constants['ff_two_output_gains']),
    warmup = constants['ff_warmup'],
    x0 = (0.02, -0.03, 0.01),
    u0 = 0.0,
)

feedforward_one_output = Scenario(
    name = "feedforward_one_output",
    controller_kind = ControllerKind.EXACT_FF,
    plant = {"name": "feedforward", "output_case": "one_output", "eps": constants['ff_eps']},
    r = constants['ff_r'],
    tau = constants['ff_tau'],
    T1 = constants['ff_period'],
    T2 = constants['ff_period'],
    horizon = 200 * constants['ff_period'],
    ff_gains = dict(constants['ff_one_output_gains']),
    warmup = constants['ff_warmup'],
    x0 = (0.02, -0.03, 0.01),
    u0 = 0.0,
)

by_name = {
    scenario.name: scenario
    for scenario in (saturated_chain, double_integrator_lti, feedforward_two_output, feedforward_one_output)
}
