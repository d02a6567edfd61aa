def get_constants():
    # worked example: saturating quadratic chain with r = tau = 1/4
    r = 0.25
    tau = 0.25
    l = 1
    m = 1
    theta = 1.0
    T1 = 0.03
    T2 = 0.01
    k = (-15.0, -9.0)
    p = (-3.0, -3.0)
    horizon = 20.0

    x0 = (1.0, 1.0)
    u0 = -2.0
    z0 = (0.0, 0.0)
    w0 = 0.0

    picard_nodes = 64
    step_divisor = 4
    event_merge_tol = 1e-10
    growth_slack = 1e-9

    # feedforward chain, both output cases
    ff_period = 0.25
    ff_r = 0.05
    ff_tau = 0.1
    ff_two_output_gains = {'K0': 1.0, 'K1': 1.0, 'K2': 4.0, 'R1': 2.0, 'R2': 1.0}
    ff_eps = 0.1
    ff_one_output_gains = {'K0': 0.1, 'K1': 0.05, 'K2': 0.05, 'R1': 0.05, 'R2': 0.025, 'eps': ff_eps}
    ff_warmup = 0.0

    # double integrator: controller poles -1, -2; observer poles -3, -3
    lti_k = (-2.0, -3.0)
    lti_p = (-6.0, -9.0)
    lti_T1 = 0.03
    lti_T2 = 0.01

    deadbeat_period = 0.5

    constants = {
        'r': r,
        'tau': tau,
        'l': l,
        'm': m,
        'theta': theta,
        'T1': T1,
        'T2': T2,
        'k': k,
        'p': p,
        'horizon': horizon,
        'x0': x0,
        'u0': u0,
        'z0': z0,
        'w0': w0,
        'picard_nodes': picard_nodes,
        'step_divisor': step_divisor,
        'event_merge_tol': event_merge_tol,
        'growth_slack': growth_slack,
        'ff_period': ff_period,
        'ff_r': ff_r,
        'ff_tau': ff_tau,
        'ff_two_output_gains': ff_two_output_gains,
        'ff_eps': ff_eps,
        'ff_one_output_gains': ff_one_output_gains,
        'ff_warmup': ff_warmup,
        'lti_k': lti_k,
        'lti_p': lti_p,
        'lti_T1': lti_T1,
        'lti_T2': lti_T2,
        'deadbeat_period': deadbeat_period,
        'seed': 0,
        'max_events': 10_000_000,
    }

    return constants
