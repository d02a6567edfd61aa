import numpy as np # type: ignore
import pytest
from scipy.integrate import solve_ivp # type: ignore

from exceptions import DomainError
from lti import (
    DeadbeatReconstructor, acker, augmented_input_integral, controllability_matrix, deadbeat_demo,
    deadbeat_gain, deadbeat_settle_time, lti_control, lti_predict, matrix_exponential, observer_gain,
    zoh_discretize,
)
from plants import double_integrator
from signals import PiecewiseConstantSignal, constant_signal, history_window, rebase_window

def _random_window(rng, lag, segments = 5):
    cuts = np.sort(rng.uniform(-lag, 0.0, size = segments - 1))
    return PiecewiseConstantSignal(np.concatenate([[-lag], cuts]), rng.uniform(-2.0, 2.0, size = segments), 0.0)

def _ode_prediction(A, B, z, window):
    """Reference prediction by integrating x' = A x + B u over the rebased window."""
    u = rebase_window(window)
    x = np.asarray(z, dtype = float)
    for start, end, value in zip(u.breakpoints, u.segment_ends, u.values[:, 0]):
        sol = solve_ivp(lambda t, y, v = value: A @ y + B * v, (start, end), x,
                        method = "DOP853", rtol = 1e-12, atol = 1e-13)
        x = sol.y[:, -1]
    return x

def test_matrix_exponential_at_zero_is_exactly_identity(rng):
    A = rng.normal(size = (3, 3))
    assert np.array_equal(matrix_exponential(A, 0.0), np.eye(3))

def test_matrix_exponential_of_nilpotent_and_diagonal():
    assert np.allclose(matrix_exponential([[0.0, 1.0], [0.0, 0.0]], 0.5), [[1.0, 0.5], [0.0, 1.0]], atol = 1e-14)
    assert np.allclose(matrix_exponential(np.diag([1.0, -2.0]), 0.3), np.diag(np.exp([0.3, -0.6])))

def test_matrix_exponential_semigroup(rng):
    A = 0.5 * rng.normal(size = (4, 4))
    lhs = matrix_exponential(A, 0.7)
    rhs = matrix_exponential(A, 0.3) @ matrix_exponential(A, 0.4)
    assert np.allclose(lhs, rhs, rtol = 1e-11, atol = 1e-12)

def test_input_integral_for_zero_matrix():
    out = augmented_input_integral(np.zeros((2, 2)), np.array([0.0, 1.0]), -0.5, -0.2)
    assert np.allclose(out, [0.0, 0.3], atol = 1e-15)

def test_prediction_of_zero_data_is_zero():
    plant = double_integrator()
    u = constant_signal(0.0, -0.5, 0.0)
    assert np.array_equal(lti_predict(np.zeros(2), history_window(u, 0.0, 0.5, closed = False), plant.A, plant.B), np.zeros(2))

@pytest.mark.parametrize("seed", range(100))
def test_prediction_matches_ode_solution(seed):
    rng = np.random.default_rng(seed)
    n = 1 + seed % 4
    lag = 0.5
    if seed % 3 == 0:
        # strictly upper triangular, so nilpotent
        A = np.triu(rng.normal(size = (n, n)), k = 1)
    else:
        A = rng.normal(size = (n, n))
    B = rng.normal(size = n)
    z = rng.uniform(-1.0, 1.0, size = n)
    window = history_window(_random_window(rng, lag), 0.0, lag, closed = False)
    predicted = lti_predict(z, window, A, B)
    reference = _ode_prediction(A, B, z, window)
    assert np.linalg.norm(predicted - reference) <= 1e-9 * (1.0 + np.linalg.norm(reference))

def test_control_is_gain_times_prediction(rng):
    plant = double_integrator()
    window = history_window(_random_window(rng, 0.5), 0.0, 0.5, closed = False)
    z = np.array([0.4, -0.1])
    k = np.array([-2.0, -3.0])
    assert lti_control(z, window, k, plant.A, plant.B) == pytest.approx(k @ lti_predict(z, window, plant.A, plant.B))

def test_pole_placement_on_double_integrator():
    plant = double_integrator()
    k = acker(plant.A, plant.B, [-1.0, -2.0])
    assert np.allclose(k, [-2.0, -3.0])
    assert np.allclose(np.sort(np.linalg.eigvals(plant.A + np.outer(plant.B, k)).real), [-2.0, -1.0])
    p = observer_gain(plant.A, plant.c, [-3.0, -3.0])
    assert np.allclose(p, [-6.0, -9.0])

def test_pole_placement_needs_reachability():
    A = np.diag([1.0, 2.0])
    assert np.linalg.matrix_rank(controllability_matrix(A, [1.0, 0.0])) == 1
    with pytest.raises(DomainError):
        acker(A, np.array([1.0, 0.0]), [-1.0, -2.0])
    with pytest.raises(DomainError):
        observer_gain(A, np.array([1.0, 0.0]), [-1.0, -2.0])

def test_zoh_discretization_of_double_integrator():
    plant = double_integrator()
    Ad, Bd = zoh_discretize(plant.A, plant.B, 0.5)
    assert np.allclose(Ad, [[1.0, 0.5], [0.0, 1.0]])
    assert np.allclose(Bd, [0.125, 0.5])

def test_deadbeat_gain_makes_the_sampled_loop_nilpotent():
    plant = double_integrator()
    Ad, Bd = zoh_discretize(plant.A, plant.B, 0.5)
    closed = Ad + np.outer(Bd, deadbeat_gain(plant.A, plant.B, 0.5))
    assert np.allclose(np.linalg.matrix_power(closed, 2), 0.0, atol = 1e-9)

def test_reconstruction_inverts_the_sampled_model(rng):
    plant = double_integrator()
    T, delta = 0.5, 0.25
    rec = DeadbeatReconstructor(plant.A, plant.B, plant.c, T, delta)
    X = rng.normal(size = 2)
    u = rng.normal(size = 2)
    X_next = rec.Ad @ X + rec.E * u[0] + rec.F * u[1]
    y = [plant.c @ X, plant.c @ X_next]
    assert np.allclose(rec.reconstruct(y, u), X_next, atol = 1e-12)

def test_deadbeat_settle_time():
    assert deadbeat_settle_time(2, 0.5, 0.125) == pytest.approx(2.125)

def test_deadbeat_loop_reaches_origin():
    plant = double_integrator()
    log = deadbeat_demo(plant.A, plant.B, 0.5, 12)
    settle = deadbeat_settle_time(2, 0.5, log.tau)
    late = log.t >= settle - 1e-12
    assert np.any(late)
    assert np.max(log.state_norm()[late]) <= 1e-9

def test_perturbed_deadbeat_gain_does_not_settle():
    plant = double_integrator()
    log = deadbeat_demo(plant.A, plant.B, 0.5, 12, gain_scale = 1.0 + 1e-3)
    settle = deadbeat_settle_time(2, 0.5, log.tau)
    first = np.argmax(log.t >= settle - 1e-12)
    assert log.state_norm()[first] > 1e-9

def test_deadbeat_from_rest_stays_at_rest():
    plant = double_integrator()
    log = deadbeat_demo(plant.A, plant.B, 0.5, 6, x0 = np.zeros(2))
    assert np.all(log.x == 0.0)
    assert np.all(log.u == 0.0)
