from __future__ import annotations

import functools
import logging
from typing import Optional, Sequence, Tuple

import numpy as np # type: ignore
from scipy.linalg import expm # type: ignore

from event_kinds import EventKind
from exceptions import DimensionError, DomainError
from signals import HistoryWindow, merge_event_times, rebase_window
from simulation_log import LogRecorder, SimulationLog

logger = logging.getLogger(__name__)

def _as_square(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype = float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("A must be a square matrix")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix entries must be finite")
    return A

def matrix_exponential(A: np.ndarray, t: float) -> np.ndarray:
    """exp(A t) by scaling and squaring with Pade approximation."""
    A = _as_square(A)
    if not np.isfinite(t):
        raise DomainError("t must be finite")
    if t == 0.0:
        return np.eye(A.shape[0])
    return expm(A * t)

@functools.lru_cache(maxsize = 4096)
def _input_block(A_bytes: bytes, B_bytes: bytes, n: int, s: float) -> np.ndarray:
    A = np.frombuffer(A_bytes).reshape(n, n)
    B = np.frombuffer(B_bytes).reshape(n)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = -A
    M[:n, n] = B
    block = expm(M * s)[:n, n]
    block.setflags(write = False)
    return block

def augmented_input_integral(A: np.ndarray, B: np.ndarray, s1: float, s2: float) -> np.ndarray:
    """
    int_{s1}^{s2} exp(-A s) ds B, read off the corner of exp([[-A, B], [0, 0]] s).
    Exact for singular A.
    """
    A = _as_square(A)
    B = np.asarray(B, dtype = float).reshape(-1)
    n = A.shape[0]
    if B.shape != (n,):
        raise DimensionError(f"B has {B.size} entries, A is {n} x {n}")
    key = (np.ascontiguousarray(A).tobytes(), np.ascontiguousarray(B).tobytes(), n)
    return _input_block(*key, round(float(s2), 12)) - _input_block(*key, round(float(s1), 12))

def lti_predict(z: np.ndarray, u_history: HistoryWindow, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    exp(A (r + tau)) z + int_{-(r + tau)}^0 exp(-A s) B u(t + s) ds for the
    history window of length r + tau anchored at t.
    """
    A = _as_square(A)
    z = np.asarray(z, dtype = float)
    if z.shape != (A.shape[0],):
        raise DimensionError(f"state has {z.size} entries, A is {A.shape[0]} x {A.shape[0]}")
    lag = u_history.length
    if not lag > 0:
        raise DomainError("prediction window must have positive length")
    window = rebase_window(u_history)
    out = matrix_exponential(A, lag) @ z
    for start, end, value in zip(window.breakpoints, window.segment_ends, window.values[:, 0]):
        if value != 0.0:
            out = out + augmented_input_integral(A, B, start - lag, end - lag) * value
    return out

def lti_control(
    z: np.ndarray, u_history: HistoryWindow, k: np.ndarray, A: np.ndarray, B: np.ndarray,
) -> float:
    return float(np.asarray(k, dtype = float) @ lti_predict(z, u_history, A, B))

def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = _as_square(A)
    B = np.asarray(B, dtype = float).reshape(-1)
    columns = [B]
    for _ in range(A.shape[0] - 1):
        columns.append(A @ columns[-1])
    return np.column_stack(columns)

def acker(A: np.ndarray, B: np.ndarray, poles: Sequence[complex]) -> np.ndarray:
    """
    Ackermann pole placement for a single input. Returns k such that A + B k'
    has the given eigenvalues, so the feedback is u = k'x.
    """
    A = _as_square(A)
    n = A.shape[0]
    if len(poles) != n:
        raise DimensionError(f"{len(poles)} poles for a system of order {n}")

    ct = controllability_matrix(A, B)
    if np.linalg.matrix_rank(ct) != n:
        raise DomainError("system not reachable; pole placement invalid")

    p = np.real(np.poly(poles))
    pmat = p[n] * np.eye(n)
    for i in range(1, n + 1):
        pmat = pmat + p[n - i] * np.linalg.matrix_power(A, i)
    K = np.linalg.solve(ct, pmat)[-1, :]
    return -K

def observer_gain(A: np.ndarray, c: np.ndarray, poles: Sequence[complex]) -> np.ndarray:
    """p with eig(A + p c') = poles, by duality with acker."""
    A = _as_square(A)
    try:
        return acker(A.T, c, poles)
    except DomainError:
        raise DomainError("pair (A, c) not observable; observer pole placement invalid") from None

def zoh_discretize(A: np.ndarray, B: np.ndarray, T: float) -> Tuple[np.ndarray, np.ndarray]:
    """(exp(A T), int_0^T exp(A s) ds B) for a held input."""
    A = _as_square(A)
    if not T > 0:
        raise DomainError("sampling period must be positive")
    n = A.shape[0]
    B = np.asarray(B, dtype = float).reshape(-1)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = B
    E = expm(M * T)
    return E[:n, :n], E[:n, n]

def deadbeat_gain(A: np.ndarray, B: np.ndarray, T: float) -> np.ndarray:
    """Gain k making Ad + Bd k' nilpotent for the ZOH discretization with period T."""
    Ad, Bd = zoh_discretize(A, B, T)
    return acker(Ad, Bd, np.zeros(Ad.shape[0]))

def _flow(A: np.ndarray, B: np.ndarray, x: np.ndarray, v: float, h: float) -> np.ndarray:
    """Exact state after h seconds of the constant input v."""
    if h == 0.0:
        return x
    Ad, Bd = zoh_discretize(A, B, h)
    return Ad @ x + Bd * v

class DeadbeatReconstructor:
    """
    Recovers X(i) = x(iT - r) from the samples y_{i-p}..y_i, p = n - 1, and
    the inputs u_{i-p-1}..u_{i-1}, using the one-period map
    X(i+1) = Ad X(i) + E u_{i-1} + F u_i.
    """

    def __init__(self, A: np.ndarray, B: np.ndarray, c: np.ndarray, T: float, delta: float):
        if not 0.0 < delta < T:
            raise DomainError("need 0 < r + tau < T")
        self.A, self.B, self.c = A, B, np.asarray(c, dtype = float)
        self.T, self.delta = T, delta
        n = A.shape[0]
        self.p = n - 1
        self.Ad = matrix_exponential(A, T)
        _, psi_delta = zoh_discretize(A, B, delta)
        _, psi_rest = zoh_discretize(A, B, T - delta)
        self.E = matrix_exponential(A, T - delta) @ psi_delta
        self.F = psi_rest
        self.O = np.vstack([self.c @ np.linalg.matrix_power(self.Ad, k) for k in range(n)])
        if np.linalg.matrix_rank(self.O) != n:
            raise DomainError("sampled pair (Ad, c) is not observable")

    def reconstruct(self, y: Sequence[float], u: Sequence[float]) -> np.ndarray:
        """`y` holds y_{i-p}..y_i, `u` holds u_{i-p-1}..u_{i-1}."""
        p = self.p
        if len(y) != p + 1 or len(u) != p + 1:
            raise DimensionError(f"need {p + 1} samples and {p + 1} inputs")
        forced = np.zeros_like(self.E)
        rhs = [y[0]]
        for k in range(1, p + 1):
            forced = self.Ad @ forced + self.E * u[k - 1] + self.F * u[k]
            rhs.append(y[k] - self.c @ forced)
        X_old = np.linalg.solve(self.O, np.asarray(rhs))
        return np.linalg.matrix_power(self.Ad, p) @ X_old + forced

    def predict(self, X: np.ndarray, u_prev: float) -> np.ndarray:
        """x(iT + tau) from X(i) = x(iT - r) while u_{i-1} still acts."""
        _, psi_delta = zoh_discretize(self.A, self.B, self.delta)
        return matrix_exponential(self.A, self.delta) @ X + psi_delta * u_prev

def deadbeat_settle_time(n: int, T: float, tau: float) -> float:
    """Time after which the dead-beat loop holds the state at the origin."""
    p = n - 1
    return (p + 1 + n) * T + tau

def deadbeat_demo(
    A: np.ndarray,
    B: np.ndarray,
    T: float,
    horizon_steps: int,
    c: Optional[np.ndarray] = None,
    r: Optional[float] = None,
    tau: Optional[float] = None,
    x0: Optional[np.ndarray] = None,
    u0: float = 0.0,
    gain_scale: float = 1.0,
) -> SimulationLog:
    """
    Sampled loop with exact reconstruction, exact prediction over r + tau and
    the dead-beat gain of the ZOH model. One log row per holding instant iT.
    Inputs before the reconstruction has enough samples are zero.
    """
    A = _as_square(A)
    B = np.asarray(B, dtype = float).reshape(-1)
    n = A.shape[0]
    c = np.eye(n)[0] if c is None else np.asarray(c, dtype = float)
    r = T / 4.0 if r is None else float(r)
    tau = T / 4.0 if tau is None else float(tau)
    x = np.ones(n) if x0 is None else np.asarray(x0, dtype = float)
    x_start = x.copy()
    if horizon_steps < 1:
        raise DomainError("need at least one step")

    if np.linalg.matrix_rank(controllability_matrix(A, B)) != n:
        raise DomainError("system not reachable; no dead-beat gain")
    k = deadbeat_gain(A, B, T) * gain_scale
    rec = DeadbeatReconstructor(A, B, c, T, r + tau)
    logger.debug("dead-beat gain %s, reconstruction order p = %d", k, rec.p)

    horizon = horizon_steps * T
    steps = range(horizon_steps + 1)
    samples = [i * T - r for i in steps if i * T - r >= 0.0]
    holds = [i * T for i in steps]
    switches = [j * T + tau for j in steps if j * T + tau < horizon]
    times = merge_event_times([samples, holds, switches], tol = 1e-12 * max(1.0, horizon))

    y: dict = {}
    u: dict = {}
    recorder = LogRecorder(n)
    t_prev = 0.0
    for t in times:
        mid = 0.5 * (t_prev + t)
        if t > t_prev:
            j = int(np.floor((mid - tau) / T))
            x = _flow(A, B, x, u0 if j < 0 else u[j], t - t_prev)
        t_prev = t

        i_sample = int(round((t + r) / T))
        if abs(i_sample * T - r - t) <= 1e-9 * T:
            y[i_sample] = float(c @ x)
        i_hold = int(round(t / T))
        if abs(i_hold * T - t) <= 1e-9 * T:
            i = i_hold
            X = np.zeros(n)
            if i >= rec.p + 1:
                X = rec.reconstruct(
                    [y[q] for q in range(i - rec.p, i + 1)],
                    [u[q] for q in range(i - rec.p - 1, i)],
                )
                u[i] = float(k @ rec.predict(X, u[i - 1]))
            else:
                u[i] = 0.0
            recorder.record(t, x, X, y.get(i, float(c @ x)), u[i], np.zeros(n), 0.0, [EventKind.HOLD])
    return recorder.to_log(r = r, tau = tau, x_initial = x_start, u_initial_sup = abs(u0), name = "deadbeat")
