from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, TYPE_CHECKING

import numpy as np # type: ignore

from exceptions import DimensionError, DomainError
from gains import omega

if TYPE_CHECKING:
    from plants import StrictFeedbackPlant
    from simulation_log import SimulationLog

logger = logging.getLogger(__name__)

@dataclass(frozen = True)
class ObserverState:
    """Estimate z of x(t - r) and the inter-sample output estimate w of x_1(t - r)."""
    z: np.ndarray
    w: float

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype = float))
        if not (np.all(np.isfinite(self.z)) and math.isfinite(self.w)):
            raise DomainError("observer state must be finite")

    def as_vector(self) -> np.ndarray:
        return np.append(self.z, self.w)

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> ObserverState:
        return cls(vector[:-1], float(vector[-1]))

@dataclass(frozen = True)
class ObserverGains:
    theta: float
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype = float).reshape(-1))
        if self.theta < 1.0:
            raise DomainError("observer gain theta must be at least 1")

    def scaled(self) -> np.ndarray:
        """theta^i p_i for i = 1..n."""
        return self.theta ** np.arange(1, self.p.size + 1) * self.p

def observer_flow(
    state: ObserverState, u_delayed: float, plant: StrictFeedbackPlant, gains: ObserverGains,
) -> np.ndarray:
    """Derivatives (z', w') of the high-gain observer between two samples."""
    z = state.z
    if z.shape != (plant.n,) or gains.p.shape != (plant.n,):
        raise DimensionError(f"observer state and gain must have {plant.n} components")
    copy = plant.drift(z) + plant.A @ z
    w_dot = copy[0] + (u_delayed if plant.n == 1 else 0.0)
    z_dot = copy + gains.scaled() * (z[0] - state.w)
    z_dot[-1] += u_delayed
    return np.append(z_dot, w_dot)

def coupled_field(
    plant: StrictFeedbackPlant,
    gains: ObserverGains,
    v_plant: float,
    v_obs: float,
    disturbance: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
) -> Callable[[float, np.ndarray], np.ndarray]:
    """
    Right-hand side of the plant stacked with its observer, y = (x, z, w), on
    one event-free segment where both delayed inputs are constant. Plant and
    observer drifts share one vectorised evaluation.
    """
    n = plant.n
    A_T = plant.A.T
    gain = gains.scaled()
    w_input = v_obs if n == 1 else 0.0

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        xz = y[:2 * n].reshape(2, n)
        both = plant.drift(xz) + xz @ A_T
        out = np.empty(2 * n + 1)
        out[:n] = both[0]
        out[n - 1] += v_plant
        if disturbance is not None:
            out[:n] += disturbance(t, y[:n])
        out[n:2 * n] = both[1] + gain * (y[n] - y[2 * n])
        out[2 * n - 1] += v_obs
        out[2 * n] = both[1, 0] + w_input
        return out

    return rhs

def observer_jump(state: ObserverState, y_sample: float) -> ObserverState:
    return ObserverState(state.z, float(y_sample))

def lti_observer_flow(
    z: np.ndarray, w: float, u_delayed: float,
    A: np.ndarray, B: np.ndarray, c: np.ndarray, p: np.ndarray,
) -> np.ndarray:
    z = np.asarray(z, dtype = float)
    n = A.shape[0]
    if z.shape != (n,) or B.shape != (n,) or c.shape != (n,) or np.shape(p) != (n,):
        raise DimensionError(f"observer vectors must have {n} components")
    z_dot = A @ z + B * u_delayed + np.asarray(p) * (c @ z - w)
    w_dot = c @ A @ z + (c @ B) * u_delayed
    return np.append(z_dot, w_dot)

class Observer:
    """
    The observer block driven by the engine: one flow and one jump map over
    the stacked vector (z, w), for either plant family.
    """

    def __init__(self, plant, gains: ObserverGains):
        self.plant = plant
        self.gains = gains
        self.linear = not hasattr(plant, "drift")
        if gains.p.shape != (plant.n,):
            raise DimensionError(f"observer gain has {gains.p.size} entries, plant has {plant.n} states")

    @property
    def n(self) -> int:
        return self.plant.n

    def output(self, x: np.ndarray) -> float:
        """The measured quantity of a plant state."""
        return float(self.plant.c @ x) if self.linear else float(x[0])

    def flow(self, zw: np.ndarray, u_delayed: float) -> np.ndarray:
        if self.linear:
            plant = self.plant
            return lti_observer_flow(
                zw[:-1], zw[-1], u_delayed, plant.A, plant.B, plant.c, self.gains.p,
            )
        return observer_flow(ObserverState.from_vector(zw), u_delayed, self.plant, self.gains)

    def jump(self, zw: np.ndarray, y_sample: float) -> np.ndarray:
        out = np.array(zw, dtype = float)
        out[-1] = y_sample
        return out

def estimation_error(log: SimulationLog, r: float) -> np.ndarray:
    """|z(t) - x(t - r)| along the log rows; x before the first row comes from the initial history."""
    t = log.t
    delayed = np.empty_like(log.x)
    for i in range(log.n):
        delayed[:, i] = np.interp(t - r, t, log.x[:, i], left = np.nan)
    before = t - r < t[0]
    delayed[before] = log.x_initial
    return np.linalg.norm(log.z - delayed, axis = 1)

def _running_sup(values: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(values) if values.size else values

def energy_bound_check(
    log: SimulationLog,
    plant: StrictFeedbackPlant,
    gains: ObserverGains,
    T1: float,
    b_sup: float = 0.0,
) -> Tuple[bool, float]:
    """
    Check |z|^2 + w^2 <= exp(2 omega t) (|z0|^2 + w0^2 + (sup|x(s - r)| + sup|xi|)^2
    / (1 - exp(-2 omega T1 exp(-b_sup))) + sup|u(s - r - tau)|^2 / (2 omega)) on every row.

    Returns whether it holds and the smallest log-margin (log right side minus
    log left side); rows with a zero left side do not count.
    """
    om = omega(plant.n, plant.L, gains.theta, gains.p)
    t = log.t
    if t.size == 0:
        return True, math.inf

    lhs = np.sum(log.z ** 2, axis = 1) + log.w ** 2
    z0w0 = lhs[0]

    x_norm = np.linalg.norm(log.x, axis = 1)
    x_sup = np.empty_like(t)
    x_running = _running_sup(x_norm)
    delayed_idx = np.searchsorted(t, t - log.r, side = "right") - 1
    for k, j in enumerate(delayed_idx):
        x_sup[k] = max(log.x_initial_sup, x_running[j] if j >= 0 else 0.0)
    xi_sup = _running_sup(np.abs(log.xi))

    u_abs = np.abs(log.u)
    lag = log.r + log.tau
    u_running = _running_sup(u_abs)
    u_idx = np.searchsorted(t, t - lag, side = "left") - 1
    u_sup = np.array([
        max(log.u_initial_sup, u_running[j] if j >= 0 else 0.0) for j in u_idx
    ])

    denominator = -math.expm1(-2.0 * om * T1 * math.exp(-b_sup))
    bracket = z0w0 + (x_sup + xi_sup) ** 2 / denominator + u_sup ** 2 / (2.0 * om)

    positive = lhs > 0.0
    if not np.any(positive):
        return True, math.inf
    with np.errstate(divide = "ignore"):
        margin = 2.0 * om * t + np.log(bracket) - np.log(lhs)
    worst = float(np.min(margin[positive]))
    slack = 1e-9
    if worst < -slack:
        logger.warning("observer energy bound fails, worst log-margin %.3g", worst)
    return worst >= -slack, worst
