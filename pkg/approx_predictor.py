from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, TYPE_CHECKING

import numpy as np # type: ignore
from scipy.integrate import cumulative_trapezoid, solve_ivp # type: ignore

from exceptions import DimensionError, DomainError
from signals import HistoryWindow, PiecewiseConstantSignal, history_window, rebase_window, sup_norm

if TYPE_CHECKING:
    from plants import StrictFeedbackPlant

logger = logging.getLogger(__name__)

class GridFunction:
    """An n-vector valued function sampled on N+1 equally spaced nodes of [0, T]."""

    def __init__(self, values: np.ndarray, T: float):
        values = np.asarray(values, dtype = float)
        if values.ndim != 2 or values.shape[0] < 2:
            raise DimensionError("a grid function needs at least two nodes of n-vectors")
        if not T > 0:
            raise DomainError("grid length must be positive")
        if not np.all(np.isfinite(values)):
            raise DomainError("grid function values must be finite")
        self.values = values
        self.T = float(T)

    @classmethod
    def constant(cls, x0: np.ndarray, T: float, N: int) -> GridFunction:
        x0 = np.asarray(x0, dtype = float)
        return cls(np.tile(x0, (N + 1, 1)), T)

    @property
    def N(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def spacing(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)

    def end_value(self) -> np.ndarray:
        return self.values[-1].copy()

@dataclass(frozen = True)
class PredictorConfig:
    l: int
    m: int
    lag: float
    n: int
    L: float
    N: int = 64

    def __post_init__(self):
        if self.l < 1 or self.m < 1:
            raise DomainError("l and m must be at least 1")
        if self.N < 1:
            raise DomainError("need at least one quadrature interval")
        if not self.lag > 0:
            raise DomainError("prediction horizon r + tau must be positive")

    @classmethod
    def for_plant(cls, plant: StrictFeedbackPlant, l: int, m: int, N: int = 64) -> PredictorConfig:
        return cls(l = l, m = m, lag = plant.lag, n = plant.n, L = plant.L, N = N)

    @property
    def T_sub(self) -> float:
        return self.lag / self.m

    @property
    def rho(self) -> float:
        """Contraction factor (nL + 1) T of one Picard step."""
        return (self.n * self.L + 1.0) * self.T_sub

    @property
    def bound_vacuous(self) -> bool:
        return self.rho >= 1.0

def _input_integral_at(u: PiecewiseConstantSignal, times: np.ndarray) -> np.ndarray:
    """Exact running integral of a scalar step signal from 0 to each time."""
    lo = u.breakpoints[None, :]
    hi = np.minimum(u.segment_ends[None, :], times[:, None])
    return np.clip(hi - lo, 0.0, None) @ u.values[:, 0]

def _check_covers(u: PiecewiseConstantSignal, T: float) -> None:
    slack = 1e-12 * max(1.0, T)
    if u.dim != 1:
        raise DimensionError("the input must be scalar")
    if u.domain_start > slack or u.domain_end < T - slack:
        raise DomainError(f"input covers [{u.domain_start!r}, {u.domain_end!r}), need [0, {T!r})")

def picard_step(x: GridFunction, u: PiecewiseConstantSignal, plant: StrictFeedbackPlant) -> GridFunction:
    """One successive approximation x -> x(0) + int_0^t f(x) + A x + b u."""
    if x.n != plant.n:
        raise DimensionError(f"grid function has {x.n} components, plant has {plant.n}")
    _check_covers(u, x.T)

    integrand = plant.drift(x.values) + x.values @ plant.A.T
    out = cumulative_trapezoid(integrand, dx = x.spacing, axis = 0, initial = 0.0)
    out += x.values[0]
    out[:, -1] += _input_integral_at(u, x.nodes)
    return GridFunction(out, x.T)

def q_operator(
    x0: np.ndarray, u: PiecewiseConstantSignal, l: int, plant: StrictFeedbackPlant, N: int = 64,
) -> np.ndarray:
    """End value of l Picard steps started from the constant function x0 over u's domain."""
    if l < 1:
        raise DomainError("l must be at least 1")
    grid = GridFunction.constant(x0, u.domain_end, N)
    for _ in range(l):
        grid = picard_step(grid, u, plant)
    return grid.end_value()

def predict_lm(
    x: np.ndarray, u_window: PiecewiseConstantSignal, cfg: PredictorConfig, plant: StrictFeedbackPlant,
) -> np.ndarray:
    """Chain q_operator over the m equal subwindows of u, the earliest one first."""
    slack = 1e-12 * max(1.0, cfg.lag)
    if abs(u_window.domain_start) > slack or abs(u_window.domain_end - cfg.lag) > slack:
        raise DomainError(
            f"input window [{u_window.domain_start!r}, {u_window.domain_end!r}) does not span [0, {cfg.lag!r})"
        )
    state = np.asarray(x, dtype = float)
    for i in range(1, cfg.m + 1):
        sub = rebase_window(history_window(u_window, i * cfg.T_sub, cfg.T_sub, closed = False))
        state = q_operator(state, sub, cfg.l, plant, cfg.N)
    return state

def phi_lm(
    z: np.ndarray, u_history: HistoryWindow, cfg: PredictorConfig, plant: StrictFeedbackPlant,
) -> np.ndarray:
    """Approximate state r + tau ahead of the estimate z, from the input history ending at the window anchor."""
    if abs(u_history.length - cfg.lag) > 1e-12 * max(1.0, cfg.lag):
        raise DomainError(f"history window of length {u_history.length!r}, predictor horizon {cfg.lag!r}")
    return predict_lm(z, rebase_window(u_history), cfg, plant)

def error_bound(cfg: PredictorConfig, K: float, x_norm: float, u_sup: float) -> float:
    """K rho^(l+1) / (1 - rho) (|x| + sup|u|)."""
    if cfg.bound_vacuous:
        raise DomainError(f"rho = {cfg.rho:.6g} >= 1, the prediction error bound is vacuous")
    if K < 0 or x_norm < 0 or u_sup < 0:
        raise DomainError("K, |x| and sup|u| must be nonnegative")
    return K * cfg.rho ** (cfg.l + 1) / (1.0 - cfg.rho) * (x_norm + u_sup)

def oracle_flow(
    plant: StrictFeedbackPlant, x0: np.ndarray, u: PiecewiseConstantSignal,
    rtol: float = 1e-12, atol: float = 1e-12,
) -> np.ndarray:
    """Delay-free flow x' = f(x) + A x + b u over u's domain by DOP853, restarted at every step of u."""
    x = np.asarray(x0, dtype = float)
    for start, end, value in zip(u.breakpoints, u.segment_ends, u.values[:, 0]):
        def rhs(t, y, v = float(value)):
            dy = plant.drift(y) + plant.A @ y
            dy[-1] += v
            return dy
        sol = solve_ivp(rhs, (start, end), x, method = "DOP853", rtol = rtol, atol = atol)
        if not sol.success:
            raise DomainError(f"oracle integration failed: {sol.message}")
        x = sol.y[:, -1]
    return x

def random_input_window(
    rng: np.random.Generator, lag: float, scale: float, segments: int = 4,
) -> PiecewiseConstantSignal:
    cuts = np.sort(rng.uniform(0.0, lag, size = segments - 1))
    starts = np.concatenate([[0.0], cuts])
    return PiecewiseConstantSignal(starts, rng.uniform(-scale, scale, size = segments), lag)

def calibrate_K(
    cfg: PredictorConfig,
    plant: StrictFeedbackPlant,
    sample_count: int = 200,
    rng: Optional[np.random.Generator] = None,
    scale: float = 2.0,
) -> float:
    """
    Smallest K consistent with the observed prediction errors over random
    states and input windows. Samples are drawn one at a time, so a larger
    sample_count with the same seed sees a superset of samples.
    """
    if cfg.bound_vacuous:
        raise DomainError(f"rho = {cfg.rho:.6g} >= 1, K is not defined")
    rng = rng if rng is not None else np.random.default_rng(0)
    factor = (1.0 - cfg.rho) / cfg.rho ** (cfg.l + 1)
    K_hat = 0.0
    for _ in range(sample_count):
        x = rng.uniform(-scale, scale, size = plant.n)
        u = random_input_window(rng, cfg.lag, scale)
        size = np.linalg.norm(x) + sup_norm(history_window(u, cfg.lag, cfg.lag, closed = False))
        if size == 0.0:
            continue
        err = np.linalg.norm(predict_lm(x, u, cfg, plant) - oracle_flow(plant, x, u))
        K_hat = max(K_hat, err * factor / size)
    logger.debug("calibrated K = %.6g from %d samples (rho = %.4g)", K_hat, sample_count, cfg.rho)
    return K_hat
