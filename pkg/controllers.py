from __future__ import annotations

import logging
from typing import List, Optional, Tuple, TYPE_CHECKING

import numpy as np # type: ignore

from approx_predictor import PredictorConfig, phi_lm
from controller_kinds import ControllerKind, OutputCase
from exact_predictor import FeedforwardGains, control_step, reconstruct_latest, required_samples
from exceptions import ConfigError, HistoryUnderflow
from lti import lti_control
from message_log import INFO
from observer import Observer, ObserverGains
from signals import PiecewiseConstantSignal, history_window

if TYPE_CHECKING:
    from message_log import MessageLog
    from plants import FeedforwardPlant, LtiPlant, StrictFeedbackPlant
    from scenario import Scenario

logger = logging.getLogger(__name__)

class Controller:
    """A sampled controller block driven by the engine at sampling and holding instants."""

    kind: ControllerKind
    observer: Optional[Observer] = None

    def __init__(self, plant, message_log: Optional[MessageLog] = None) -> None:
        self.plant = plant
        self.message_log = message_log

    @property
    def n(self) -> int:
        return self.plant.n

    def initial_estimate(self, z0, w0: float) -> np.ndarray:
        """Stacked (z, w) the engine integrates alongside the plant."""
        return np.append(np.asarray(z0, dtype = float), float(w0))

    def on_sample(self, index: int, t: float, y) -> None:
        """Measurement y taken at the sampling instant t (index 0 is t = 0)."""

    def estimate(self, zw: np.ndarray) -> Tuple[np.ndarray, float]:
        """The (z, w) columns logged for the current observer state."""
        return zw[:-1], float(zw[-1])

    def perform(self, index: int, t: float, zw: np.ndarray, u_signal: PiecewiseConstantSignal) -> float:
        """Compute u_index, held on [t, t + T2).

        `zw` is the observer state at t after any jump at t, `u_signal` the
        applied input known up to t.

        This method must be overridden by Controller subclasses.
        """
        raise NotImplementedError()

class ObserverPredictorController(Controller):
    def __init__(self, plant, k, gains: ObserverGains, message_log: Optional[MessageLog] = None):
        super().__init__(plant, message_log)
        self.k = np.asarray(k, dtype = float)
        if self.k.shape != (plant.n,):
            raise ConfigError(f"gain k must have {plant.n} entries")
        self.observer = Observer(plant, gains)

    def _window(self, t: float, u_signal: PiecewiseConstantSignal):
        if abs(u_signal.domain_end - t) > 1e-9 * max(1.0, abs(t)):
            raise HistoryUnderflow(f"input known up to {u_signal.domain_end!r}, controller runs at {t!r}")
        return history_window(u_signal, u_signal.domain_end, self.plant.lag, closed = False)

class ApproxPredictorController(ObserverPredictorController):
    """u = k' Phi_lm(z(iT2), input history over the last r + tau)."""

    kind = ControllerKind.APPROX_LIPSCHITZ

    def __init__(
        self, plant: StrictFeedbackPlant, k, gains: ObserverGains, cfg: PredictorConfig,
        message_log: Optional[MessageLog] = None,
    ):
        super().__init__(plant, k, gains, message_log)
        self.cfg = cfg
        if cfg.bound_vacuous and message_log is not None:
            message_log.add_message(
                f"rho = {cfg.rho:.4g} >= 1: the prediction error bound is vacuous", INFO,
            )

    def perform(self, index, t, zw, u_signal):
        return float(self.k @ phi_lm(zw[:-1], self._window(t, u_signal), self.cfg, self.plant))

class LtiPredictorController(ObserverPredictorController):
    """u = k' (exp(A (r + tau)) z + input convolution over the last r + tau)."""

    kind = ControllerKind.LTI_EXACT

    def __init__(self, plant: LtiPlant, k, gains: ObserverGains, message_log: Optional[MessageLog] = None):
        super().__init__(plant, k, gains, message_log)

    def perform(self, index, t, zw, u_signal):
        return lti_control(zw[:-1], self._window(t, u_signal), self.k, self.plant.A, self.plant.B)

class ExactFeedforwardController(Controller):
    """
    Reconstruct x(iT - r) from the last samples, predict r + tau ahead in
    closed form and apply the saturated nominal feedback.
    """

    kind = ControllerKind.EXACT_FF

    def __init__(
        self, plant: FeedforwardPlant, gains: FeedforwardGains, warmup: Optional[float] = 0.0,
        message_log: Optional[MessageLog] = None,
    ):
        super().__init__(plant, message_log)
        self.gains = gains
        self.warmup = warmup
        self.y: List = []
        self.u: List[float] = []
        self.latest = np.zeros(plant.n)

    def on_sample(self, index, t, y):
        if index != len(self.y):
            raise HistoryUnderflow(f"sample {index} arrived with {len(self.y)} samples stored")
        self.y.append(y)

    def estimate(self, zw):
        y = self.y[-1] if self.y else 0.0
        return self.latest, float(np.atleast_1d(y)[0])

    def perform(self, index, t, zw, u_signal):
        plant = self.plant
        if index < required_samples(plant.output_case) and self.message_log is not None:
            self.message_log.add_message(f"warm-up input {self.warmup!r} while samples accumulate", INFO)
        u = control_step(
            self.y[:index + 1], self.u, plant.T, plant.delta, self.gains,
            plant.output_case, self.warmup, plant.eps,
        )
        if index >= required_samples(plant.output_case):
            self.latest = reconstruct_latest(
                self.y[:index + 1], self.u, plant.T, plant.delta, plant.output_case,
                plant.eps if plant.eps is not None else self.gains.eps,
            )
        self.u.append(u)
        return u

def build_controller(scenario: Scenario, plant, message_log: Optional[MessageLog] = None) -> Controller:
    kind = scenario.controller_kind
    if kind is ControllerKind.EXACT_FF:
        gains = FeedforwardGains(**scenario.ff_gains)
        if plant.output_case is OutputCase.ONE_OUTPUT and gains.eps is None:
            gains = FeedforwardGains(**scenario.ff_gains, eps = plant.eps)
        return ExactFeedforwardController(plant, gains, scenario.warmup, message_log)

    observer_gains = ObserverGains(scenario.theta, scenario.p)
    if kind is ControllerKind.LTI_EXACT:
        return LtiPredictorController(plant, scenario.k, observer_gains, message_log)
    cfg = PredictorConfig.for_plant(plant, scenario.l, scenario.m, scenario.N)
    return ApproxPredictorController(plant, scenario.k, observer_gains, cfg, message_log)
