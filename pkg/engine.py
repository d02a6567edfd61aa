from __future__ import annotations

import bisect
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np # type: ignore

from controller_kinds import ControllerKind, PlantKind
from controllers import build_controller
from event_kinds import EventKind
from exceptions import BlowUp, ConfigError, DomainError, InvariantViolation
from gains import certify_growth_envelope, gamma_const
from loader_functions.initialize_scenario import get_constants
from loader_functions.plant_init import build_plant
from loader_functions.random_utils import build_signal
from message_log import ERROR, INFO, WARNING, MessageLog
from observer import coupled_field, energy_bound_check
from plants import feedforward_rhs, growth_envelope, lti_rhs
from scenario import Scenario
from signals import generate_schedule, zoh_extend
from simulation_log import LogRecorder, SimulationLog

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]

@dataclass
class StatePath:
    """Nodes of one event-free integration segment with the slopes at both ends of every step."""
    times: np.ndarray
    states: np.ndarray
    start_slopes: np.ndarray
    end_slopes: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].copy()

def integrate_segment(rhs: Rhs, state: np.ndarray, t0: float, t1: float, h: float) -> StatePath:
    """Classical fourth-order Runge-Kutta with fixed step h; the last step is shortened to end at t1."""
    if not t1 > t0:
        raise DomainError(f"empty segment [{t0!r}, {t1!r}]")
    if not h > 0:
        raise DomainError("step must be positive")
    count = max(1, math.ceil((t1 - t0) / h - 1e-9))
    times = t0 + h * np.arange(count + 1)
    times[-1] = t1

    y = np.asarray(state, dtype = float).copy()
    states = np.empty((count + 1, y.size))
    start_slopes = np.empty((count, y.size))
    end_slopes = np.empty((count, y.size))
    states[0] = y
    for k in range(count):
        t, step = times[k], times[k + 1] - times[k]
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * step, y + 0.5 * step * k1)
        k3 = rhs(t + 0.5 * step, y + 0.5 * step * k2)
        k4 = rhs(t + step, y + step * k3)
        y = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise BlowUp(float(times[k + 1]))
        states[k + 1] = y
        start_slopes[k] = k1
        end_slopes[k] = k4
    return StatePath(times, states, start_slopes, end_slopes)

class DenseHistory:
    """
    Plant state for delayed reads: the constant initial history before
    `start`, cubic Hermite interpolation inside every stored step after it.
    """

    def __init__(self, x_initial: np.ndarray, start: float = 0.0):
        self.x_initial = np.asarray(x_initial, dtype = float)
        self.start = start
        self._t0: List[float] = []
        self._steps: List[Tuple[float, float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []

    def append(self, path: StatePath, n: int) -> None:
        for k in range(path.times.size - 1):
            self._t0.append(float(path.times[k]))
            self._steps.append((
                float(path.times[k]), float(path.times[k + 1]),
                path.states[k, :n], path.states[k + 1, :n],
                path.start_slopes[k, :n], path.end_slopes[k, :n],
            ))

    @property
    def end(self) -> float:
        return self._steps[-1][1] if self._steps else self.start

    def __call__(self, t: float) -> np.ndarray:
        if t <= self.start:
            return self.x_initial.copy()
        if t > self.end * (1.0 + 1e-12) + 1e-12:
            raise DomainError(f"delayed read at t = {t!r} beyond the integrated path ({self.end!r})")
        k = max(0, bisect.bisect_right(self._t0, t) - 1)
        t0, t1, y0, y1, s0, s1 = self._steps[k]
        h = t1 - t0
        s = min(1.0, (t - t0) / h)
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        return h00 * y0 + h10 * h * s0 + h01 * y1 + h11 * h * s1

def event_table(groups: Dict[EventKind, Iterable[float]], tol: float) -> List[Tuple[float, List[EventKind]]]:
    """
    Sorted event instants with the kinds that fall on each. Instants closer
    than `tol` are one event; its time is the holding instant when there is
    one, otherwise the earliest instant of the cluster.
    """
    tagged = sorted(
        ((float(t), kind) for kind, times in groups.items() for t in times),
        key = lambda item: (item[0], item[1].value),
    )
    table: List[Tuple[float, List[EventKind]]] = []
    cluster: List[Tuple[float, EventKind]] = []

    def close():
        kinds = sorted({kind for _, kind in cluster}, key = lambda k: k.value)
        holds = [t for t, kind in cluster if kind is EventKind.HOLD]
        table.append((holds[0] if holds else cluster[0][0], kinds))

    for t, kind in tagged:
        if cluster and t - cluster[0][0] > tol:
            close()
            cluster = []
        cluster.append((t, kind))
    if cluster:
        close()
    return table

class Engine:
    """Owns the mutable state of one closed-loop run."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario.validate()
        self.message_log = MessageLog()
        self.constants = get_constants()

        self.plant = build_plant(scenario.plant, scenario.r, scenario.tau, scenario.T2)
        self.controller = build_controller(scenario, self.plant, self.message_log)
        self.observer = self.controller.observer
        self.kind = scenario.plant_kind
        n = self.plant.n

        self.d = build_signal(scenario.d, n, scenario.seed)
        self.xi = build_signal(scenario.xi, 1, scenario.seed + 1)
        self.b = build_signal(scenario.b, 1, scenario.seed + 2, nonnegative = True)
        if self.kind is PlantKind.FEEDFORWARD and not self.d.is_zero:
            raise ConfigError("the feedforward plant has no disturbance channel")

        self.u_signal = scenario.initial_input()
        self.x_initial = scenario.initial_state()
        self.history = DenseHistory(self.x_initial)
        self.recorder = LogRecorder(n)

    @property
    def n(self) -> int:
        return self.plant.n

    def _plant_rhs(self, x: np.ndarray, v: float, d: np.ndarray) -> np.ndarray:
        if self.kind is PlantKind.LTI:
            return lti_rhs(self.plant, x, v, d)
        return feedforward_rhs(x, v)

    def _output(self, x: np.ndarray):
        if self.observer is not None:
            return self.observer.output(x)
        return self.plant.output(x)

    def _applied_input(self, t: float) -> float:
        u = self.u_signal
        return u(t) if t < u.domain_end else u.left_limit(u.domain_end)

    def schedule(self) -> Dict[EventKind, List[float]]:
        sc = self.scenario
        holds = []
        t = 0.0
        while t < sc.horizon:
            holds.append(t)
            t = t + sc.T2

        if sc.controller_kind is ControllerKind.EXACT_FF:
            samples = list(holds)
        else:
            times = generate_schedule(sc.T1, self.b, sc.horizon, self.constants['max_events']).times
            samples = [s for s in times if s <= sc.horizon]

        reads = [sc.tau] + ([sc.r + sc.tau] if self.observer is not None else [])
        starts = [-sc.input_history_length] + holds
        breaks = [s + lag for s in starts for lag in reads if 0.0 < s + lag < sc.horizon]
        breaks.extend(self.d.breakpoints(0.0, sc.horizon))
        breaks.append(sc.horizon)
        return {EventKind.SAMPLE: samples, EventKind.HOLD: holds, EventKind.BREAK: breaks}

    def _record(self, t: float, Y: np.ndarray, kinds = ()) -> None:
        n = self.n
        z, w = self.controller.estimate(Y[n:])
        self.recorder.record(
            t, Y[:n], z, w, self._applied_input(t), self.d.vector(t), self.xi(t), kinds,
        )

    def _flow(self, Y: np.ndarray, t0: float, t1: float) -> np.ndarray:
        sc = self.scenario
        n = self.n
        mid = 0.5 * (t0 + t1)
        v_plant = self.u_signal(mid - sc.tau)
        u_now = self.u_signal(mid)
        v_obs = self.u_signal(mid - sc.r - sc.tau) if self.observer is not None else 0.0
        d_zero = self.d.is_zero

        if self.kind is PlantKind.STRICT_FEEDBACK:
            disturbance = None if d_zero else (
                lambda t, x: self.plant.disturbance_gains(x, u_now) * self.d.vector(t)
            )
            rhs = coupled_field(self.plant, self.observer.gains, v_plant, v_obs, disturbance)
        else:
            def rhs(t, y):
                d = np.zeros(n) if d_zero else self.d.vector(t)
                dx = self._plant_rhs(y[:n], v_plant, d)
                if self.observer is None:
                    return dx
                return np.concatenate([dx, self.observer.flow(y[n:], v_obs)])

        path = integrate_segment(rhs, Y, t0, t1, sc.integration_step)
        self.history.append(path, n)
        for k in range(1, path.times.size - 1):
            self._record(float(path.times[k]), path.states[k])
        return path.final

    def run_closed_loop(self) -> SimulationLog:
        sc = self.scenario
        n = self.n
        Y = self.x_initial.copy()
        if self.observer is not None:
            Y = np.concatenate([Y, self.controller.initial_estimate(sc.z0, sc.w0)])

        table = event_table(self.schedule(), self.constants['event_merge_tol'])
        logger.debug("%s: %d events up to t = %g", sc.name, len(table), sc.horizon)
        sample_index = 0
        hold_index = 0
        t = 0.0
        for t_event, kinds in table:
            if t_event > t:
                Y = self._flow(Y, t, t_event)
                t = t_event
            self._record(t, Y, kinds)

            if EventKind.SAMPLE in kinds:
                y = self._output(self.history(t - sc.measurement_delay)) + self.xi(t)
                if self.observer is not None and sample_index > 0:
                    Y[n:] = self.observer.jump(Y[n:], y)
                self.controller.on_sample(sample_index, t, y)
                sample_index += 1

            if EventKind.HOLD in kinds:
                if t != self.u_signal.domain_end:
                    raise InvariantViolation(
                        f"holding instant {t!r} is not aligned with the input end {self.u_signal.domain_end!r}"
                    )
                zw = Y[n:] if self.observer is not None else None
                u = self.controller.perform(hold_index, t, zw, self.u_signal)
                self.u_signal = zoh_extend(self.u_signal, u, sc.T2)
                hold_index += 1

            self._record(t, Y, kinds)

        log = self.recorder.to_log(
            r = sc.r, tau = sc.tau, x_initial = self.x_initial, u_initial_sup = abs(sc.u0),
            name = sc.name, message_log = self.message_log,
        )
        logger.info("%s: %d rows, %d samples, %d holds", sc.name, log.rows, sample_index, hold_index)
        if sc.checks:
            self.check(log)
        return log

    def check(self, log: SimulationLog) -> None:
        """Runtime assertions on a finished log; error-level failures raise InvariantViolation."""
        if self.kind is not PlantKind.STRICT_FEEDBACK:
            return
        sc = self.scenario
        slack = self.constants['growth_slack']

        worst = check_growth_envelope(log, self.plant)
        if worst < -slack:
            self.message_log.add_message(f"plant growth envelope violated, log-margin {worst:.3g}", ERROR)

        gains = self.observer.gains
        ok, margin = energy_bound_check(log, self.plant, gains, sc.T1, self.b.sup_bound())
        if not ok:
            self.message_log.add_message(f"observer energy bound violated, log-margin {margin:.3g}", ERROR)

        cfg = self.controller.cfg
        if cfg.bound_vacuous or sc.K_hat is None:
            self.message_log.add_message("closed-loop growth bound vacuous (rho >= 1 or no measured K)", INFO)
        else:
            Gamma = gamma_const(sc.K_hat, cfg.rho, cfg.l, self.plant.n, self.plant.L, self.plant.lag)
            ok, margin = certify_growth_envelope(
                log, self.plant, Gamma, gains.theta, gains.p, sc.T1, sc.T2, self.b.sup_bound(),
            )
            if not ok:
                self.message_log.add_message(f"closed-loop growth bound fails, log-margin {margin:.3g}", WARNING)

        errors = self.message_log.errors()
        if errors:
            raise InvariantViolation("; ".join(m.plain_text for m in errors))

def check_growth_envelope(log: SimulationLog, plant) -> float:
    """Smallest log-margin of |x(t)| against the forward-completeness envelope; inf when it always holds."""
    x_norm = log.state_norm()
    d_sup = np.maximum.accumulate(np.linalg.norm(log.d, axis = 1))
    u_sup = np.maximum(np.maximum.accumulate(np.abs(log.u)), log.u_initial_sup)
    worst = math.inf
    for k in range(log.rows):
        if x_norm[k] == 0.0:
            continue
        try:
            bound = growth_envelope(plant, log.x_initial_sup, float(d_sup[k]), float(u_sup[k]), float(log.t[k]))
        except OverflowError:
            continue
        worst = min(worst, math.log(bound) - math.log(x_norm[k]) if bound > 0 else -math.inf)
    return worst

def run_closed_loop(scenario: Scenario) -> SimulationLog:
    return Engine(scenario).run_closed_loop()

def batch_run(scenarios: Sequence[Scenario], workers: Optional[int] = None) -> List[SimulationLog]:
    """Independent runs in a process pool, logs returned in scenario order."""
    if workers == 1 or len(scenarios) <= 1:
        return [run_closed_loop(sc) for sc in scenarios]
    with ProcessPoolExecutor(max_workers = workers) as pool:
        return list(pool.map(run_closed_loop, scenarios))

def iss_sweep(
    scenario: Scenario, amplitudes: Sequence[float], window: Tuple[float, float] = (15.0, 20.0),
    workers: Optional[int] = None,
) -> List[Tuple[float, float]]:
    """Steady-state sup norm over `window` for the disturbance spec scaled by each amplitude."""
    runs = []
    for a in amplitudes:
        spec = dict(scenario.d)
        for key in ("value", "amplitude"):
            if key in spec:
                spec[key] = (np.asarray(spec[key], dtype = float) * a).tolist()
        runs.append(scenario.replace(d = spec, name = f"{scenario.name}-d{a:g}"))
    logs = batch_run(runs, workers)
    return [(a, log.sup_norm(*window)) for a, log in zip(amplitudes, logs)]
