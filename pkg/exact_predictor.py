from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np # type: ignore

from controller_kinds import OutputCase
from exceptions import DomainError, HistoryUnderflow
from plants import saturation
from signals import PiecewiseConstantSignal

logger = logging.getLogger(__name__)

def _check_delta(T: float, delta: float) -> None:
    if not (T > 0 and 0.0 < delta < T):
        raise DomainError(f"need 0 < delta < T, got delta={delta!r}, T={T!r}")

@dataclass(frozen = True)
class TransitionCoeffs:
    """
    Input-dependent coefficients of the one-period transition map of the
    feedforward plant when the first `delta` seconds of the period see u1 and
    the rest see u2.
    """
    T: float
    delta: float

    def __post_init__(self):
        _check_delta(self.T, self.delta)

    @property
    def rest(self) -> float:
        return self.T - self.delta

    def Q1(self, u1: float, u2: float) -> float:
        return self.delta * u1 + self.rest * u2

    def Q2(self, u1: float, u2: float) -> float:
        d, s = self.delta, self.rest
        return 0.5 * d * d * u1 + d * s * u1 + 0.5 * s * s * u2

    def G2(self, u1: float, u2: float) -> float:
        d, s = self.delta, self.rest
        return self.Q2(u1, u2) + 0.5 * d * d * u1 * u1 + d * s * u1 * u2 + 0.5 * s * s * u2 * u2

    def G3(self, u1: float, u2: float) -> float:
        T, d, s = self.T, self.delta, self.rest
        return (
            0.5 * d * (T * T - T * d + d * d / 3.0) * u1
            + u2 * s ** 3 / 6.0
            + 1.5 * d * d * (T - 2.0 * d / 3.0) * u1 * u1
            + 3.0 * u1 * u2 * d * s * s / 2.0
            + u2 * u2 * s ** 3 / 2.0
        )

    def B(self, u1: float, u2: float) -> float:
        return -3.0 * self.Q2(u1, u2) / self.T + self.Q1(u1, u2) + 0.5 * self.T

    def C(self, u1: float, u2: float) -> float:
        return self.G2(u1, u2) - self.G3(u1, u2) / self.T

    def P4(self, u1: float, u2: float, v1: float, v2: float) -> float:
        """Input part of the second difference of x_3 over two periods."""
        T = self.T
        q1 = self.Q1(u1, u2)
        return (
            self.G3(v1, v2) - self.G3(u1, u2) + T * self.G2(u1, u2)
            + 0.5 * (T * T + 6.0 * self.Q2(v1, v2)) * q1
            + T * q1 * q1
        )

    def P4_printed(self, u1: float, u2: float, v1: float, v2: float) -> float:
        """The correction term with the signs as originally typeset; kept for comparison only."""
        T = self.T
        q1 = self.Q1(u1, u2)
        return (
            self.G3(v1, v2) - self.G3(u1, u2) + T * self.G2(u1, u2)
            - 0.5 * (T * T + 6.0 * self.Q2(v1, v2)) * q1
            - T * q1 * q1
        )

    def D(self, u1: float, u2: float, v1: float, v2: float) -> float:
        T = self.T
        return T * T + 3.0 * T * self.Q1(u1, u2) + 3.0 * self.Q2(v1, v2) - 3.0 * self.Q2(u1, u2)

@dataclass(frozen = True)
class FeedforwardGains:
    K0: float
    K1: float
    K2: float
    R1: float
    R2: float
    eps: Optional[float] = None

    def __post_init__(self):
        if min(self.K0, self.K1, self.K2, self.R1, self.R2) <= 0:
            raise DomainError("feedforward gains must be positive")
        if self.eps is not None and self.input_bound > self.eps * (1.0 + 1e-12):
            raise DomainError(
                f"gains allow |k(x)| up to {self.input_bound:g}, above eps = {self.eps:g}"
            )

    @property
    def input_bound(self) -> float:
        return max(self.K0, self.R1 + self.K1, 2.0 * self.R2 + self.K2)

def _constant_input_flow(x: np.ndarray, v: float, h: float) -> np.ndarray:
    """Closed-form flow of the feedforward plant for h seconds under the constant input v."""
    x1, x2, x3 = x
    return np.array([
        x1 + v * h,
        x2 + (1.0 + v) * (x1 * h + 0.5 * v * h * h),
        x3 + x2 * h + (1.0 + v) * (0.5 * x1 * h * h + v * h ** 3 / 6.0)
        + x1 * x1 * h + x1 * v * h * h + v * v * h ** 3 / 3.0,
    ])

def solution_map(t: float, x: np.ndarray, u: PiecewiseConstantSignal) -> np.ndarray:
    """State of the delay-free feedforward plant after t seconds, input u read on [0, t)."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    x = np.asarray(x, dtype = float)
    if t == 0.0:
        return x.copy()
    if u.domain_start > 0.0 or u.domain_end < t:
        raise DomainError(f"input covers [{u.domain_start!r}, {u.domain_end!r}), need [0, {t!r})")

    ends = u.segment_ends
    for start, end, value in zip(u.breakpoints, ends, u.values[:, 0]):
        lo, hi = max(start, 0.0), min(end, t)
        if hi > lo:
            x = _constant_input_flow(x, float(value), hi - lo)
        if end >= t:
            break
    return x

def hold_pair(u1: float, u2: float, T: float, delta: float) -> PiecewiseConstantSignal:
    """u1 on [0, delta), u2 on [delta, T)."""
    _check_delta(T, delta)
    return PiecewiseConstantSignal([0.0, delta], [u1, u2], T)

def transition_F(x: np.ndarray, u1: float, u2: float, T: float, delta: float) -> np.ndarray:
    """One-period transition map of the sampled feedforward plant."""
    c = TransitionCoeffs(T, delta)
    x1, x2, x3 = np.asarray(x, dtype = float)
    q1 = c.Q1(u1, u2)
    return np.array([
        x1 + q1,
        x2 + T * x1 + x1 * q1 + c.G2(u1, u2),
        x3 + T * (x2 + x1 * x1) + 0.5 * T * T * x1 + 3.0 * x1 * c.Q2(u1, u2) + c.G3(u1, u2),
    ])

def reconstruct_two_output(
    y1_pair: Sequence[float], y2_pair: Sequence[float], u_prev: Sequence[float], T: float, delta: float,
) -> np.ndarray:
    """
    State at the later of two consecutive samples from the measured (x_1, x_3)
    pair at both samples and the two inputs that acted in between.
    """
    c = TransitionCoeffs(T, delta)
    u1, u2 = u_prev
    y1_old, y1_new = y1_pair
    y2_old, y2_new = y2_pair
    return np.array([
        y1_new,
        (y2_new - y2_old) / T - y1_old * y1_old + y1_old * c.B(u1, u2) + c.C(u1, u2),
        y2_new,
    ])

def reconstruct_one_output(
    y: Sequence[float], u: Sequence[float], T: float, delta: float, eps: float,
) -> np.ndarray:
    """
    State at the latest of three samples from x_3 at those samples and the
    three inputs u_{i-3}, u_{i-2}, u_{i-1}.
    """
    if not (0.0 < eps < 1.0 / 6.0):
        raise DomainError("eps must lie in (0, 1/6)")
    if any(abs(v) > eps * (1.0 + 1e-12) for v in u):
        raise DomainError(f"inputs {tuple(u)} exceed eps = {eps!r}")
    c = TransitionCoeffs(T, delta)
    y_old, y_mid, y_new = y
    u_a, u_b, u_c = u

    denominator = c.D(u_a, u_b, u_b, u_c)
    assert denominator >= (1.0 - 6.0 * eps) * T * T * (1.0 - 1e-12)
    M = (y_new - 2.0 * y_mid + y_old - c.P4(u_a, u_b, u_b, u_c)) / denominator + c.Q1(u_a, u_b)
    return np.array([
        M + c.Q1(u_b, u_c),
        (y_new - y_mid) / T - M * M + M * c.B(u_b, u_c) + c.C(u_b, u_c),
        y_new,
    ])

def predict_ff(x: np.ndarray, u_prev: float, delta: float) -> np.ndarray:
    """State delta seconds ahead when the last applied input u_prev is still acting."""
    x1, x2, x3 = np.asarray(x, dtype = float)
    d, v = delta, u_prev
    return np.array([
        x1 + d * v,
        x2 + d * x1 + 0.5 * d * d * (1.0 + v) * v + d * x1 * v,
        x3 + d * (x2 + x1 * x1) + 0.5 * d * d * x1 + d ** 3 / 6.0 * v
        + 1.5 * d * d * x1 * v + 0.5 * d ** 3 * v * v,
    ])

def predict_ff_expanded(x: np.ndarray, u_prev: float, lag: float) -> np.ndarray:
    """Same prediction written with the (1 + u) u grouping used for the two-output loop."""
    x1, x2, x3 = np.asarray(x, dtype = float)
    s, v = lag, u_prev
    return np.array([
        x1 + s * v,
        x2 + s * x1 + 0.5 * s * s * (1.0 + v) * v + s * v * x1,
        x3 + s * (x2 + x1 * x1) + 0.5 * s * s * x1 + s ** 3 / 6.0 * (1.0 + v) * v
        + 1.5 * s * s * v * x1 + s ** 3 / 3.0 * v * v,
    ])

def nominal_feedback(x: np.ndarray, gains: FeedforwardGains) -> float:
    """Three-branch saturated feedback of the delay-free sampled loop."""
    x1, x2, x3 = np.asarray(x, dtype = float)
    radius = math.sqrt(x2 * x2 + (x1 + x2) ** 2)
    if radius >= gains.R2:
        if abs(x1) >= gains.R1:
            return -gains.K0 * saturation(x1)
        return -x1 - gains.K1 * saturation(x2 + x1)
    return -2.0 * (x1 + x2) - gains.K2 * saturation(x3 + x2 + 0.5 * x1)

def required_samples(output_case: OutputCase, l: int = 0) -> int:
    """Index i from which the reconstruction and prediction identity holds (p + l + 1)."""
    p = 1 if output_case is OutputCase.TWO_OUTPUT else 2
    return p + l + 1

def reconstruct_latest(
    y_history: Sequence,
    u_history: Sequence[float],
    T: float,
    delta: float,
    output_case: OutputCase = OutputCase.TWO_OUTPUT,
    eps: Optional[float] = None,
) -> np.ndarray:
    """State x(iT - r) at the latest sample i from the stored samples and inputs."""
    i = len(y_history) - 1
    if i < required_samples(output_case) or len(u_history) < i:
        raise HistoryUnderflow(f"sample index {i} is before the reconstruction has enough data")
    if output_case is OutputCase.TWO_OUTPUT:
        (a1, a3), (b1, b3) = y_history[i - 1], y_history[i]
        return reconstruct_two_output((a1, b1), (a3, b3), (u_history[i - 2], u_history[i - 1]), T, delta)
    if eps is None:
        raise DomainError("the one-output reconstruction needs eps")
    return reconstruct_one_output(
        (y_history[i - 2], y_history[i - 1], y_history[i]),
        (u_history[i - 3], u_history[i - 2], u_history[i - 1]),
        T, delta, eps,
    )

def control_step(
    y_history: Sequence,
    u_history: Sequence[float],
    T: float,
    delta: float,
    gains: FeedforwardGains,
    output_case: OutputCase = OutputCase.TWO_OUTPUT,
    warmup: Optional[float] = 0.0,
    eps: Optional[float] = None,
) -> float:
    """
    Input u_i for the period [iT, (i+1)T).

    `y_history` holds y_0..y_i (pairs (x_1, x_3) or scalars x_3), `u_history`
    holds u_0..u_{i-1}.
    """
    i = len(y_history) - 1
    if len(u_history) != i:
        raise HistoryUnderflow(f"{len(u_history)} inputs stored for sample index {i}")
    if i < required_samples(output_case):
        if warmup is None:
            raise HistoryUnderflow(f"sample index {i} is before the predictor has enough data")
        return float(warmup)

    X = reconstruct_latest(
        y_history, u_history, T, delta, output_case, eps if eps is not None else gains.eps,
    )
    if output_case is OutputCase.TWO_OUTPUT:
        return nominal_feedback(predict_ff_expanded(X, u_history[i - 1], delta), gains)
    return nominal_feedback(predict_ff(X, u_history[i - 1], delta), gains)

def sampled_nominal_step(x: np.ndarray, gains: FeedforwardGains, T: float) -> np.ndarray:
    """One period of the delay-free sampled loop u = k(x(iT))."""
    return _constant_input_flow(np.asarray(x, dtype = float), nominal_feedback(x, gains), T)

def sampled_loop_jacobian(gains: FeedforwardGains, T: float, h: float = 1e-7) -> np.ndarray:
    """Jacobian at the origin of one period of the delay-free sampled loop, by central differences."""
    if not 0.0 < 2.0 * h < gains.R2:
        raise DomainError("the difference step must stay inside the innermost feedback branch")
    columns = [
        (sampled_nominal_step(h * e, gains, T) - sampled_nominal_step(-h * e, gains, T)) / (2.0 * h)
        for e in np.eye(3)
    ]
    return np.column_stack(columns)

def local_decay(gains: FeedforwardGains, T: float, periods: int) -> float:
    """
    Factor by which the slowest mode of the linearized sampled loop shrinks
    over `periods` periods. Under exact prediction the delayed loop repeats
    the sampled one, so this also bounds what the delayed loop can reach
    near the origin.
    """
    radius = float(np.max(np.abs(np.linalg.eigvals(sampled_loop_jacobian(gains, T)))))
    return radius ** periods
