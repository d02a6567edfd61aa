from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np # type: ignore

from exceptions import DomainError

ArrayLike = Union[float, Sequence[float], np.ndarray]

def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write = False)
    return array

class PiecewiseConstantSignal:
    """
    A right-continuous step function on [domain_start, domain_end).

    `breakpoints` holds the start time of every segment, `values` one row per
    segment. Segment j covers [breakpoints[j], breakpoints[j+1]) and the last
    segment ends at domain_end. A signal with no segments has an empty domain
    [domain_start, domain_start).
    """

    def __init__(
        self,
        breakpoints: Iterable[float],
        values: ArrayLike,
        domain_end: float,
        domain_start: Optional[float] = None,
    ):
        starts = np.asarray(list(breakpoints), dtype = float)
        vals = np.asarray(values, dtype = float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise DomainError("values must be one scalar or one vector per segment")

        if vals.shape[0] != starts.size:
            raise DomainError(
                f"{vals.shape[0]} values given for {starts.size} segments"
            )
        if starts.size and np.any(np.diff(starts) <= 0.0):
            raise DomainError("breakpoints must be strictly ascending")
        if not np.all(np.isfinite(vals)):
            raise DomainError("signal values must be finite")

        if starts.size:
            if domain_start is not None and domain_start != starts[0]:
                raise DomainError("domain_start must equal the first breakpoint")
            domain_start = float(starts[0])
            if not domain_end > starts[-1]:
                raise DomainError("domain_end must lie after the last breakpoint")
        elif domain_start is None:
            domain_start = float(domain_end)
        elif domain_start != domain_end:
            raise DomainError("a signal without segments has an empty domain")

        self.breakpoints = _frozen(starts)
        self.values = _frozen(vals)
        self.domain_start = float(domain_start)
        self.domain_end = float(domain_end)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def segment_count(self) -> int:
        return self.breakpoints.size

    @property
    def is_empty(self) -> bool:
        return self.breakpoints.size == 0

    @property
    def segment_ends(self) -> np.ndarray:
        return np.append(self.breakpoints[1:], self.domain_end)

    def _scalar(self, row: np.ndarray):
        return float(row[0]) if self.dim == 1 else row.copy()

    def segment_index(self, t: float) -> int:
        if not (self.domain_start <= t < self.domain_end):
            raise DomainError(
                f"t = {t!r} outside [{self.domain_start!r}, {self.domain_end!r})"
            )
        return int(np.searchsorted(self.breakpoints, t, side = "right")) - 1

    def __call__(self, t: float):
        """Value at t, right-continuous at breakpoints."""
        return self._scalar(self.values[self.segment_index(t)])

    def left_limit(self, t: float):
        """Value just before t, for t in (domain_start, domain_end]."""
        if not (self.domain_start < t <= self.domain_end):
            raise DomainError(f"no left limit at t = {t!r}")
        j = int(np.searchsorted(self.breakpoints, t, side = "left")) - 1
        return self._scalar(self.values[j])

    def sample(self, times: ArrayLike) -> np.ndarray:
        """Vectorised evaluation on an array of times."""
        times = np.asarray(times, dtype = float)
        if times.size and (times.min() < self.domain_start or times.max() >= self.domain_end):
            raise DomainError("sample times leave the signal domain")
        idx = np.searchsorted(self.breakpoints, times, side = "right") - 1
        out = self.values[idx]
        return out[..., 0] if self.dim == 1 else out

    def integral(self, a: float, b: float):
        """Exact integral over [a, b]."""
        if a > b:
            raise DomainError("integration bounds out of order")
        if a < self.domain_start or b > self.domain_end:
            raise DomainError(f"[{a!r}, {b!r}] leaves the signal domain")
        lo = np.maximum(self.breakpoints, a)
        hi = np.minimum(self.segment_ends, b)
        weights = np.clip(hi - lo, 0.0, None)
        return self._scalar(weights @ self.values)

    def restrict(self, a: float, b: float) -> PiecewiseConstantSignal:
        """The signal on [a, b) only."""
        if not (self.domain_start <= a < b <= self.domain_end):
            raise DomainError(f"[{a!r}, {b!r}) is not inside the signal domain")
        first = self.segment_index(a)
        last = int(np.searchsorted(self.breakpoints, b, side = "left")) - 1
        starts = self.breakpoints[first:last + 1].copy()
        starts[0] = a
        return PiecewiseConstantSignal(starts, self.values[first:last + 1], b)

    def breakpoints_in(self, a: float, b: float) -> np.ndarray:
        """Interior breakpoints strictly inside (a, b)."""
        inner = self.breakpoints[(self.breakpoints > a) & (self.breakpoints < b)]
        return inner.copy()

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseConstantSignal):
            return NotImplemented
        return (
            self.domain_start == other.domain_start
            and self.domain_end == other.domain_end
            and np.array_equal(self.breakpoints, other.breakpoints)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return (
            f"PiecewiseConstantSignal({self.segment_count} segments on "
            f"[{self.domain_start:g}, {self.domain_end:g}))"
        )

def constant_signal(value: ArrayLike, start: float, end: float) -> PiecewiseConstantSignal:
    return PiecewiseConstantSignal([start], [np.atleast_1d(np.asarray(value, dtype = float))], end)

def empty_signal(at: float, dim: int = 1) -> PiecewiseConstantSignal:
    return PiecewiseConstantSignal([], np.zeros((0, dim)), at, domain_start = at)

@dataclass(frozen = True)
class HistoryWindow:
    """The history of `signal` over [anchor - length, anchor], closed or open at the right end."""
    signal: PiecewiseConstantSignal
    length: float
    anchor: float
    closed: bool = True

    @property
    def start(self) -> float:
        return self.anchor - self.length

def history_window(
    signal: PiecewiseConstantSignal, anchor: float, length: float, closed: bool = True,
) -> HistoryWindow:
    if length < 0:
        raise DomainError("window length must be nonnegative")
    return HistoryWindow(signal, float(length), float(anchor), closed)

def rebase_window(window: HistoryWindow, tol: float = 1e-12) -> PiecewiseConstantSignal:
    """
    The content of an open window as a signal on [0, length): s -> u(s + start).

    Window ends that miss the signal domain by less than `tol` (relative) are
    snapped onto it.
    """
    signal = window.signal
    slack = tol * max(1.0, abs(window.start), abs(window.anchor))
    a, b = window.start, window.anchor
    if signal.domain_start - slack <= a < signal.domain_start:
        a = signal.domain_start
    if signal.domain_end < b <= signal.domain_end + slack:
        b = signal.domain_end
    piece = signal.restrict(a, b)
    starts = piece.breakpoints - a
    starts[0] = 0.0
    keep = starts < window.length
    return PiecewiseConstantSignal(starts[keep], piece.values[keep], window.length)

def sup_norm(window: HistoryWindow) -> float:
    """
    Supremum of |signal| over the window.

    A closed window anchored exactly at domain_end reads the left limit there,
    which is the value the signal has just before its domain ends.
    """
    signal, a, t = window.signal, window.start, window.anchor
    tol = 1e-12 * max(1.0, abs(a), abs(t))
    if a < signal.domain_start - tol or t > signal.domain_end:
        raise DomainError(
            f"window [{a!r}, {t!r}] exceeds the domain "
            f"[{signal.domain_start!r}, {signal.domain_end!r})"
        )
    a = max(a, signal.domain_start)
    if signal.is_empty:
        return 0.0

    ends = signal.segment_ends
    overlap = (signal.breakpoints < t) & (ends > a)
    if window.closed:
        if t < signal.domain_end:
            overlap[signal.segment_index(t)] = True
        elif t > signal.domain_start:
            overlap[-1] = True
        elif window.length == 0.0:
            return 0.0
    if not np.any(overlap):
        return 0.0
    norms = np.linalg.norm(signal.values[overlap], axis = 1)
    return float(norms.max())

def shift_delay(u: PiecewiseConstantSignal, lag: float) -> PiecewiseConstantSignal:
    """The signal t -> u(t - lag)."""
    if lag < 0:
        raise DomainError("lag must be nonnegative")
    if u.is_empty:
        return empty_signal(u.domain_end + lag, u.dim)
    return PiecewiseConstantSignal(u.breakpoints + lag, u.values, u.domain_end + lag)

def zoh_extend(
    u: PiecewiseConstantSignal, value: ArrayLike, T2: float, start: Optional[float] = None,
) -> PiecewiseConstantSignal:
    """Append a held segment of length T2 at the end of the domain."""
    if not T2 > 0:
        raise DomainError("holding period must be positive")
    if start is not None and start != u.domain_end:
        kind = "gap" if start > u.domain_end else "overlap"
        raise DomainError(f"{kind} between new segment at {start!r} and domain end {u.domain_end!r}")
    row = np.atleast_1d(np.asarray(value, dtype = float))
    if not u.is_empty and row.size != u.dim:
        raise DomainError("held value does not match the signal dimension")
    starts = np.append(u.breakpoints, u.domain_end)
    values = np.vstack([u.values.reshape(-1, row.size), row[None, :]])
    return PiecewiseConstantSignal(starts, values, u.domain_end + T2)

@dataclass(frozen = True)
class SamplingSchedule:
    """Sampling instants tau_0 = 0 < tau_1 < ... with the perturbation that produced each gap."""
    times: np.ndarray
    nominal_period: float
    perturbation: np.ndarray

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.times)

    def __len__(self) -> int:
        return self.times.size

def generate_schedule(
    T1: float, b: Callable[[float], float], horizon: float, max_events: int = 10_000_000,
) -> SamplingSchedule:
    """
    Sampling instants tau_{i+1} = tau_i + T1 * exp(-b(tau_i)), tau_0 = 0, until
    the schedule reaches or passes `horizon`.
    """
    if not (T1 > 0 and math.isfinite(T1)):
        raise DomainError("T1 must be positive and finite")
    if not horizon > 0:
        raise DomainError("horizon must be positive")

    times = [0.0]
    trace = []
    t = 0.0
    while t < horizon:
        bt = float(b(t))
        if not math.isfinite(bt) or bt < 0.0:
            raise DomainError(f"perturbation b({t!r}) = {bt!r} must be finite and nonnegative")
        t = t + T1 * math.exp(-bt)
        times.append(t)
        trace.append(bt)
        if len(times) > max_events:
            raise DomainError("schedule exceeds max_events; perturbation too large")

    return SamplingSchedule(
        _frozen(np.asarray(times)), float(T1), _frozen(np.asarray(trace)),
    )

def merge_event_times(groups: Sequence[Iterable[float]], tol: float) -> np.ndarray:
    """
    Union of several ascending time sets, with instants closer than `tol`
    collapsed onto the earliest of them.
    """
    merged = np.sort(np.concatenate([np.asarray(list(g), dtype = float) for g in groups]))
    if merged.size == 0:
        return merged
    keep = [merged[0]]
    for t in merged[1:]:
        if t - keep[-1] > tol:
            keep.append(t)
    return np.asarray(keep)
