from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np # type: ignore

from event_kinds import EventKind
from exceptions import DomainError
from message_log import MessageLog

logger = logging.getLogger(__name__)

def log_columns(n: int) -> List[str]:
    return (
        ["t"] + [f"x{i}" for i in range(1, n + 1)] + [f"z{i}" for i in range(1, n + 1)]
        + ["w", "u"] + [f"d{i}" for i in range(1, n + 1)] + ["xi", "event"]
    )

def event_label(kinds: Sequence[EventKind]) -> str:
    """CSV text of the events at one row, e.g. 'sample+hold'."""
    return "+".join(kind.name.lower() for kind in sorted(set(kinds), key = lambda k: k.value))

@dataclass
class SimulationLog:
    """Rows of a closed-loop run, one per integration node, events included."""
    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    w: np.ndarray
    u: np.ndarray
    d: np.ndarray
    xi: np.ndarray
    events: List[str]
    r: float = 0.0
    tau: float = 0.0
    x_initial: Optional[np.ndarray] = None
    u_initial_sup: float = 0.0
    name: str = ""
    message_log: MessageLog = field(default_factory = MessageLog)

    def __post_init__(self):
        if self.x_initial is None:
            self.x_initial = self.x[0].copy() if len(self.t) else np.zeros(self.x.shape[-1])

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def rows(self) -> int:
        return self.t.size

    @property
    def x_initial_sup(self) -> float:
        return float(np.linalg.norm(self.x_initial))

    @property
    def columns(self) -> List[str]:
        return log_columns(self.n)

    def column(self, name: str) -> np.ndarray:
        if name in ("t", "w", "u", "xi"):
            return getattr(self, name)
        for prefix in ("x", "z", "d"):
            if name.startswith(prefix) and name[1:].isdigit():
                i = int(name[1:])
                if 1 <= i <= self.n:
                    return getattr(self, prefix)[:, i - 1]
        raise DomainError(f"no column {name!r} in a log with n = {self.n}")

    def mask(self, t0: float, t1: float) -> np.ndarray:
        return (self.t >= t0) & (self.t <= t1)

    def event_rows(self, kind: EventKind) -> np.ndarray:
        tag = kind.name.lower()
        return np.array([tag in e.split("+") for e in self.events], dtype = bool)

    def state_norm(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis = 1)

    def sup_norm(self, t0: float = -np.inf, t1: float = np.inf) -> float:
        """sup of |x| + |z| + |w| + |u| over rows in [t0, t1]."""
        rows = self.mask(t0, t1)
        if not np.any(rows):
            return 0.0
        size = (
            np.linalg.norm(self.x[rows], axis = 1) + np.linalg.norm(self.z[rows], axis = 1)
            + np.abs(self.w[rows]) + np.abs(self.u[rows])
        )
        return float(size.max())

    def terminal_state(self) -> np.ndarray:
        return self.x[-1].copy()

class LogRecorder:
    """Collects rows while the engine runs and freezes them into a SimulationLog."""

    def __init__(self, n: int):
        self.n = n
        self._rows: List[tuple] = []

    def record(self, t: float, x, z, w: float, u: float, d, xi: float, events: Sequence[EventKind] = ()) -> None:
        label = event_label(events)
        if self._rows and t <= self._rows[-1][0]:
            if t == self._rows[-1][0]:
                # post-jump values replace the pre-jump row at the same instant
                previous = self._rows.pop()
                parts = previous[-1].split("+") + label.split("+")
                label = "+".join(dict.fromkeys(p for p in parts if p))
            else:
                raise DomainError(f"log time {t!r} is not after {self._rows[-1][0]!r}")
        self._rows.append((float(t), np.array(x, dtype = float), np.array(z, dtype = float),
                           float(w), float(u), np.array(d, dtype = float), float(xi), label))

    def __len__(self) -> int:
        return len(self._rows)

    def to_log(self, **kwargs) -> SimulationLog:
        if not self._rows:
            empty = np.zeros((0, self.n))
            return SimulationLog(np.zeros(0), empty, empty, np.zeros(0), np.zeros(0), empty, np.zeros(0), [], **kwargs)
        t, x, z, w, u, d, xi, events = zip(*self._rows)
        return SimulationLog(
            t = np.array(t), x = np.vstack(x), z = np.vstack(z), w = np.array(w), u = np.array(u),
            d = np.vstack(d), xi = np.array(xi), events = list(events), **kwargs,
        )

def emit_csv(log: SimulationLog, path: str) -> None:
    """Write the log with repr floats, so parsing the file back gives the same doubles."""
    if log.rows == 0:
        raise DomainError("refusing to write an empty log")
    with open(path, "w", newline = "") as data_file:
        writer = csv.writer(data_file)
        writer.writerow(log.columns)
        for k in range(log.rows):
            writer.writerow(
                [repr(float(log.t[k]))]
                + [repr(float(v)) for v in log.x[k]]
                + [repr(float(v)) for v in log.z[k]]
                + [repr(float(log.w[k])), repr(float(log.u[k]))]
                + [repr(float(v)) for v in log.d[k]]
                + [repr(float(log.xi[k])), log.events[k]]
            )
    logger.info("wrote %d rows to %s", log.rows, path)

def load_csv(path: str, r: float = 0.0, tau: float = 0.0) -> SimulationLog:
    if not os.path.isfile(path):
        raise FileNotFoundError(path)

    with open(path, newline = "") as data_file:
        reader = csv.reader(data_file)
        header = next(reader)
        body = list(reader)
    n = sum(1 for name in header if name.startswith("x") and name[1:].isdigit())
    if header != log_columns(n):
        raise DomainError(f"{path} does not have the log column layout")

    numbers = np.array([[float(v) for v in row[:-1]] for row in body]).reshape(len(body), len(header) - 1)
    cut = np.cumsum([1, n, n, 1, 1, n, 1])
    t, x, z, w, u, d, xi = np.split(numbers, cut[:-1], axis = 1)[:7]
    return SimulationLog(
        t = t[:, 0], x = x, z = z, w = w[:, 0], u = u[:, 0], d = d, xi = xi[:, 0],
        events = [row[-1] for row in body], r = r, tau = tau,
    )

