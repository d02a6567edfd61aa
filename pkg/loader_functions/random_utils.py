from __future__ import annotations

import math
from typing import Dict, Optional

import numpy as np # type: ignore

from exceptions import ConfigError

SIGNAL_KINDS = ("zero", "constant", "sinusoid", "random_steps")

class SignalProcess:
    """
    A deterministic or seeded-random function of time used for the
    disturbance d, the measurement noise xi and the schedule perturbation b.

    `breakpoints(t0, t1)` lists the instants in (t0, t1) where the process
    jumps, so the engine can stop the integrator there.
    """

    def __init__(self, spec: Dict, dim: int, seed: int = 0, nonnegative: bool = False):
        kind = spec.get("kind", "zero")
        if kind not in SIGNAL_KINDS:
            raise ConfigError(f"unknown signal kind {kind!r}, expected one of {SIGNAL_KINDS}")
        unknown = set(spec) - {"kind", "value", "amplitude", "frequency", "phase", "period", "seed"}
        if unknown:
            raise ConfigError(f"unknown signal keys {sorted(unknown)}")
        self.kind = kind
        self.dim = dim
        self.nonnegative = nonnegative
        self.seed = int(spec.get("seed", seed))
        self.value = np.broadcast_to(np.asarray(spec.get("value", 0.0), dtype = float), (dim,)).copy()
        self.amplitude = np.broadcast_to(np.asarray(spec.get("amplitude", 0.0), dtype = float), (dim,)).copy()
        self.frequency = float(spec.get("frequency", 1.0))
        self.phase = float(spec.get("phase", 0.0))
        self.period = float(spec.get("period", 0.1))
        if kind == "random_steps" and not self.period > 0:
            raise ConfigError("random_steps needs a positive period")
        if nonnegative and (np.any(self.value < 0) or np.any(self.amplitude < 0)):
            raise ConfigError("this signal must be nonnegative")
        self._steps: Dict[int, np.ndarray] = {}

    def _step_value(self, index: int) -> np.ndarray:
        if index not in self._steps:
            rng = np.random.default_rng((self.seed, index))
            low = 0.0 if self.nonnegative else -1.0
            self._steps[index] = self.amplitude * rng.uniform(low, 1.0, size = self.dim)
        return self._steps[index]

    def vector(self, t: float) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(self.dim)
        if self.kind == "constant":
            return self.value.copy()
        if self.kind == "sinusoid":
            wave = self.amplitude * math.sin(2.0 * math.pi * self.frequency * t + self.phase)
            return self.value + (np.abs(wave) if self.nonnegative else wave)
        return self.value + self._step_value(math.floor(t / self.period))

    def __call__(self, t: float):
        out = self.vector(t)
        return float(out[0]) if self.dim == 1 else out

    def breakpoints(self, t0: float, t1: float) -> np.ndarray:
        if self.kind != "random_steps":
            return np.zeros(0)
        first = math.floor(t0 / self.period) + 1
        last = math.ceil(t1 / self.period) - 1
        return np.array([j * self.period for j in range(first, last + 1)])

    def sup_bound(self) -> float:
        """Upper bound of |value| over all t."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return float(np.linalg.norm(self.value))
        return float(np.linalg.norm(np.abs(self.value) + self.amplitude))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (not np.any(self.value) and not np.any(self.amplitude))

def build_signal(spec: Optional[Dict], dim: int, seed: int = 0, nonnegative: bool = False) -> SignalProcess:
    return SignalProcess(spec or {"kind": "zero"}, dim, seed, nonnegative)

def random_initial_state(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """Uniform draw from the ball of the given radius."""
    direction = rng.normal(size = n)
    direction /= np.linalg.norm(direction)
    return direction * radius * rng.uniform() ** (1.0 / n)
