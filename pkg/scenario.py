from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np # type: ignore

from controller_kinds import ControllerKind, OutputCase, PlantKind
from exceptions import ConfigError
from loader_functions.initialize_scenario import get_constants
from signals import PiecewiseConstantSignal, constant_signal

logger = logging.getLogger(__name__)

_PLANT_KINDS = {
    "saturated_chain": PlantKind.STRICT_FEEDBACK,
    "chain": PlantKind.STRICT_FEEDBACK,
    "double_integrator": PlantKind.LTI,
    "lti": PlantKind.LTI,
    "feedforward": PlantKind.FEEDFORWARD,
}

_CONTROLLERS_FOR = {
    PlantKind.STRICT_FEEDBACK: (ControllerKind.APPROX_LIPSCHITZ,),
    PlantKind.LTI: (ControllerKind.LTI_EXACT,),
    PlantKind.FEEDFORWARD: (ControllerKind.EXACT_FF,),
}

@dataclass(frozen = True)
class Scenario:
    """
    Everything one closed-loop run needs. Scenarios are values: engines never
    mutate them, so they can be shipped to worker processes.
    """
    name: str
    controller_kind: ControllerKind
    plant: Dict = field(default_factory = lambda: {"name": "saturated_chain"})
    r: float = 0.25
    tau: float = 0.25
    T1: float = 0.03
    T2: float = 0.01
    horizon: float = 20.0
    step: Optional[float] = None
    k: Tuple[float, ...] = (-15.0, -9.0)
    theta: float = 1.0
    p: Tuple[float, ...] = (-3.0, -3.0)
    l: int = 1
    m: int = 1
    N: int = 64
    ff_gains: Optional[Dict] = None
    warmup: Optional[float] = 0.0
    x0: Tuple[float, ...] = (1.0, 1.0)
    u0: float = -2.0
    z0: Tuple[float, ...] = (0.0, 0.0)
    w0: float = 0.0
    b: Dict = field(default_factory = lambda: {"kind": "zero"})
    d: Dict = field(default_factory = lambda: {"kind": "zero"})
    xi: Dict = field(default_factory = lambda: {"kind": "zero"})
    seed: int = 0
    r_actual: Optional[float] = None
    K_hat: Optional[float] = None
    checks: bool = True

    @property
    def plant_kind(self) -> PlantKind:
        try:
            return _PLANT_KINDS[self.plant.get("name")]
        except KeyError:
            raise ConfigError(f"unknown plant {self.plant.get('name')!r}") from None

    @property
    def n(self) -> int:
        if self.plant_kind is PlantKind.FEEDFORWARD:
            return 3
        return len(self.x0)

    @property
    def output_case(self) -> OutputCase:
        return OutputCase(self.plant.get("output_case", OutputCase.TWO_OUTPUT.value))

    @property
    def measurement_delay(self) -> float:
        """Delay the plant output really has; the controller assumes r."""
        return self.r if self.r_actual is None else self.r_actual

    @property
    def integration_step(self) -> float:
        if self.step is not None:
            return self.step
        return min(self.T1, self.T2) / get_constants()['step_divisor']

    @property
    def input_history_length(self) -> float:
        """r + tau for the observer loops, (p + l + 1) T for the feedforward loop."""
        if self.controller_kind is ControllerKind.EXACT_FF:
            p = 1 if self.output_case is OutputCase.TWO_OUTPUT else 2
            return (p + 1) * self.T2 # l = 0
        return self.r + self.tau

    def initial_input(self) -> PiecewiseConstantSignal:
        return constant_signal(self.u0, -self.input_history_length, 0.0)

    def validate(self) -> Scenario:
        for name in ("T1", "T2", "horizon"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")
        if self.step is not None and not self.step > 0:
            raise ConfigError("integration step must be positive")
        if self.r < 0 or self.tau < 0 or self.r + self.tau <= 0:
            raise ConfigError("delays must be nonnegative with r + tau > 0")
        if self.r_actual is not None and self.r_actual < 0:
            raise ConfigError("r_actual must be nonnegative")
        if self.controller_kind not in _CONTROLLERS_FOR[self.plant_kind]:
            raise ConfigError(
                f"controller {self.controller_kind.value} does not drive a {self.plant_kind.value} plant"
            )

        n = self.n
        if len(self.x0) != n:
            raise ConfigError(f"x0 has {len(self.x0)} entries, the plant has {n} states")
        if self.controller_kind is ControllerKind.EXACT_FF:
            if self.T1 != self.T2:
                raise ConfigError("the feedforward loop samples and holds with one period T1 = T2")
            if self.ff_gains is None:
                raise ConfigError("the feedforward loop needs ff_gains")
        else:
            for name in ("k", "p", "z0"):
                if len(getattr(self, name)) != n:
                    raise ConfigError(f"{name} must have {n} entries")
            if self.theta < 1.0:
                raise ConfigError("theta must be at least 1")
            if self.l < 1 or self.m < 1 or self.N < 1:
                raise ConfigError("l, m and N must be at least 1")
        return self

    def replace(self, **changes) -> Scenario:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict:
        data = dataclasses.asdict(self)
        data["controller_kind"] = self.controller_kind.value
        for name in ("k", "p", "x0", "z0"):
            data[name] = list(data[name])
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> Scenario:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown scenario keys {sorted(unknown)}")
        if "controller_kind" not in data:
            raise ConfigError("scenario needs a controller_kind")
        values = _defaults()
        values.update(data)
        try:
            values["controller_kind"] = ControllerKind(values["controller_kind"])
        except ValueError:
            raise ConfigError(f"unknown controller kind {data['controller_kind']!r}") from None
        for name in ("k", "p", "x0", "z0"):
            if name in values:
                values[name] = tuple(float(v) for v in values[name])
        values.setdefault("name", "<unnamed>")
        try:
            return cls(**values).validate()
        except TypeError as err:
            raise ConfigError(str(err)) from None

    def initial_state(self) -> np.ndarray:
        return np.asarray(self.x0, dtype = float)

def _defaults() -> Dict:
    constants = get_constants()
    defaults = {name: constants[name] for name in (
        "r", "tau", "T1", "T2", "horizon", "theta", "l", "m", "u0", "w0", "seed",
    )}
    for name in ("k", "p", "x0", "z0"):
        defaults[name] = tuple(constants[name])
    defaults["N"] = constants["picard_nodes"]
    return defaults
