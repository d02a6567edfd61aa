from __future__ import annotations

from typing import Dict, Optional

from controller_kinds import OutputCase
from exceptions import ConfigError
from plants import FeedforwardPlant, LtiPlant, double_integrator, linear_chain_plant, saturated_chain_plant

def build_plant(spec: Dict, r: float, tau: float, T: Optional[float] = None):
    """Plant object named by a scenario's plant spec."""
    name = spec.get("name")

    if name == "saturated_chain":
        return saturated_chain_plant(r, tau)

    if name == "chain":
        return linear_chain_plant(int(spec.get("n", 2)), r, tau, float(spec.get("L", 0.0)))

    if name == "double_integrator":
        return double_integrator(r, tau)

    if name == "lti":
        try:
            return LtiPlant(spec["A"], spec["B"], spec["c"], r, tau, spec.get("G"))
        except KeyError as missing:
            raise ConfigError(f"lti plant spec is missing {missing}") from None

    if name == "feedforward":
        if T is None:
            raise ConfigError("the feedforward plant needs the sampling period")
        try:
            case = OutputCase(spec.get("output_case", OutputCase.TWO_OUTPUT.value))
        except ValueError:
            raise ConfigError(f"unknown output case {spec.get('output_case')!r}") from None
        return FeedforwardPlant(r, tau, T, case, spec.get("eps"))

    raise ConfigError(f"unknown plant {name!r}")
