from enum import Enum

class ControllerKind(Enum):
    EXACT_FF = "exact_ff"
    APPROX_LIPSCHITZ = "approx_lipschitz"
    LTI_EXACT = "lti_exact"

class OutputCase(Enum):
    TWO_OUTPUT = "two_output"
    ONE_OUTPUT = "one_output"

class PlantKind(Enum):
    STRICT_FEEDBACK = "strict_feedback"
    FEEDFORWARD = "feedforward"
    LTI = "lti"
