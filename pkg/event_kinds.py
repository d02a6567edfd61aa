from enum import auto, Enum

class EventKind(Enum):
    """Kinds of event instants, in the order they are processed when they coincide."""
    SAMPLE = auto()
    HOLD = auto()
    BREAK = auto()
