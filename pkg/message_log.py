from __future__ import annotations

import logging
import textwrap
from typing import Iterable, List, Reversible

logger = logging.getLogger(__name__)

DEBUG = logging.DEBUG
INFO = logging.INFO
WARNING = logging.WARNING
ERROR = logging.ERROR

class Message:
    def __init__(self, text: str, level: int, t: float = None):
        self.plain_text = text
        self.level = level
        self.t = t
        self.count = 1

    @property
    def full_text(self) -> str:
        """The full text of this message, including the count if necessary."""
        prefix = f"[t={self.t:.6g}] " if self.t is not None else ""
        if self.count > 1:
            return f"{prefix}{self.plain_text} (x{self.count})"
        return f"{prefix}{self.plain_text}"

class MessageLog:
    """Run diagnostics collected while a simulation is running."""

    def __init__(self) -> None:
        self.messages: List[Message] = []

    def add_message(
        self, text: str, level: int = INFO, *, t: float = None, stack: bool = True,
    ) -> None:
        """Add a message to this log.
        `text` is the message text, `level` a logging level.
        If `stack` is True then the message can stack with a previous message
        of the same text, keeping the time of the first occurrence.
        """
        logger.log(level, text if t is None else f"t={t:.6g}: {text}")
        if stack and self.messages and text == self.messages[-1].plain_text:
            self.messages[-1].count += 1
        else:
            self.messages.append(Message(text, level, t))

    def warnings(self) -> List[Message]:
        return [m for m in self.messages if m.level >= WARNING]

    def errors(self) -> List[Message]:
        return [m for m in self.messages if m.level >= ERROR]

    def render(self, width: int = 78, min_level: int = INFO) -> str:
        """Render this log as wrapped text, oldest message first."""
        return "\n".join(
            self.render_messages(
                width, [m for m in self.messages if m.level >= min_level]
            )
        )

    @staticmethod
    def wrap(string: str, width: int) -> Iterable[str]:
        """Return a wrapped text message."""
        for line in string.splitlines(): # Handle newlines in messages.
            yield from textwrap.wrap(
                line, width, expand_tabs = True,
            )

    @classmethod
    def render_messages(
        cls, width: int, messages: Reversible[Message],
    ) -> Iterable[str]:
        for message in messages:
            tag = logging.getLevelName(message.level)
            for i, line in enumerate(cls.wrap(message.full_text, width - 10)):
                yield f"{tag if i == 0 else '':<9} {line}"
