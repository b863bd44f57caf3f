"""Result of a successful proof check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from ..arith.obligations import Obligation

__all__ = ["Certificate", "UNCONDITIONAL", "CONDITIONAL"]

UNCONDITIONAL = "unconditional"
CONDITIONAL = "conditional"


@dataclass
class Certificate:
    """Rule histogram, trusted obligations and recorded side conditions of one check.

    Two certificates compare equal when everything except ``wall_ms`` matches.
    """

    root: str
    rules: Dict[str, int] = field(default_factory=dict)
    obligations: List[Obligation] = field(default_factory=list)
    side_conditions: Tuple[str, ...] = ()
    experimental: Tuple[str, ...] = ()
    wall_ms: float = field(default=0.0, compare=False)

    @property
    def status(self) -> str:
        return CONDITIONAL if self.obligations else UNCONDITIONAL

    @property
    def rule_count(self) -> int:
        return sum(self.rules.values())

    def render(self, timing: bool = True, strict: bool = False) -> str:
        """Line-oriented text form; ``strict`` adds the reason each obligation was trusted."""
        histogram = ", ".join(f"{name}={count}" for name, count in sorted(self.rules.items()))
        lines = [f"status: {self.status}", f"rules: {histogram}"]
        lines.append("obligations:" if self.obligations else "obligations: none")
        for obligation in self.obligations:
            line = f"  {obligation.id}: {obligation.text}"
            if strict and obligation.reason:
                line += f"  [{obligation.reason}]"
            lines.append(line)
        lines.append("side_conditions:" if self.side_conditions else "side_conditions: none")
        lines.extend(f"  {text}" for text in self.side_conditions)
        if self.experimental:
            lines.append("experimental:")
            lines.extend(f"  {note}" for note in self.experimental)
        if timing:
            lines.append(f"wall_ms: {self.wall_ms:.0f}")
        return "\n".join(lines)

    def __str__(self) -> str:
        return self.render()
