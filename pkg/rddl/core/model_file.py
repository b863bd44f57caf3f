"""Model files (``.rdm``) read by the numeric commands.

::

    param a = 1
    assume x = 0 & v = 0;
    box v in [0, 3];
    dynamics {x' = v, v' = a}

or, for a pair of dynamics, ``rdd {...||...} exit ... post ...`` in place of ``dynamics``.
An optional ``relation R;`` line names a candidate simulation relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .errors import RddlSyntaxError
from .logger import get_logger
from .syntax.ast import TRUE, Dynamics, Formula, RddFormula, conj
from .syntax.parser import Parser

log = get_logger(__name__)

__all__ = ["Model", "ModelParser", "load_model"]


@dataclass
class Model:
    name: str
    params: Dict[str, Optional[Fraction]] = field(default_factory=dict)
    gamma: Formula = TRUE
    box: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    dynamics: Optional[Dynamics] = None
    rdd: Optional[RddFormula] = None
    relation: Optional[Formula] = None

    @property
    def fixed(self) -> Dict[str, float]:
        """Bound parameters as numeric values."""
        return {name: float(value) for name, value in self.params.items() if value is not None}

    def side(self, which: str = "left") -> Dynamics:
        """The single dynamics, or one side of the rdd."""
        if self.dynamics is not None:
            return self.dynamics
        if which == "left":
            return self.rdd.left
        if which == "right":
            return self.rdd.right
        raise ValueError(f"side must be left or right, got {which}")


class ModelParser(Parser):
    def model(self, name: str = "<model>") -> Model:
        model = Model(name)
        while self.accept("param"):
            ident = self.expect_ident()
            model.params[ident] = self._number() if self.accept("=") else None
        assumptions: List[Formula] = []
        while self.accept("assume"):
            assumptions.append(self.formula())
            self.expect(";")
        model.gamma = conj(*assumptions)
        while self.accept("box"):
            ident = self.expect_ident()
            self.expect("in")
            self.expect("[")
            low = self._number()
            self.expect(",")
            high = self._number()
            self.expect("]")
            self.expect(";")
            if low > high:
                raise RddlSyntaxError(self.current.position, [f"interval with low <= high for {ident}"])
            model.box[ident] = (float(low), float(high))
        if self.accept("relation"):
            model.relation = self.formula()
            self.expect(";")
        if self.accept("dynamics"):
            self.expect("{")
            model.dynamics = self.dynamics_body()
            self.expect("}")
        elif self.at("rdd"):
            model.rdd = self.rdd()
        else:
            self.fail("'dynamics'", "'rdd'")
        self.accept(";")
        self.expect_end()
        return model

    def _number(self) -> Fraction:
        negative = self.accept("-")
        token = self.current
        if token.kind != "number":
            self.fail("number")
        self.advance()
        value = Fraction(token.text)
        return -value if negative else value


def load_model(path: Union[str, Path]) -> Model:
    path = Path(path)
    model = ModelParser(path.read_text(encoding="utf-8")).model(path.stem)
    log.debug("Loaded model %s (%s)", path.name, "rdd" if model.rdd is not None else "dynamics")
    return model
