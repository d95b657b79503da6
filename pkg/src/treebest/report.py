from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .model import Labeling


class Status(str, Enum):
    SOLVED = "Solved"
    INFEASIBLE = "Infeasible"
    EXHAUSTED = "Exhausted"
    NO_VALID = "NoValidSolution"

    def __str__(self) -> str:
        return self.value


@dataclass
class SolverReport:
    """Outcome of one solver call.

    ``hammings[i]`` is the smallest Hamming distance between solution ``i``
    and the reference solutions it was constrained against (earlier solutions
    or the ``previous`` argument); ``None`` when there is no reference.
    ``runtime_ns`` covers input checks and search; single-solution diverse
    solvers stop the clock before evaluating the solution they found.
    """

    status: Status
    method: str
    solutions: list[Labeling] = field(default_factory=list)
    hammings: list[Optional[int]] = field(default_factory=list)
    runtime_ns: int = 0
    counters: dict[str, int] = field(default_factory=dict)
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def best(self) -> Optional[Labeling]:
        return self.solutions[0] if self.solutions else None

    @property
    def energies(self) -> list[float]:
        return [s.energy for s in self.solutions]

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED
