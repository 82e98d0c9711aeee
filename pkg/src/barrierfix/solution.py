from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Tuple


class MissingAssignment(ValueError):
    """A solution does not assign every barrier variable."""


@dataclass(frozen=True)
class Solution:
    """Total truth assignment to barrier variables ``1..m``."""

    assignment: Tuple[bool, ...]
    total_weight: int = 0

    @classmethod
    def from_true(cls, true_vars: Iterable[int], weights: Mapping[int, int]) -> "Solution":
        on = set(true_vars)
        m = len(weights)
        unknown = on - set(range(1, m + 1))
        if unknown:
            raise MissingAssignment(f"variables {sorted(unknown)} outside 1..{m}")
        return cls(
            tuple(i in on for i in range(1, m + 1)),
            sum(weights[i] for i in on),
        )

    @classmethod
    def from_mapping(cls, values: Mapping[int, bool], weights: Mapping[int, int]) -> "Solution":
        missing = [i for i in weights if i not in values]
        if missing:
            raise MissingAssignment(f"no value for b{missing[0]}")
        return cls.from_true((i for i in weights if values[i]), weights)

    def __getitem__(self, var: int) -> bool:
        if not 1 <= var <= len(self.assignment):
            raise MissingAssignment(f"no value for b{var}")
        return self.assignment[var - 1]

    def __len__(self) -> int:
        return len(self.assignment)

    @property
    def true_vars(self) -> Tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.assignment, 1) if v)

    def as_dict(self) -> dict:
        return {i: v for i, v in enumerate(self.assignment, 1)}

    def __str__(self) -> str:
        on = ", ".join(f"b{i}" for i in self.true_vars) or "-"
        return f"{{{on}}} (weight {self.total_weight})"
