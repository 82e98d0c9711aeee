"""Clauses over barrier variables and the two strategies that solve them.

Literals are DIMACS-style signed integers: ``+i`` is ``b_i``, ``-i`` is
``not b_i``. The repair loop only produces monotone clauses (all positive
from races, all negative from divergence); the exact solver accepts mixed
clauses as well.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Collection, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence

from .oracle import Divergence, Race, Verdict
from .solution import Solution


class EmptyWitness(ValueError):
    """The oracle blamed no guard: no barrier placement can block the trace."""


class NonMonotoneInput(ValueError):
    pass


class Strategy(enum.Enum):
    MHS = "mhs"
    MAXSAT = "maxsat"


@dataclass(frozen=True)
class Clause:
    literals: FrozenSet[int]

    def __post_init__(self):
        if not self.literals:
            raise ValueError("a clause needs at least one literal")
        if 0 in self.literals:
            raise ValueError("0 is not a literal")
        if len({abs(x) for x in self.literals}) != len(self.literals):
            raise ValueError("a clause may mention each variable once")

    @classmethod
    def positive(cls, vars: Iterable[int]) -> "Clause":
        return cls(frozenset(vars))

    @classmethod
    def negative(cls, vars: Iterable[int]) -> "Clause":
        return cls(frozenset(-v for v in vars))

    @property
    def vars(self) -> FrozenSet[int]:
        return frozenset(abs(x) for x in self.literals)

    @property
    def is_positive(self) -> bool:
        return all(x > 0 for x in self.literals)

    @property
    def is_negative(self) -> bool:
        return all(x < 0 for x in self.literals)

    @property
    def is_monotone(self) -> bool:
        return self.is_positive or self.is_negative

    def satisfied_by(self, sol) -> bool:
        return any((sol[abs(x)] if x > 0 else not sol[abs(x)]) for x in self.literals)

    def sorted_literals(self) -> List[int]:
        return sorted(self.literals, key=lambda x: (abs(x), x))

    def __str__(self) -> str:
        lits = [f"b{x}" if x > 0 else f"!b{-x}" for x in self.sorted_literals()]
        return "(" + " | ".join(lits) + ")"


class Constraint:
    """Insertion-ordered, de-duplicated conjunction of clauses."""

    def __init__(self, clauses: Iterable[Clause] = ()):
        self._clauses: Dict[Clause, None] = {}
        for c in clauses:
            self.add(c)

    def add(self, c: Clause) -> bool:
        if c in self._clauses:
            return False
        self._clauses[c] = None
        return True

    def __iter__(self) -> Iterator[Clause]:
        return iter(self._clauses)

    def __len__(self) -> int:
        return len(self._clauses)

    def __contains__(self, c) -> bool:
        return c in self._clauses

    @property
    def positive(self) -> List[Clause]:
        return [c for c in self._clauses if c.is_positive]

    @property
    def negative(self) -> List[Clause]:
        return [c for c in self._clauses if c.is_negative]

    def satisfied_by(self, sol) -> bool:
        return all(c.satisfied_by(sol) for c in self._clauses)

    def __repr__(self) -> str:
        return "Constraint(" + " & ".join(str(c) for c in self._clauses) + ")"


def generate_clause(v: Verdict) -> Clause:
    """Turn an error verdict into the clause that blocks its witness."""
    if isinstance(v, Race):
        if not v.disabled_on_path:
            raise EmptyWitness(
                f"race on {v.access1.array}[{v.access1.index}] cannot be separated by any barrier")
        return Clause.positive(v.disabled_on_path)
    if isinstance(v, Divergence):
        if not v.enabled_at_fault:
            raise EmptyWitness("barrier divergence on an always-enabled barrier")
        return Clause.negative(v.enabled_at_fault)
    raise TypeError(f"no clause for verdict {v!r}")


# -- greedy weighted minimal hitting set ---------------------------------------


def greedy_mhs(phi: Iterable[Clause], weights: Mapping[int, int]) -> Optional[Solution]:
    """Weighted greedy hitting set of the positive clauses, pruned to minimal.

    Returns ``None`` when the candidate violates a negative clause; the caller
    is expected to fall back to :func:`solve_wpms`.
    """
    clauses = list(phi)
    for c in clauses:
        if not c.is_monotone:
            raise NonMonotoneInput(f"mixed-polarity clause {c}")
    pos = [c.vars for c in clauses if c.is_positive]
    neg = [c.vars for c in clauses if c.is_negative]

    chosen: List[int] = []
    uncovered = list(pos)
    while uncovered:
        best, best_ratio = None, None
        for v in sorted({v for s in uncovered for v in s}):
            hits = sum(1 for s in uncovered if v in s)
            ratio = Fraction(weights[v], hits)
            if best_ratio is None or ratio < best_ratio:
                best, best_ratio = v, ratio
        chosen.append(best)
        uncovered = [s for s in uncovered if best not in s]

    hitting = set(chosen)
    for v in sorted(chosen, key=lambda v: (-weights[v], -v)):
        rest = hitting - {v}
        if all(s & rest for s in pos):
            hitting = rest

    if any(s <= hitting for s in neg):
        return None
    return Solution.from_true(hitting, weights)


# -- exact weighted partial MaxSAT ------------------------------------------------


class _WPMS:
    """Branch and bound over variables 1..m, false branch first.

    Variables in ``prefer_true`` try true first instead, which only changes
    which of several equal-weight optima is returned.

    Hard clauses are propagated to a fixpoint at every node; the lower bound is
    the weight already forced true plus a greedy packing of disjoint
    still-open positive clauses.
    """

    def __init__(self, clauses: Sequence[Clause], weights: Mapping[int, int],
                 prefer_true: Collection[int] = ()):
        self.m = len(weights)
        self.prefer = frozenset(prefer_true)
        self.w = [0] + [weights[i] for i in range(1, self.m + 1)]
        self.clauses = [tuple(c.literals) for c in clauses]
        self.best: Optional[List[Optional[bool]]] = None
        self.best_cost: Optional[int] = None
        self.nodes = 0

    def propagate(self, a: List[Optional[bool]]) -> bool:
        changed = True
        while changed:
            changed = False
            for lits in self.clauses:
                open_lit = None
                n_open = 0
                sat = False
                for x in lits:
                    val = a[abs(x)]
                    if val is None:
                        n_open += 1
                        open_lit = x
                    elif val == (x > 0):
                        sat = True
                        break
                if sat:
                    continue
                if n_open == 0:
                    return False
                if n_open == 1:
                    a[abs(open_lit)] = open_lit > 0
                    changed = True
        return True

    def bound(self, a: List[Optional[bool]]) -> int:
        cost = sum(self.w[i] for i in range(1, self.m + 1) if a[i])
        used = set()
        for lits in self.clauses:
            if any(a[abs(x)] == (x > 0) for x in lits if a[abs(x)] is not None):
                continue
            if any(x < 0 for x in lits if a[abs(x)] is None):
                continue  # can be satisfied for free
            free = [x for x in lits if a[x] is None]
            if free and not used.intersection(free):
                used.update(free)
                cost += min(self.w[x] for x in free)
        return cost

    def search(self, a: List[Optional[bool]], depth: int):
        self.nodes += 1
        if not self.propagate(a):
            return
        if self.best_cost is not None and self.bound(a) >= self.best_cost:
            return
        i = depth
        while i <= self.m and a[i] is not None:
            i += 1
        if i > self.m:
            self.best = list(a)
            self.best_cost = sum(self.w[k] for k in range(1, self.m + 1) if a[k])
            return
        for value in ((True, False) if i in self.prefer else (False, True)):
            child = list(a)
            child[i] = value
            self.search(child, i + 1)

    def run(self) -> Optional[List[bool]]:
        for lits in self.clauses:
            for x in lits:
                if not 1 <= abs(x) <= self.m:
                    raise ValueError(f"literal {x} outside 1..{self.m}")
        self.search([None] * (self.m + 1), 1)
        return None if self.best is None else [bool(x) for x in self.best[1:]]


def solve_wpms(hard: Iterable[Clause], weights: Mapping[int, int],
               prefer_true: Collection[int] = ()) -> Optional[Solution]:
    """Minimum-weight model of ``hard`` (soft clauses ``not b_i`` weighted ``w_i``).

    Ties go to the lexicographically smallest assignment, ordering each
    variable's preferred value first (false, or true for ``prefer_true``).
    Returns ``None`` iff the hard clauses are unsatisfiable.
    """
    model = _WPMS(list(hard), weights, prefer_true).run()
    if model is None:
        return None
    return Solution.from_true((i for i, v in enumerate(model, 1) if v), weights)


def solve(phi: Iterable[Clause], weights: Mapping[int, int],
          strategy: Strategy = Strategy.MHS, stats: Optional[dict] = None,
          prefer_true: Collection[int] = ()) -> Optional[Solution]:
    """Propose an assignment for ``phi``; ``None`` means UNSAT.

    ``stats`` (optional) accumulates ``solver_calls`` (exact-solver queries)
    and ``fallbacks`` (greedy results rejected by a negative clause).
    """
    clauses = list(phi)
    stats = stats if stats is not None else {}
    if strategy is Strategy.MHS:
        sol = greedy_mhs(clauses, weights)
        if sol is not None:
            return sol
        stats["fallbacks"] = stats.get("fallbacks", 0) + 1
    stats["solver_calls"] = stats.get("solver_calls", 0) + 1
    return solve_wpms(clauses, weights, prefer_true)


# -- WDIMACS export -------------------------------------------------------------------


def to_wcnf(phi: Iterable[Clause], weights: Mapping[int, int]) -> str:
    """Render hard clauses plus soft unit clauses ``-i`` in WDIMACS form."""
    clauses = list(phi)
    m = len(weights)
    top = sum(weights.values()) + 1
    lines = [f"c barrier repair constraint, {m} variables", f"p wcnf {m} {len(clauses) + m} {top}"]
    for c in clauses:
        lines.append(" ".join([str(top)] + [str(x) for x in c.sorted_literals()] + ["0"]))
    for i in range(1, m + 1):
        lines.append(f"{weights[i]} -{i} 0")
    return "\n".join(lines) + "\n"


def parse_wcnf(text: str):
    """Inverse of :func:`to_wcnf`: returns ``(hard clauses, weights)``."""
    hard: List[Clause] = []
    weights: Dict[int, int] = {}
    top = None
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "p":
            top = int(parts[4])
            continue
        w, lits = int(parts[0]), [int(x) for x in parts[1:-1]]
        if w == top:
            hard.append(Clause(frozenset(lits)))
        elif len(lits) == 1 and lits[0] < 0:
            weights[-lits[0]] = w
        else:
            raise ValueError(f"unsupported soft clause: {line!r}")
    return hard, weights
