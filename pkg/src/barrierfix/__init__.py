"""Barrier repair for MiniKernel GPU programs."""
from ._version import __version__
from .constraints import Clause, Constraint, Strategy, greedy_mhs, solve, solve_wpms
from .engine import CannotRepair, Change, RepairConfig, Repaired, Timeout, repair
from .estimator import BarrierRepair, NotRepairedError
from .instrument import WeightConfig, apply_solution, instrument
from .lang import Kernel, parse, parse_file, pretty_print
from .oracle import Divergence, Other, Race, Safe, classify, verify
from .solution import Solution

__all__ = [
    "__version__", "BarrierRepair", "NotRepairedError", "Clause", "Constraint",
    "Strategy", "greedy_mhs", "solve", "solve_wpms", "CannotRepair", "Change",
    "RepairConfig", "Repaired", "Timeout", "repair", "WeightConfig",
    "apply_solution", "instrument", "Kernel", "parse", "parse_file",
    "pretty_print", "Divergence", "Other", "Race", "Safe", "classify", "verify",
    "Solution",
]
