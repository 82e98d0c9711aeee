"""Input validation helpers shared by the estimator and the CLI."""
from __future__ import annotations

import os
from numbers import Integral
from typing import Optional

from .constraints import Strategy
from .instrument import InstrumentedKernel
from .lang import Kernel, check_kernel, parse, parse_file


def check_kernel_input(X) -> Kernel:
    """Coerce ``X`` (a :class:`Kernel`, source text, or path) to a checked kernel."""
    if isinstance(X, InstrumentedKernel):
        raise TypeError("pass the un-instrumented kernel; instrumentation happens in fit")
    if isinstance(X, Kernel):
        check_kernel(X)
        return X
    if isinstance(X, os.PathLike):
        return parse_file(X)
    if isinstance(X, str):
        if "kernel" not in X and os.path.exists(X):
            return parse_file(X)
        return parse(X)
    raise TypeError(f"expected a Kernel, source text or path, got {type(X).__name__}")


def check_strategy(strategy) -> Strategy:
    if isinstance(strategy, Strategy):
        return strategy
    try:
        return Strategy(str(strategy).lower())
    except ValueError:
        raise ValueError(f"unknown strategy {strategy!r}; expected 'mhs' or 'maxsat'") from None


def check_positive_int(value, name: str, allow_none: bool = False) -> Optional[int]:
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
