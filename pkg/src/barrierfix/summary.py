"""Machine-readable repair summary (JSON) and its schema."""
from __future__ import annotations

import json
from importlib import resources
from typing import Optional

import jsonschema

from ._version import __version__
from .constraints import Strategy
from .engine import CannotRepair, RepairOutcome, Repaired, outcome_name


def summary_dict(outcome: RepairOutcome, input_path: str,
                 strategy: Strategy = Strategy.MHS) -> dict:
    changes = []
    if isinstance(outcome, Repaired):
        changes = [
            {
                "action": c.action.value,
                "level": c.level.value,
                "file": c.loc.file,
                "line": c.loc.line,
                "col": c.loc.col,
            }
            for c in outcome.changes
        ]
    total: Optional[int] = outcome.solution.total_weight if isinstance(outcome, Repaired) else None
    return {
        "changes": changes,
        "inputPath": input_path,
        "outcome": outcome_name(outcome),
        "reason": outcome.reason.value if isinstance(outcome, CannotRepair) else None,
        "stats": {
            "iterations": outcome.stats.iterations,
            "solverCalls": outcome.stats.solver_calls,
            "strategy": strategy.value,
            "totalWeight": total,
            "verifierCalls": outcome.stats.verifier_calls,
        },
        "toolVersion": __version__,
    }


def dumps(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_summary(outcome: RepairOutcome, path, input_path: str,
                  strategy: Strategy = Strategy.MHS) -> dict:
    """Write the JSON summary; raises ``OSError`` if ``path`` is not writable."""
    data = summary_dict(outcome, input_path, strategy)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(data))
    return data


def load_schema() -> dict:
    text = resources.files("barrierfix").joinpath("summary.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_summary(data: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``data`` is not a valid summary."""
    jsonschema.validate(data, load_schema())
