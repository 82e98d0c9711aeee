import pytest

from barrierfix import (
    CannotRepair, Clause, RepairConfig, Repaired, Safe, Strategy, Timeout, WeightConfig,
    instrument, parse, pretty_print, repair, verify,
)
from barrierfix.engine import Action, Reason, outcome_name, progress_check, verdict_of
from barrierfix.lang import Barrier, Level
from barrierfix.lang.ast import walk_stmts

from bruteforce import simulate
from conftest import CORPUS_NAMES, corpus_kernel

# Optimal weights found by enumerating every guard assignment against the
# whole-grid simulator (None: no assignment is error free).
OPTIMUM = {
    "assertion": None, "divergence": 0, "grid_kept": 13, "interblock": 13,
    "interfunction_race": 1, "intrablock": 1, "kernel_example": 1, "loop_divergence": 0,
    "loop_shift": 20, "needed_barrier": 1, "nested": 20, "no_shared": 0, "race": 1,
    "redundant_barrier": 0, "single_line_race": 1, "unrepairable": None,
    "write_write_race": None,
}
OPTIMUM_BLOCK_ONLY = dict(OPTIMUM, interblock=None)

EXPECTED = {
    "assertion": ("cannot_repair", Reason.NON_REPAIRABLE_ERROR),
    "divergence": ("repaired", None), "grid_kept": ("already_safe", None),
    "interblock": ("repaired", None), "interfunction_race": ("repaired", None),
    "intrablock": ("repaired", None), "kernel_example": ("repaired", None),
    "loop_divergence": ("repaired", None), "loop_shift": ("repaired", None),
    "needed_barrier": ("already_safe", None), "nested": ("repaired", None),
    "no_shared": ("already_safe", None), "race": ("repaired", None),
    "redundant_barrier": ("repaired", None), "single_line_race": ("repaired", None),
    "unrepairable": ("cannot_repair", Reason.UNSAT_CONSTRAINTS),
    "write_write_race": ("cannot_repair", Reason.EMPTY_WITNESS),
}


def _cfg(strategy=Strategy.MHS, grid=True, **kw):
    return RepairConfig(strategy=strategy, weights=WeightConfig(grid_enabled=grid), **kw)


def test_race_repair():
    out = repair(corpus_kernel("race"))
    assert isinstance(out, Repaired)
    assert out.solution.true_vars == (3,) and out.solution.total_weight == 1
    [c] = out.changes
    assert (c.action, c.level, c.loc.line) == (Action.ADD_BARRIER, Level.BLOCK, 4)
    assert str(c).endswith("4:5: add barrier before line 4")
    assert out.iterations == 2 and out.stats.verifier_calls >= 2


def test_divergence_repair_removes_barrier():
    out = repair(corpus_kernel("divergence"))
    [c] = out.changes
    assert (c.action, c.loc.line) == (Action.REMOVE_BARRIER, 5)
    assert not any(isinstance(s, Barrier) for s in walk_stmts(out.kernel.body))


def test_kernel_example_fix_goes_before_the_if():
    out = repair(corpus_kernel("kernel_example"))
    [c] = out.changes
    assert c.loc.line == 5 and c.level is Level.BLOCK


def test_unrepairable_has_conflicting_clauses():
    out = repair(corpus_kernel("unrepairable"))
    assert isinstance(out, CannotRepair) and out.reason is Reason.UNSAT_CONSTRAINTS
    pos = [c.vars for c in out.constraint.positive]
    neg = [c.vars for c in out.constraint.negative]
    assert any(p & n for p in pos for n in neg)


def test_write_write_is_empty_witness():
    out = repair(corpus_kernel("write_write_race"))
    assert isinstance(out, CannotRepair) and out.reason is Reason.EMPTY_WITNESS
    assert len(out.constraint) == 0


def test_assertion_is_not_repairable():
    out = repair(corpus_kernel("assertion"))
    assert out.reason is Reason.NON_REPAIRABLE_ERROR
    assert outcome_name(out) == "cannot_repair"


def test_iteration_budget():
    out = repair(corpus_kernel("loop_shift"), RepairConfig(max_iterations=1))
    assert isinstance(out, Timeout) and out.iterations == 1
    assert outcome_name(out) == "timeout"
    with pytest.raises(ValueError):
        RepairConfig(max_iterations=0)


def test_time_budget():
    out = repair(corpus_kernel("loop_shift"), RepairConfig(time_limit=0.0))
    assert isinstance(out, Timeout)


def test_resource_limit_is_not_repairable():
    k = parse("kernel k(shared int A[]) { int i = 0; while (i < 90) unroll 90 { i = i + 1; } A[tid] = i; }")
    out = repair(k, RepairConfig(step_budget=20))
    assert isinstance(out, CannotRepair) and out.reason is Reason.NON_REPAIRABLE_ERROR


def test_accepts_instrumented_kernel():
    ik = instrument(corpus_kernel("race"), WeightConfig(grid_enabled=False))
    out = repair(ik)
    assert out.instrumented is ik and out.solution.true_vars == (2,)


def test_progress_check():
    a, b = Clause.positive([1, 2]), Clause.negative([3])
    assert progress_check([], a)
    assert progress_check([a], b)
    assert not progress_check([a, b], Clause.positive([2, 1]))


def test_verdict_of():
    out = repair(corpus_kernel("race"))
    name, v = verdict_of(out)
    assert name == "Race" and v.disabled_on_path
    assert verdict_of(repair(corpus_kernel("no_shared"))) == ("Safe", None)


@pytest.mark.parametrize("name", CORPUS_NAMES)
@pytest.mark.parametrize("strategy", list(Strategy))
def test_corpus_outcomes(name, strategy):
    out = repair(corpus_kernel(name), _cfg(strategy))
    status, reason = EXPECTED[name]
    assert outcome_name(out) == status
    if reason is not None:
        assert out.reason is reason


@pytest.mark.parametrize("name", CORPUS_NAMES)
@pytest.mark.parametrize("grid", [True, False])
def test_weight_is_optimal(name, grid):
    k = corpus_kernel(name)
    table = OPTIMUM if grid else OPTIMUM_BLOCK_ONLY
    weights = set()
    for strategy in Strategy:
        out = repair(k, _cfg(strategy, grid))
        if table[name] is None:
            assert isinstance(out, CannotRepair)
            continue
        assert isinstance(out, Repaired)
        weights.add(out.solution.total_weight)
        # the output is safe for both the oracle and the simulator
        assert verify(out.instrumented, out.solution) == Safe()
        assert not simulate(out.kernel, {}, k.launch.blocks, k.launch.threads)
    assert weights <= {table[name]}


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_loop_clauses(name):
    for strategy in Strategy:
        out = repair(corpus_kernel(name), _cfg(strategy))
        seen = []
        for step in out.history:
            if step.clause is None:
                continue
            assert step.clause.is_monotone
            assert not step.clause.satisfied_by(step.solution)
            assert step.clause not in seen
            seen.append(step.clause)
        # an UNSAT solve is an iteration without a verifier step
        unsat = isinstance(out, CannotRepair) and out.reason is Reason.UNSAT_CONSTRAINTS
        assert out.stats.iterations == len(out.history) + unsat


@pytest.mark.parametrize("name", CORPUS_NAMES)
@pytest.mark.parametrize("strategy", list(Strategy))
def test_repair_is_idempotent(name, strategy):
    out = repair(corpus_kernel(name), _cfg(strategy))
    if not isinstance(out, Repaired):
        return
    again = parse(pretty_print(out.kernel))
    assert again == out.kernel
    second = repair(again, _cfg(strategy))
    assert outcome_name(second) == "already_safe"
    assert second.solution.total_weight == out.solution.total_weight
