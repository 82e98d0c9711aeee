import itertools
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barrierfix import (
    Divergence, Other, Race, Safe, Solution, WeightConfig, classify, instrument, parse, verify,
)
from barrierfix.lang import LaunchConfig, While
from barrierfix.lang.ast import walk_stmts
from barrierfix.oracle import (
    AccessInfo, AccessKind, Eligibility, KernelOracle, ResourceLimit, check_launch,
)
from barrierfix.solution import MissingAssignment

from bruteforce import simulate
from conftest import CORPUS_NAMES, corpus_kernel

_CLASS = {Safe: None, Race: "race", Divergence: "divergence", Other: "other"}


def _sol(ik, *on):
    return Solution.from_true(on, ik.weights)


def test_race_all_false():
    ik = instrument(corpus_kernel("race"))
    v = verify(ik, _sol(ik))
    assert isinstance(v, Race)
    kinds = {v.access1.kind, v.access2.kind}
    assert kinds == {AccessKind.READ, AccessKind.WRITE}
    assert v.access1.array == v.access2.array == "A"
    assert v.access1.index == v.access2.index
    assert v.access1.thread != v.access2.thread
    # the guards between the read (b1, b2) and the write (b3, b4)
    assert v.disabled_on_path == frozenset({3, 4})


def test_race_fixed_by_block_barrier_before_write():
    ik = instrument(corpus_kernel("race"))
    assert verify(ik, _sol(ik, 3)) == Safe()
    assert verify(ik, _sol(ik, 4)) == Safe()
    assert isinstance(verify(ik, _sol(ik, 1, 2)), Race)


def test_divergence_on_programmer_barrier():
    ik = instrument(corpus_kernel("divergence"))
    prog = next(v.id for v in ik.vars if v.origin.value == "programmer")
    v = verify(ik, _sol(ik, prog))
    assert isinstance(v, Divergence)
    assert v.at == prog and v.enabled_at_fault == frozenset({prog})
    assert verify(ik, _sol(ik)) == Safe()


def test_write_write_race_has_empty_path():
    ik = instrument(corpus_kernel("write_write_race"))
    for on in ([], [1], [2], [1, 2]):
        v = verify(ik, _sol(ik, *on))
        assert isinstance(v, Race)
        assert v.access1.kind is v.access2.kind is AccessKind.WRITE
        assert v.disabled_on_path == frozenset()


def test_assertion_failure_is_other():
    ik = instrument(corpus_kernel("assertion"))
    v = verify(ik, _sol(ik))
    assert isinstance(v, Other)
    assert classify(v) is Eligibility.NOT_REPAIRABLE


def test_division_by_zero_is_other():
    ik = instrument(parse("kernel k(shared int A[]) { A[tid] = 4 / (tid - 1); }"))
    assert isinstance(verify(ik, _sol(ik)), Other)


def test_unguarded_divergence_has_empty_fault_set():
    ik = instrument(corpus_kernel("divergence"), WeightConfig(inspect_existing=False))
    v = verify(ik, _sol(ik))
    assert isinstance(v, Divergence) and v.enabled_at_fault == frozenset()


def test_block_barrier_does_not_order_other_blocks():
    ik = instrument(corpus_kernel("interblock"))
    block = [v.id for v in ik.vars if v.level.value == "block"]
    grid = [v.id for v in ik.vars if v.level.value == "grid"]
    v = verify(ik, _sol(ik, *block))
    assert isinstance(v, Race) and v.access1.thread[0] != v.access2.thread[0]
    assert v.disabled_on_path <= set(grid)
    assert verify(ik, _sol(ik, grid[-1])) == Safe()


def test_classify():
    acc = AccessInfo("A", 0, AccessKind.WRITE, (0, 0), None)
    assert classify(Safe()) is Eligibility.ALREADY_SAFE
    assert classify(Other("assertion failed")) is Eligibility.NOT_REPAIRABLE
    assert classify(Race(acc, acc, frozenset())) is Eligibility.REPAIRABLE
    assert classify(Divergence(1, frozenset({1}))) is Eligibility.REPAIRABLE


def test_partial_assignment_rejected():
    ik = instrument(corpus_kernel("race"))
    with pytest.raises(MissingAssignment):
        verify(ik, {1: True})


def test_step_budget():
    k = parse("kernel k(shared int A[]) { int i = 0; while (i < 100) unroll 100 { i = i + 1; } A[tid] = i; }")
    with pytest.raises(ResourceLimit):
        KernelOracle(instrument(k), step_budget=50)
    assert isinstance(KernelOracle(instrument(k)).verify({1: False, 2: False}), Safe)


@pytest.mark.parametrize("blocks, threads", [(1, 1), (9, 1), (1, 9)])
def test_launch_limits(blocks, threads):
    with pytest.raises(ValueError):
        check_launch(LaunchConfig(blocks, threads))


def test_trace_is_json_ready():
    ik = instrument(corpus_kernel("race"))
    v = verify(ik, _sol(ik))
    lines = [json.dumps(ev, sort_keys=True) for ev in v.trace]
    assert lines and all('"array": "A"' in x for x in lines)


def _assignments(m, limit=64, seed=0):
    if m <= 6:
        return [dict(enumerate(bits, 1)) for bits in itertools.product((False, True), repeat=m)]
    rng = random.Random(seed)
    return [{i: rng.random() < 0.5 for i in range(1, m + 1)} for _ in range(limit)]


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_polarity_and_determinism(name):
    ik = instrument(corpus_kernel(name))
    for a in _assignments(ik.m):
        v = verify(ik, a)
        assert KernelOracle(ik).verify(a) == v
        if isinstance(v, Race):
            assert all(not a[i] for i in v.disabled_on_path)
            assert v.access1.array == v.access2.array and v.access1.index == v.access2.index
            assert AccessKind.WRITE in (v.access1.kind, v.access2.kind)
            assert v.access1.thread != v.access2.thread
        elif isinstance(v, Divergence) and v.enabled_at_fault:
            assert all(a[i] for i in v.enabled_at_fault)
            assert v.at in v.enabled_at_fault


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_monotone_errors(name):
    """More barriers never add a race; fewer never add a divergence."""
    ik = instrument(corpus_kernel(name))
    for a in _assignments(ik.m, limit=24):
        v = verify(ik, a)
        for i in range(1, ik.m + 1):
            flipped = dict(a)
            flipped[i] = not a[i]
            w = verify(ik, flipped)
            if flipped[i] and not isinstance(v, Race):
                assert not isinstance(w, Race) or isinstance(v, (Divergence, Other)), (a, i)
            if not flipped[i] and not isinstance(v, Divergence):
                assert not isinstance(w, Divergence) or isinstance(v, (Race, Other)), (a, i)


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_race_witness_is_blocked_by_its_clause(name):
    """Enabling any blamed guard removes that exact witness.

    Loop bodies repeat an access per iteration, so the witness is only
    identified by thread and location in loop-free kernels.
    """
    k = corpus_kernel(name)
    loops = any(isinstance(s, While) for s in walk_stmts(k.body))
    ik = instrument(k)

    def ident(r):
        return [(x.thread, x.loc, x.index, x.kind) for x in (r.access1, r.access2)]

    for a in _assignments(ik.m, limit=24):
        v = verify(ik, a)
        if isinstance(v, Race):
            for i in v.disabled_on_path:
                w = verify(ik, {**a, i: True})
                if isinstance(w, Race):
                    assert i not in w.disabled_on_path
                    if not loops:
                        assert ident(w) != ident(v)


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_matches_grid_simulation_at_scale(name):
    k = corpus_kernel(name)
    ik = instrument(k)
    rng = random.Random(name)
    for blocks, threads, unroll in [(1, 8, 4), (4, 2, 3), (2, 4, 0), (4, 8, 1)]:
        launch = LaunchConfig(blocks, threads)
        for _ in range(4):
            a = {i: rng.random() < 0.5 for i in range(1, ik.m + 1)}
            cls = _CLASS[type(verify(ik, a, launch, unroll))]
            errs = simulate(ik.kernel, a, blocks, threads, unroll)
            assert (cls is None and not errs) or cls in errs, (blocks, threads, unroll, a)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(1, 3), st.integers(0, 7), st.booleans())
def test_generated_shift_kernels(shift, blocks, seed, guarded_branch):
    """Random read/write offsets: verdict class agrees with the simulator."""
    cond = "tid % 2 == 0" if guarded_branch else "tid >= 0"
    k = parse(f"""kernel k(shared int A[]) <<<{blocks}, 4>>> {{
        int g = bid * bdim + tid;
        int v = A[(g + {shift}) % (gdim * bdim)];
        if ({cond}) {{
            A[g] = v;
        }}
    }}""")
    ik = instrument(k)
    rng = random.Random(seed)
    a = {i: rng.random() < 0.5 for i in range(1, ik.m + 1)}
    cls = _CLASS[type(verify(ik, a))]
    errs = simulate(ik.kernel, a, blocks, 4)
    assert (cls is None and not errs) or cls in errs
