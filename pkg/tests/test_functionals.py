import pytest
from hypothesis import given, strategies as st

from henkin_dichotomy.functionals import (IDENTITY, LOOP, SUCCESSOR, MachineError,
                                          MachineFunctional, TableFunctional, dom_tuple,
                                          eval_stage, execute, functional_from_config,
                                          halting_time, parse_program, run_machine)


def test_table_schedule():
    phi = TableFunctional([(0, 1, 5)])
    assert eval_stage(phi, 0, 4) is None
    assert eval_stage(phi, 0, 5) == 1
    assert eval_stage(phi, 0, 9) == 1


def test_table_clamps_to_the_bound():
    phi = TableFunctional([(3, 7, 0)])
    assert eval_stage(phi, 3, 7) is None and eval_stage(phi, 3, 8) == 7


def test_table_rejects_duplicates():
    with pytest.raises(ValueError):
        TableFunctional([(0, 1, 1), (0, 2, 1)])


def test_loop_never_halts():
    phi = MachineFunctional(LOOP)
    for s in range(0, 300, 7):
        assert eval_stage(phi, 2, s) is None


def test_identity_machine():
    for x in range(10):
        r = execute(IDENTITY, x, 10_000)
        assert r.output == x and r.steps == 3 * x + 2
    phi = MachineFunctional(IDENTITY)
    assert eval_stage(phi, 4, 13) is None
    assert eval_stage(phi, 4, 14) == 4


def test_run_machine_and_halting_time():
    assert run_machine(SUCCESSOR, 3, 10) == 4
    assert run_machine(SUCCESSOR, 3, 1) is None
    assert halting_time(SUCCESSOR, 3, 10) == 2
    assert run_machine("inc 0", 0, 5) == 1


def test_parse_program():
    prog = parse_program("inc 0 # bump\ndjz 1 0; halt 0")
    assert [i.op for i in prog] == ["inc", "djz", "halt"]
    for bad in ("jmp 0", "djz 0", "djz 0 9"):
        with pytest.raises(MachineError):
            parse_program(bad)


programs = st.lists(st.one_of(
    st.builds(lambda r: f"inc {r}", st.integers(0, 2)),
    st.builds(lambda r: f"halt {r}", st.integers(0, 2)),
    st.builds(lambda r, t: (r, t), st.integers(0, 2), st.integers(0, 6)),
), min_size=1, max_size=6).map(
    lambda ins: "; ".join(i if isinstance(i, str) else f"djz {i[0]} {min(i[1], len(ins))}" for i in ins))


@given(programs, st.integers(0, 6))
def test_machine_functionals_are_monotone_and_bounded(prog, a):
    phi = MachineFunctional(prog)
    first = None
    for s in range(0, 40):
        c = eval_stage(phi, a, s)
        if c is not None:
            assert a < s and c < s
            if first is None:
                first = c
            assert c == first
        else:
            assert first is None


@given(st.lists(st.tuples(st.integers(0, 8), st.integers(0, 8), st.integers(0, 12)),
                unique_by=lambda r: r[0], max_size=6))
def test_table_functionals_are_monotone_and_bounded(rows):
    phi = TableFunctional(rows)
    for a, _, _ in rows:
        seen = None
        for s in range(25):
            c = eval_stage(phi, a, s)
            if c is not None:
                assert a < s and c < s
                assert seen in (None, c)
                seen = c
            else:
                assert seen is None


def test_dom_tuple_ascending_and_finite_cut():
    phi = TableFunctional([(2, 0, 3), (0, 1, 2), (5, 1, 1)])
    assert dom_tuple(phi, 10) == ((0, 2, 5), (1, 0, 1))
    assert dom_tuple(phi, 10, size=3) == ((0, 2), (1, 0))


def test_functional_from_config():
    assert functional_from_config({"kind": "table", "rows": [[0, 1, 2]]}).eval(0, 2) == 1
    assert functional_from_config({"kind": "machine", "program": SUCCESSOR}).eval(1, 5) == 2
    with pytest.raises(ValueError):
        functional_from_config({"kind": "oracle"})
