from hypothesis import strategies as st

from henkin_dichotomy.logic import (All, And, Const, Eq, Ex, Family, Imp, Language, Not, Or, Rel,
                                    Var)

LANG = Language([Family("R", 1, 1), Family("L", 2, 0), Family("S", 1, 2)])

terms = st.one_of(st.builds(Var, st.integers(0, 3)), st.builds(Const, st.integers(0, 3)))
idx = st.integers(0, 4)

atoms = st.one_of(
    st.builds(lambda i, t: Rel("R", (i,), (t,)), idx, terms),
    st.builds(lambda a, b: Rel("L", (), (a, b)), terms, terms),
    st.builds(lambda i, j, t: Rel("S", (i, j), (t,)), idx, idx, terms),
    st.builds(Eq, terms, terms),
)


def _extend(children):
    return st.one_of(
        st.builds(Not, children),
        st.builds(And, children, children),
        st.builds(Or, children, children),
        st.builds(Imp, children, children),
        st.builds(All, st.integers(0, 5), children),
        st.builds(Ex, st.integers(0, 5), children),
    )


formulas = st.recursive(atoms, _extend, max_leaves=8)


def _close(f):
    out = f
    for v in sorted(f.free_vars, reverse=True):
        out = Ex(v, out)
    return out


sentences = formulas.map(_close)
