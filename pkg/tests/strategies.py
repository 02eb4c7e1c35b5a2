"""Hypothesis strategies shared by the test modules."""

from fractions import Fraction

from hypothesis import assume
from hypothesis import strategies as st

from fbplab.exact_linalg import Matrix
from fbplab.interface_model import InterfaceSystem

small = st.fractions(min_value=-4, max_value=4, max_denominator=3)
# sparse entries make low-rank Neumann blocks (classes B-D) reasonably common
sparse = st.one_of(st.just(Fraction(0)), st.just(Fraction(0)), small)


@st.composite
def invertible(draw, n):
    rows = draw(st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n))
    m = Matrix(rows)
    assume(m.rank() == n)
    return m


@st.composite
def random_system(draw):
    """A random rank-5 interface system with a random Neumann-block rank."""
    neumann_rank = draw(st.integers(1, 4))
    rows = []
    for i in range(5):
        neu = draw(st.lists(sparse, min_size=4, max_size=4)) if i < neumann_rank else [0] * 4
        dir_ = draw(st.lists(sparse, min_size=4, max_size=4))
        rows.append(neu + dir_)
    G = Matrix(rows)
    assume(G.rank() == 5)
    return InterfaceSystem(G)
