from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbplab.exact_linalg import Matrix, Poly
from fbplab.interface_model import InterfaceSystem
from fbplab.porous_case import PorousParams, build_porous_system
from fbplab.stability import (
    MODE_2D,
    MODE_3D,
    AllDegenerate,
    DegenerateGM,
    InvalidVelocity,
    SpectralMode,
    VelocityChoice,
    build_M,
    format_number,
    left_null_w,
    rank_velocities,
    ranking_csv,
    stiffness,
    wellposedness_form,
)

s = Poly.s()
positive = st.fractions(min_value=F(1, 9), max_value=9, max_denominator=9)
fluxes = st.lists(st.fractions(-6, 6, max_denominator=5), min_size=3, max_size=3)
FLAT_Q = (1, -1, 11)


def expected_form(Kp, Km, q):
    return 2 * s * ((Kp - Km) * q[0] + (Kp + Km + 2) * q[1]) / (Kp + Km)


def test_build_M():
    M = build_M()
    assert M.shape == (8, 4)
    assert M[0, 0] == -s and M[1, 1] == s
    at0 = Matrix([[Poly.lift(x)(0) for x in r] for r in M.rows])
    assert at0.submatrix(rows=range(4)).is_zero()
    assert at0.submatrix(rows=range(4, 8)) == Matrix.identity(4)
    at1 = Matrix([[Poly.lift(x)(1) for x in r] for r in M.rows])
    assert at1.rank() == 4


def test_spectral_mode_validation():
    with pytest.raises(ValueError):
        SpectralMode(4)


@settings(max_examples=20, deadline=None)
@given(positive, positive)
def test_w_general_k(Kp, Km):
    sys = build_porous_system(PorousParams(Kp, Km))
    w = left_null_w(sys)
    S = Kp + Km
    assert w == ((S + 2) / S * s, -2 * Kp / S * s, -s, Poly.const(-2 / S), Poly.const(1))
    GM = sys.G @ build_M()
    assert all(p.is_zero() for p in GM.T() @ list(w))


def test_w_at_s2_unit_k():
    w = left_null_w(build_porous_system())
    assert tuple(wi(2) for wi in w) == (4, -2, -2, -1, 1)


def test_w_degree_pattern_class_c_tilde():
    w = left_null_w(build_porous_system())
    # pure Dirichlet rows 1-3 carry degree 1, pure Neumann rows 4-5 degree 0
    assert [wi.degree for wi in w] == [1, 1, 1, 0, 0]


def test_w_degree_pattern_after_row_permutation():
    G = build_porous_system().G
    perm = [3, 4, 0, 1, 2]
    sys = InterfaceSystem(Matrix([G.rows[i] for i in perm]))
    assert sorted(wi.degree for wi in left_null_w(sys)) == [0, 0, 1, 1, 1]


@settings(max_examples=20, deadline=None)
@given(positive, positive, fluxes)
def test_form_general(Kp, Km, q):
    form = wellposedness_form(build_porous_system(PorousParams(Kp, Km)), q)
    assert form.poly == expected_form(Kp, Km, q)


def test_form_flat_state():
    form = wellposedness_form(build_porous_system(), FLAT_Q)
    assert form.poly == -4 * s
    assert not form.ill_posed


def test_form_on_ill_posed_manifold():
    Kp, Km = F(2), F(1, 2)
    # (Kp - Km) q1 + (Kp + Km + 2) q2 = 0
    q = (Kp + Km + 2, -(Kp - Km), 5)
    form = wellposedness_form(build_porous_system(PorousParams(Kp, Km)), q)
    assert form.poly.is_zero() and form.ill_posed


@settings(max_examples=20, deadline=None)
@given(fluxes, st.fractions(-10, 10, max_denominator=7))
def test_q3_independence(q, t):
    sys = build_porous_system()
    a = wellposedness_form(sys, q).poly
    b = wellposedness_form(sys, (q[0], q[1], q[2] + t)).poly
    assert a == b


@settings(max_examples=10, deadline=None)
@given(positive, positive, fluxes)
def test_2d_3d_agree(Kp, Km, q):
    sys = build_porous_system(PorousParams(Kp, Km))
    assert wellposedness_form(sys, q, MODE_2D).poly == wellposedness_form(sys, q, MODE_3D).poly
    assert left_null_w(sys, MODE_2D) == left_null_w(sys, MODE_3D)


@settings(max_examples=15, deadline=None)
@given(positive, positive, fluxes)
def test_stiffness_mass_and_saturation(Kp, Km, q):
    sys = build_porous_system(PorousParams(Kp, Km))
    lam5 = stiffness(sys, q, VelocityChoice.unit(5))
    lam1 = stiffness(sys, q, VelocityChoice.unit(1))
    num = (Kp - Km) * q[0] + (Kp + Km + 2) * q[1]
    if num == 0:
        assert lam5.stable_sign == lam1.stable_sign == "zero"
        return
    assert lam5.numerator * Poly.const(Kp + Km) == 2 * s * num * lam5.denominator
    assert lam1.numerator * Poly.const(Kp + Km + 2) == Poly.const(2 * num) * lam1.denominator
    assert (lam5.growth_order, lam1.growth_order) == (1, 0)


def test_stiffness_flat_state_values():
    sys = build_porous_system()
    lam1 = stiffness(sys, FLAT_Q, VelocityChoice.unit(1))
    assert lam1(F(1)) == -2 and lam1(F(7)) == -2
    assert lam1.stable_sign == "negative"
    lam5 = stiffness(sys, FLAT_Q, VelocityChoice.unit(5))
    assert lam5.numerator == -4 * s and lam5.denominator == Poly.const(1)


@settings(max_examples=15, deadline=None)
@given(st.fractions(min_value=F(1, 5), max_value=8, max_denominator=5))
def test_scaling_covariance(k):
    sys = build_porous_system()
    base = stiffness(sys, FLAT_Q, VelocityChoice.unit(5))
    scaled = stiffness(sys, FLAT_Q, VelocityChoice((0, 0, 0, 0, k)))
    assert scaled(F(3)) == base(F(3)) / k
    assert (scaled.stable_sign, scaled.growth_order) == (base.stable_sign, base.growth_order)


def test_invalid_velocity():
    # w = (2s, -s, -s, -1, 1): the combination e4 + e5 is orthogonal to w
    with pytest.raises(InvalidVelocity):
        stiffness(build_porous_system(), FLAT_Q, VelocityChoice((0, 0, 0, 1, 1)))


def test_velocity_choice_rejects_zero():
    with pytest.raises(ValueError):
        VelocityChoice((0, 0, 0, 0, 0))


def test_ranking_flat_state():
    rep = rank_velocities(build_porous_system(), FLAT_Q)
    assert rep.best.velocity.label == "e1"
    assert rep.best.category == "stable-bounded"
    assert rep.by_label("e5").category == "stable-stiff"
    assert [e.velocity.label for e in rep.entries][:2] == ["e1", "e5"]
    assert not rep.ill_posed


def test_ranking_ill_posed():
    rep = rank_velocities(build_porous_system(), (0, 0, 1))
    assert rep.ill_posed and rep.best is None
    assert all(e.profile.numerator.is_zero() for e in rep.entries)


def test_all_degenerate():
    with pytest.raises(AllDegenerate):
        rank_velocities(build_porous_system(), FLAT_Q, [VelocityChoice((0, 0, 0, 1, 1))])


def test_degenerate_gm():
    # two rows involving only the "+" values: G M loses rank identically
    G = Matrix(
        [
            [0, 0, 0, 0, 1, 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 1, 0],
            [1, 0, 0, 0, 0, 0, 0, 0],
            [0, 0, 1, 0, 0, 0, 0, 0],
            [0, 1, 0, 0, 0, 1, 0, 0],
        ]
    )
    with pytest.raises(DegenerateGM):
        left_null_w(InterfaceSystem(G))


def test_ranking_csv_deterministic():
    sys = build_porous_system()
    a = ranking_csv(rank_velocities(sys, FLAT_Q))
    b = ranking_csv(rank_velocities(sys, FLAT_Q))
    assert a == b
    lines = a.splitlines()
    assert lines[0].startswith("label,category,growth_order")
    assert lines[1].startswith("e1,stable-bounded,0,negative,-2,")


@pytest.mark.parametrize(
    "value, text",
    [(0.0, "0"), (-2.0, "-2"), (1234567.0, "1.23457e+06"), (0.00012345678, "1.23457e-04"), (0.5, "0.5")],
)
def test_format_number(value, text):
    assert format_number(value) == text
