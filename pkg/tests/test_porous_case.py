import math
from fractions import Fraction as F

import numpy as np
import pytest

from fbplab.interface_model import classify
from fbplab.porous_case import (
    REFERENCE_PARAMS,
    ExactSolution,
    NoFlatState,
    ParamMismatch,
    PorousParams,
    build_porous_system,
    exact_fields,
    exact_interface,
    flat_base_state,
    interface_condition_residuals,
)
from fbplab.stability import wellposedness_form

from .oracles import laplacian_defect


def test_system_rows_unit_k():
    sys = build_porous_system()
    assert sys.G.rows[3] == (1, -1, 0, 1, 0, 0, 0, 0)
    assert sys.G.rows[4] == (0, -1, 1, -1, 0, 0, 0, 0)
    assert sys.b == (0,) * 5
    assert classify(sys).name == "C~"


def test_system_general_k_entries():
    sys = build_porous_system(PorousParams(F(5, 2), F(1, 3)))
    assert sys.G.rows[3][:2] == (F(5, 2), F(-1, 3))


def test_params_validation():
    with pytest.raises(ValueError):
        PorousParams(K_plus=0)
    with pytest.raises(ValueError):
        PorousParams(L=-1)
    with pytest.raises(TypeError):
        PorousParams(K_plus=0.5)


def test_flat_base_state_reference_data():
    y0, base = flat_base_state()
    assert y0 == 1
    assert base.r1 == (2, 1, 0, -1)
    assert base.r0 == (11, 11, 11, 0)
    assert base.q == (1, -1, 11)
    assert wellposedness_form(build_porous_system(), base.q).poly.coeffs == (0, -4)


def test_flat_base_state_doubled_flux():
    y0, _ = flat_base_state(PorousParams(flux_mean=4))
    assert y0 == F(1, 2)


@pytest.mark.parametrize("mean", [0, -1, F(1, 2)])
def test_no_flat_state(mean):
    # mean 1/2 puts the flat interface at y0 = 4, above L = 2
    with pytest.raises(NoFlatState):
        flat_base_state(PorousParams(flux_mean=mean))


def test_exact_field_values():
    Tp, P, Tm, s = exact_fields(0.0, 1.0)
    assert Tm == pytest.approx(11.0) and s == pytest.approx(0.0) and P == 11.0
    Tp, *_ = exact_fields(math.pi / 2, 2.0)
    assert Tp == pytest.approx(13 + math.tanh(2) / 2, abs=1e-12)
    assert Tp == pytest.approx(13.48201, abs=1e-5)


def test_exact_requires_equal_k():
    with pytest.raises(ParamMismatch):
        ExactSolution(PorousParams(K_plus=2, K_minus=1))


def test_exact_interface_special_points():
    assert exact_interface(0.0) == pytest.approx(1.0, abs=1e-14)
    assert exact_interface(math.pi) == pytest.approx(1.0, abs=1e-14)
    y = exact_interface(math.pi / 2)
    assert y == pytest.approx(0.929, abs=5e-4)
    assert abs(4 * (1 - y) * math.cosh(2) - math.sinh(y)) <= 1e-12


def test_exact_interface_vectorized_and_saturation_zero():
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 2 * np.pi, 100)
    y = exact_interface(x)
    assert y.shape == x.shape
    ex = ExactSolution()
    assert np.max(np.abs(ex.s(x, y))) <= 1e-12


def test_exact_interface_bad_tol():
    with pytest.raises(ValueError):
        exact_interface(0.0, tol=0)


def test_interface_conditions_hold_exactly():
    x = np.linspace(0, 2 * np.pi, 57)
    res = interface_condition_residuals(x)
    assert res.shape == (5, 57)
    assert np.max(np.abs(res)) <= 1e-11


def test_top_flux_matches_heat_flux():
    ex = ExactSolution()
    x = np.linspace(0, 2 * np.pi, 13)
    _, dTdy = ex.gradients(x, np.full_like(x, 2.0))["T_plus"]
    assert np.allclose(float(REFERENCE_PARAMS.K_plus) * dTdy, REFERENCE_PARAMS.heat_flux(x))


@pytest.mark.parametrize("name", ["T_plus", "T_minus", "s"])
def test_fields_harmonic(name):
    coarse, fine = laplacian_defect(name, 16), laplacian_defect(name, 32)
    assert fine < coarse / 3.5
    assert laplacian_defect(name, 64) < 1e-3


def test_pressure_constant():
    assert laplacian_defect("P", 16) == 0.0
