"""Simplified two-phase porous-medium model with phase change.

Upper zone (vapour): temperature ``T+`` and pressure ``P``. Lower zone (two
phase): temperature ``T-`` and saturation ``s``. All four fields are
harmonic; the five interface conditions are

    s = 0,  T+ = T-,  P = T-,  K+ T+_n - K- T-_n = -s_n,  P_n = T-_n + s_n.

Boundary data: ``s = 1`` and ``T- = T0`` at the bottom ``y = 0``; no vapour
flux and a prescribed heat flux ``K+ T+_y = f1(x)`` at the top ``y = L``;
periodic in ``x`` with period ``2 pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact_linalg import Matrix, as_fraction
from .interface_model import BaseState, InterfaceSystem, base_solution, coordinates_in_flux_basis

ROW_LABELS = ("saturation", "temperature", "pressure", "heat", "mass")


class NoFlatState(ValueError):
    pass


class ParamMismatch(ValueError):
    pass


class BracketFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class PorousParams:
    """``f1(x) = flux_mean + flux_amplitude * sin(x)``."""

    K_plus: Fraction = Fraction(1)
    K_minus: Fraction = Fraction(1)
    L: Fraction = Fraction(2)
    T0: Fraction = Fraction(10)
    flux_mean: Fraction = Fraction(2)
    flux_amplitude: Fraction = Fraction(1, 2)

    def __post_init__(self):
        for name in ("K_plus", "K_minus", "L", "T0", "flux_mean", "flux_amplitude"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.K_plus <= 0 or self.K_minus <= 0:
            raise ValueError("conductivities must be positive")
        if self.L <= 0:
            raise ValueError("L must be positive")

    def heat_flux(self, x):
        return float(self.flux_mean) + float(self.flux_amplitude) * np.sin(x)


REFERENCE_PARAMS = PorousParams()


def build_porous_system(params: PorousParams = REFERENCE_PARAMS) -> InterfaceSystem:
    Kp, Km = params.K_plus, params.K_minus
    G = Matrix(
        [
            [0, 0, 0, 0, 0, 0, 0, 1],
            [0, 0, 0, 0, 1, -1, 0, 0],
            [0, 0, 0, 0, 0, 1, -1, 0],
            [Kp, -Km, 0, 1, 0, 0, 0, 0],
            [0, -1, 1, -1, 0, 0, 0, 0],
        ]
    )
    # global fluxes: q1 heat flux, q2 water flux, q3 uniform shift of T and P
    flux = Matrix.from_columns(
        [
            [Km / Kp, 1, 1, 0, 0, 0, 0, 0],
            [-1 / Kp, 0, 1, 1, 0, 0, 0, 0],
            [0, 0, 0, 0, 1, 1, 1, 0],
        ],
        8,
    )
    return InterfaceSystem(G=G, b=(0,) * 5, flux_basis=flux, row_labels=ROW_LABELS)


def flat_base_state(params: PorousParams = REFERENCE_PARAMS) -> tuple[Fraction, BaseState]:
    """x-independent steady state for the mean heat flux.

    Lower zone: ``s = 1 - y/y0`` and ``T- = T0 + a y``; upper zone:
    ``T+ = T-(y0) + (F/K+)(y - y0)``, ``P = T-(y0)``. Heat and mass balance
    at ``y0`` give ``a = F/(K- + 1)`` and ``s_y = -a`` so ``y0 = (K- + 1)/F``.
    """
    Kp, Km = params.K_plus, params.K_minus
    F = params.flux_mean
    if F <= 0:
        raise NoFlatState("mean heat flux must be positive for a flat steady interface")
    a = F / (Km + 1)
    y0 = 1 / a
    if not (0 < y0 < params.L):
        raise NoFlatState(f"flat interface height {y0} outside (0, {params.L})")
    T_int = params.T0 + a * y0
    r1 = (F / Kp, a, Fraction(0), -a)  # normal derivatives of T+, T-, P, s
    r0 = (T_int, T_int, T_int, Fraction(0))
    sys = build_porous_system(params)
    q = coordinates_in_flux_basis(sys, r1 + r0)
    return y0, base_solution(sys, q)


def _check_equal_k(params: PorousParams) -> None:
    if params.K_plus != params.K_minus:
        raise ParamMismatch("closed-form solution exists only for K+ = K-")


def _check_reference_data(params: PorousParams) -> None:
    _check_equal_k(params)
    if (params.T0, params.flux_mean, params.flux_amplitude, params.K_plus) != (10, 2, Fraction(1, 2), 1):
        raise ParamMismatch("closed-form solution is tied to K = 1, T0 = 10, f1 = 2 + sin(x)/2")


class ExactSolution:
    """Closed-form steady solution for ``K+ = K- = 1``, ``T0 = 10``, ``f1 = 2 + sin(x)/2``.

    Built from ``U = T - s`` and ``V = T + s`` in the lower zone, which
    continue harmonically across the interface into ``T+`` and ``P``.
    """

    def __init__(self, params: PorousParams = REFERENCE_PARAMS):
        _check_reference_data(params)
        self.params = params
        self.L = float(params.L)
        self._cl = math.cosh(self.L)

    def _bump(self, x, y):
        return np.sin(x) * np.sinh(y) / self._cl

    def T_plus(self, x, y):
        return 9.0 + 2.0 * y + 0.5 * self._bump(x, y)

    def P(self, x, y):
        return np.full_like(np.asarray(x, dtype=float) + np.asarray(y, dtype=float), 11.0)

    def T_minus(self, x, y):
        return 10.0 + y + 0.25 * self._bump(x, y)

    def s(self, x, y):
        return 1.0 - y - 0.25 * self._bump(x, y)

    def gradients(self, x, y):
        """Analytic (d/dx, d/dy) of T+, P, T-, s."""
        cx, sx = np.cos(x), np.sin(x)
        ch, sh = np.cosh(y) / self._cl, np.sinh(y) / self._cl
        zero = np.zeros_like(cx * ch)
        return {
            "T_plus": (0.5 * cx * sh, 2.0 + 0.5 * sx * ch),
            "P": (zero, zero),
            "T_minus": (0.25 * cx * sh, 1.0 + 0.25 * sx * ch),
            "s": (-0.25 * cx * sh, -1.0 - 0.25 * sx * ch),
        }

    def interface_relation(self, x, y):
        return 4.0 * (1.0 - y) * self._cl - np.sin(x) * np.sinh(y)


def exact_fields(x, y, params: PorousParams = REFERENCE_PARAMS):
    """``(T+, P, T-, s)`` at ``(x, y)``."""
    ex = ExactSolution(params)
    return ex.T_plus(x, y), ex.P(x, y), ex.T_minus(x, y), ex.s(x, y)


def exact_interface(x, params: PorousParams = REFERENCE_PARAMS, tol: float = 1e-13):
    """Height y(x) of the curve ``s = 0`` by bisection on a bracket in (0, L).

    Accepts a scalar or an array of x. The relation
    ``g(y) = 4 (1 - y) cosh L - sin(x) sinh(y)`` is strictly decreasing in y
    on [0, L] for the reference data, so the root is unique.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ex = ExactSolution(params)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    lo = np.zeros_like(xs)
    hi = np.full_like(xs, ex.L)
    g_lo = ex.interface_relation(xs, lo)
    g_hi = ex.interface_relation(xs, hi)
    if np.any(g_lo * g_hi > 0):
        raise BracketFailure("no sign change of the interface relation in [0, L]")
    # split the bracket at the flat height 1 so both halves start tight
    g_mid = ex.interface_relation(xs, np.ones_like(xs))
    left = g_lo * g_mid <= 0
    hi = np.where(left, 1.0, hi)
    lo = np.where(left, lo, 1.0)
    g_lo = np.where(left, g_lo, g_mid)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = ex.interface_relation(xs, mid)
        same = g * g_lo > 0
        lo = np.where(same, mid, lo)
        g_lo = np.where(same, g, g_lo)
        hi = np.where(same, hi, mid)
        if np.all(np.abs(g) <= tol) or np.all(hi - lo <= 1e-16 * np.maximum(1.0, hi)):
            break
    mid = 0.5 * (lo + hi)
    y = np.where(np.abs(ex.interface_relation(xs, lo)) < np.abs(ex.interface_relation(xs, mid)), lo, mid)
    return float(y[0]) if np.ndim(x) == 0 else y


def interface_condition_residuals(x, params: PorousParams = REFERENCE_PARAMS) -> np.ndarray:
    """``G U - b`` of the exact solution along its exact interface (5 x len(x)).

    Normal derivatives use the analytic gradients and the interface normal.
    """
    ex = ExactSolution(params)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    y = exact_interface(xs, params)
    # slope of the implicit curve g(x, y) = 0
    cl = ex._cl
    gx = -np.cos(xs) * np.sinh(y)
    gy = -4.0 * cl - np.sin(xs) * np.cosh(y)
    slope = -gx / gy
    nrm = np.sqrt(1.0 + slope**2)
    grads = ex.gradients(xs, y)

    def dn(name):
        dx, dy = grads[name]
        return (-slope * dx + dy) / nrm

    Kp, Km = float(params.K_plus), float(params.K_minus)
    Tp, P, Tm, s = ex.T_plus(xs, y), ex.P(xs, y), ex.T_minus(xs, y), ex.s(xs, y)
    return np.vstack(
        [
            s,
            Tp - Tm,
            Tm - P,
            Kp * dn("T_plus") - Km * dn("T_minus") + dn("s"),
            -dn("T_minus") + dn("P") - dn("s"),
        ]
    )
