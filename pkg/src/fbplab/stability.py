"""Linear well-posedness and residual-velocity stiffness.

Perturbing a flat interface by a Fourier mode ``exp(i alpha x)`` (or
``exp(i(alpha x + beta y))`` in 3-D) gives decaying half-plane solutions
``c exp(-/+ s y)`` with ``s = |alpha|`` (``sqrt(alpha^2 + beta^2)``). The
linearized interface problem ``G M c + eta G U0n = f`` is uniquely solvable
for every ``f`` iff ``w^T G U0n != 0``, with ``w`` spanning the left kernel
of ``G M``. A residual velocity ``v`` moves a mode at rate
``lambda(s) = w^T G U0n / w^T v``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .exact_linalg import (
    DegenerateLeftNullspace,
    Matrix,
    Poly,
    as_fraction,
    left_nullspace_basis,
    poly_gcd,
    positive_root_count,
    sign_on_positive_axis,
)
from .interface_model import BaseState, InterfaceSystem, base_solution, validate


class DegenerateGM(ValueError):
    pass


class InvalidVelocity(ValueError):
    pass


class AllDegenerate(ValueError):
    pass


@dataclass(frozen=True)
class SpectralMode:
    dimension: int = 2

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")

    @property
    def symbol(self) -> str:
        return "|alpha|" if self.dimension == 2 else "sqrt(alpha^2+beta^2)"


MODE_2D = SpectralMode(2)
MODE_3D = SpectralMode(3)


@dataclass(frozen=True)
class WellPosednessForm:
    poly: Poly
    base: BaseState

    @property
    def ill_posed(self) -> bool:
        """True if the form vanishes identically or at some wavenumber s > 0."""
        return self.poly.is_zero() or positive_root_count(self.poly) > 0


@dataclass(frozen=True)
class VelocityChoice:
    v: tuple[Fraction, ...]
    label: str = ""

    def __post_init__(self):
        v = tuple(as_fraction(x) for x in self.v)
        if len(v) != 5:
            raise ValueError("velocity combination needs 5 entries")
        if all(x == 0 for x in v):
            raise ValueError("velocity combination must be nonzero")
        object.__setattr__(self, "v", v)
        if not self.label:
            object.__setattr__(self, "label", _label(v))

    @classmethod
    def unit(cls, k: int) -> "VelocityChoice":
        """Residual of interface condition ``k`` (1-based) alone."""
        v = [0] * 5
        v[k - 1] = 1
        return cls(tuple(v), f"e{k}")


def _label(v) -> str:
    nz = [i for i, x in enumerate(v) if x != 0]
    if len(nz) == 1 and v[nz[0]] == 1:
        return f"e{nz[0] + 1}"
    return "(" + ",".join(str(x) for x in v) + ")"


DEFAULT_CANDIDATES = tuple(VelocityChoice.unit(k) for k in range(1, 6))


@dataclass(frozen=True)
class StiffnessProfile:
    numerator: Poly
    denominator: Poly
    growth_order: int
    stable_sign: str  # "negative" | "positive" | "sign-changing" | "zero"

    def __call__(self, s):
        return self.numerator(s) / self.denominator(s)

    def __str__(self) -> str:
        if self.denominator == Poly.const(1):
            return str(self.numerator)
        return f"({self.numerator}) / ({self.denominator})"


def build_M(mode: SpectralMode = MODE_2D) -> Matrix:
    """8x4: ``diag(-s, s, -s, s)`` over the identity.

    Upper-domain unknowns decay like exp(-s y), lower ones like exp(+s y).
    """
    s = Poly.s()
    top = [[(-s if i % 2 == 0 else s) if i == j else Poly() for j in range(4)] for i in range(4)]
    bottom = [[Poly.const(1) if i == j else Poly() for j in range(4)] for i in range(4)]
    return Matrix(top + bottom)


def left_null_w(sys: InterfaceSystem, mode: SpectralMode = MODE_2D) -> tuple[Poly, ...]:
    validate(sys)
    GM = sys.G @ build_M(mode)
    try:
        w = left_nullspace_basis(GM, expected=1)
    except DegenerateLeftNullspace as exc:
        raise DegenerateGM(f"G M does not have rank 4 ({exc})") from None
    return tuple(Poly.lift(x) for x in w.row(0))


def _w_dot(w: Sequence[Poly], vec: Iterable) -> Poly:
    acc = Poly()
    for wi, x in zip(w, vec):
        acc = acc + wi * Poly.lift(x)
    return acc


def wellposedness_form(
    sys: InterfaceSystem, q: Sequence, mode: SpectralMode = MODE_2D
) -> WellPosednessForm:
    base = base_solution(sys, q)
    w = left_null_w(sys, mode)
    GU0n = sys.G @ base.U0n
    return WellPosednessForm(poly=_w_dot(w, GU0n), base=base)


def _reduce_ratio(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    if num.is_zero():
        return Poly(), Poly.const(1)
    g = poly_gcd(num, den)
    if g.degree > 0:
        num, den = num.exact_div(g), den.exact_div(g)
    scale = den.lead
    return num / scale, den / scale


def stiffness(
    sys: InterfaceSystem,
    q: Sequence,
    v: VelocityChoice,
    mode: SpectralMode = MODE_2D,
    *,
    form: WellPosednessForm | None = None,
    w: Sequence[Poly] | None = None,
) -> StiffnessProfile:
    if form is None:
        form = wellposedness_form(sys, q, mode)
    if w is None:
        w = left_null_w(sys, mode)
    den = _w_dot(w, v.v)
    if den.is_zero():
        raise InvalidVelocity(f"w^T v vanishes identically for {v.label}")
    num, den = _reduce_ratio(form.poly, den)
    if num.is_zero():
        return StiffnessProfile(num, den, growth_order=0, stable_sign="zero")
    sign = sign_on_positive_axis(num * den)
    # sign of num*den equals sign of num/den wherever den != 0
    return StiffnessProfile(num, den, growth_order=num.degree - den.degree, stable_sign=sign)


@dataclass(frozen=True)
class VelocityRanking:
    velocity: VelocityChoice
    profile: StiffnessProfile | None
    category: str  # "stable-bounded" | "stable-stiff" | "unstable" | "degenerate"

    @property
    def at_one(self) -> float:
        if self.profile is None:
            return float("nan")
        d = self.profile.denominator(Fraction(1))
        return float(self.profile.numerator(Fraction(1)) / d) if d else float("inf")


@dataclass(frozen=True)
class RankingReport:
    entries: tuple[VelocityRanking, ...]
    form: WellPosednessForm
    ill_posed: bool

    @property
    def best(self) -> VelocityRanking | None:
        first = self.entries[0] if self.entries else None
        if first is None or not first.category.startswith("stable"):
            return None
        return first

    def by_label(self, label: str) -> VelocityRanking:
        return next(e for e in self.entries if e.velocity.label == label)


_CATEGORY_ORDER = {"stable-bounded": 0, "stable-stiff": 1, "unstable": 2, "degenerate": 3}


def rank_velocities(
    sys: InterfaceSystem,
    q: Sequence,
    candidates: Sequence[VelocityChoice] = DEFAULT_CANDIDATES,
    mode: SpectralMode = MODE_2D,
) -> RankingReport:
    form = wellposedness_form(sys, q, mode)
    w = left_null_w(sys, mode)
    entries = []
    for v in candidates:
        try:
            prof = stiffness(sys, q, v, mode, form=form, w=w)
        except InvalidVelocity:
            entries.append(VelocityRanking(v, None, "degenerate"))
            continue
        if prof.stable_sign == "negative":
            cat = "stable-stiff" if prof.growth_order >= 1 else "stable-bounded"
        else:
            cat = "unstable"
        entries.append(VelocityRanking(v, prof, cat))
    if all(e.category == "degenerate" for e in entries):
        raise AllDegenerate("no candidate velocity couples to interface motion")

    def key(e: VelocityRanking):
        go = e.profile.growth_order if e.profile else 0
        return (_CATEGORY_ORDER[e.category], go, abs(e.at_one) if e.profile else 0.0)

    entries.sort(key=key)
    return RankingReport(tuple(entries), form, ill_posed=form.ill_posed)


def ranking_csv(report: RankingReport) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["label", "category", "growth_order", "sign", "lambda_at_1", "numerator", "denominator"])
    for e in report.entries:
        p = e.profile
        wr.writerow(
            [
                e.velocity.label,
                e.category,
                p.growth_order if p else "",
                p.stable_sign if p else "",
                format_number(e.at_one) if p else "",
                " ".join(str(c) for c in p.numerator.coeffs) if p else "",
                " ".join(str(c) for c in p.denominator.coeffs) if p else "",
            ]
        )
    return buf.getvalue()


def format_number(v: float) -> str:
    """6 significant digits; scientific notation below 1e-3 in magnitude."""
    if v != v or v in (float("inf"), float("-inf")):
        return str(v)
    if v != 0 and abs(v) < 1e-3:
        return f"{v:.5e}"
    return f"{v:.6g}"
