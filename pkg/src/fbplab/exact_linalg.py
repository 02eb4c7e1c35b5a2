"""Exact rational and polynomial linear algebra.

Entries are :class:`fractions.Fraction` or :class:`Poly` (univariate
polynomials with rational coefficients in the spectral variable ``s``).
Everything here is exact: rank decisions never depend on a tolerance.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

__all__ = [
    "Poly",
    "Matrix",
    "as_fraction",
    "rref",
    "nullspace_basis",
    "left_nullspace_basis",
    "poly_gcd",
    "positive_root_count",
    "sign_on_positive_axis",
    "DegenerateLeftNullspace",
]


def as_fraction(value) -> Fraction:
    """Convert ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected on purpose; they would smuggle rounding into exact input.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


class Poly:
    """Polynomial in ``s`` with Fraction coefficients, lowest power first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def const(cls, c) -> "Poly":
        return cls([c])

    @classmethod
    def s(cls) -> "Poly":
        return cls([0, 1])

    @staticmethod
    def lift(value) -> "Poly":
        return value if isinstance(value, Poly) else Poly([value])

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def __call__(self, x):
        acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == Poly([other]).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __neg__(self) -> "Poly":
        return Poly(-c for c in self.coeffs)

    def __add__(self, other) -> "Poly":
        if not isinstance(other, (Poly, int, Fraction)):
            return NotImplemented
        o = Poly.lift(other).coeffs
        a = self.coeffs
        n = max(len(a), len(o))
        return Poly(
            (a[i] if i < len(a) else 0) + (o[i] if i < len(o) else 0) for i in range(n)
        )

    __radd__ = __add__

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, (Poly, int, Fraction)):
            return NotImplemented
        return self + (-Poly.lift(other))

    def __rsub__(self, other) -> "Poly":
        return Poly.lift(other) - self

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return Poly(c * other for c in self.coeffs)
        if not isinstance(other, Poly):
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly()
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j, y in enumerate(b):
                out[i + j] += x * y
        return Poly(out)

    __rmul__ = __mul__

    def divmod(self, other) -> tuple["Poly", "Poly"]:
        d = Poly.lift(other)
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        q = [Fraction(0)] * max(len(rem) - len(d.coeffs) + 1, 0)
        dl = d.lead
        dd = d.degree
        for k in range(len(q) - 1, -1, -1):
            c = rem[k + dd] / dl
            q[k] = c
            if c:
                for i, dc in enumerate(d.coeffs):
                    rem[k + i] -= c * dc
        return Poly(q), Poly(rem[:dd] if dd > 0 else [])

    def exact_div(self, other) -> "Poly":
        q, r = self.divmod(other)
        if not r.is_zero():
            raise ArithmeticError(f"{self} is not divisible by {other}")
        return q

    def __truediv__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return Poly(c / other for c in self.coeffs)
        return self.exact_div(other)

    def derivative(self) -> "Poly":
        return Poly(i * c for i, c in enumerate(self.coeffs) if i > 0)

    def monic(self) -> "Poly":
        return self / self.lead if self.coeffs else self

    def low_order_zeros(self) -> int:
        """Multiplicity of the root at ``s = 0``."""
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return 0

    def shift_down(self, k: int) -> "Poly":
        """Divide by ``s**k`` (caller guarantees divisibility)."""
        return Poly(self.coeffs[k:])

    def __repr__(self) -> str:
        return f"Poly({[str(c) for c in self.coeffs]})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if k == 0 else ("s" if k == 1 else f"s^{k}")
            if mono and c == 1:
                terms.append(mono)
            elif mono and c == -1:
                terms.append(f"-{mono}")
            elif mono:
                terms.append(f"{_fmt(c)}*{mono}")
            else:
                terms.append(_fmt(c))
        return " + ".join(terms).replace("+ -", "- ")


def _fmt(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"({c})"


Entry = Union[Fraction, Poly]


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd over Q (the zero polynomial if both are zero)."""
    a, b = Poly.lift(a), Poly.lift(b)
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
    return a.monic()


def _is_zero(x) -> bool:
    return x.is_zero() if isinstance(x, Poly) else x == 0


class Matrix:
    """Small dense immutable matrix of Fractions or Polys."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence]):
        conv = []
        width = None
        for r in rows:
            r = tuple(x if isinstance(x, Poly) else as_fraction(x) for x in r)
            if width is None:
                width = len(r)
            elif len(r) != width:
                raise ValueError("ragged matrix")
            conv.append(r)
        self.rows: tuple[tuple[Entry, ...], ...] = tuple(conv)

    @classmethod
    def zeros(cls, n: int, m: int) -> "Matrix":
        return cls([[0] * m for _ in range(n)])

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], nrows: int) -> "Matrix":
        if not cols:
            return cls([[] for _ in range(nrows)])
        return cls([[c[i] for c in cols] for i in range(nrows)])

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), (len(self.rows[0]) if self.rows else 0)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def ncols(self) -> int:
        return self.shape[1]

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def row(self, i: int) -> tuple:
        return self.rows[i]

    def col(self, j: int) -> tuple:
        return tuple(r[j] for r in self.rows)

    def columns(self) -> list[tuple]:
        return [self.col(j) for j in range(self.ncols)]

    def T(self) -> "Matrix":
        n, m = self.shape
        return Matrix([[self.rows[i][j] for i in range(n)] for j in range(m)])

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            n, k = self.shape
            k2, m = other.shape
            if k != k2:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            out = []
            for i in range(n):
                ri = self.rows[i]
                out.append([_dot(ri, [other.rows[t][j] for t in range(k)]) for j in range(m)])
            return Matrix(out)
        # vector
        vec = list(other)
        if len(vec) != self.ncols:
            raise ValueError("vector length mismatch")
        return tuple(_dot(r, vec) for r in self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def is_zero(self) -> bool:
        return all(_is_zero(x) for r in self.rows for x in r)

    def is_polynomial(self) -> bool:
        return any(isinstance(x, Poly) for r in self.rows for x in r)

    def map(self, fn) -> "Matrix":
        return Matrix([[fn(x) for x in r] for r in self.rows])

    def submatrix(self, rows=None, cols=None) -> "Matrix":
        rows = range(self.nrows) if rows is None else rows
        cols = range(self.ncols) if cols is None else cols
        return Matrix([[self.rows[i][j] for j in cols] for i in rows])

    def rank(self) -> int:
        return rref(self)[2]

    def __repr__(self) -> str:
        return "Matrix([\n" + "\n".join("  " + ", ".join(str(x) for x in r) for r in self.rows) + "\n])"


def _dot(a, b):
    acc = Fraction(0)
    for x, y in zip(a, b):
        if _is_zero(x) or _is_zero(y):
            continue
        acc = acc + x * y
    return acc


def rref(m: Matrix) -> tuple[Matrix, list[int], int]:
    """Reduced row-echelon form over Q.

    Returns ``(reduced, pivot_columns, rank)``. Polynomial matrices are
    reduced fraction-free instead; see :func:`fraction_free_rref`.
    """
    if m.is_polynomial():
        reduced, pivots, _ = fraction_free_rref(m)
        return reduced, pivots, len(pivots)
    a = [list(r) for r in m.rows]
    n, ncols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == n:
            break
        p = next((i for i in range(r, n) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(n):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return Matrix(a), pivots, len(pivots)


def fraction_free_rref(m: Matrix) -> tuple[Matrix, list[int], Poly]:
    """Fraction-free Gauss-Jordan elimination over Q[s] (Bareiss).

    Every pivot row ends with the same pivot value ``d`` and all other entries
    of the pivot columns vanish. Each intermediate entry is a minor of the
    input, so the divisions by the previous pivot are exact.
    """
    a = [[Poly.lift(x) for x in r] for r in m.rows]
    n, ncols = m.shape
    pivots: list[int] = []
    prev = Poly.const(1)
    r = 0
    for c in range(ncols):
        if r == n:
            break
        p = next((i for i in range(r, n) if not a[i][c].is_zero()), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        piv = a[r][c]
        for i in range(n):
            if i == r:
                continue
            f = a[i][c]
            a[i] = [(piv * x - f * y).exact_div(prev) for x, y in zip(a[i], a[r])]
        # earlier pivot rows were scaled by piv/prev through the loop above;
        # the current row is left as is so every pivot now equals piv
        pivots.append(c)
        prev = piv
        r += 1
    return Matrix(a), pivots, prev


def nullspace_basis(m: Matrix) -> Matrix:
    """Right kernel basis as columns of an ``ncols x nullity`` matrix.

    Convention: RREF free columns in increasing order, each free variable set
    to 1 in turn with the remaining free variables 0.
    """
    reduced, pivots, rank = rref(m)
    ncols = m.ncols
    free = [j for j in range(ncols) if j not in pivots]
    cols = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -reduced[i, f]
        cols.append(v)
    return Matrix.from_columns(cols, ncols)


class DegenerateLeftNullspace(ValueError):
    """Left nullity differs from what the caller required."""

    def __init__(self, nullity: int, expected: int):
        super().__init__(f"left nullity {nullity}, expected {expected}")
        self.nullity = nullity
        self.expected = expected


def left_nullspace_basis(m: Matrix, expected: int | None = None) -> Matrix:
    """Rows spanning ``{w : w @ m == 0}``.

    Rational input follows the :func:`nullspace_basis` convention applied to
    ``m.T``. Polynomial input is reduced fraction-free, so each row is
    polynomial; rows are then stripped of their polynomial content and scaled
    so the last nonzero entry is 1 when that entry is a constant.
    """
    if not m.is_polynomial():
        basis = nullspace_basis(m.T())
        if expected is not None and basis.ncols != expected:
            raise DegenerateLeftNullspace(basis.ncols, expected)
        return basis.T()
    t = m.T()
    reduced, pivots, d = fraction_free_rref(t)
    ncols = t.ncols
    free = [j for j in range(ncols) if j not in pivots]
    if expected is not None and len(free) != expected:
        raise DegenerateLeftNullspace(len(free), expected)
    rows = []
    for f in free:
        v = [Poly()] * ncols
        v[f] = d
        for i, pc in enumerate(pivots):
            v[pc] = -reduced[i, f]
        rows.append(_normalize_poly_vector(v))
    return Matrix(rows)


def _normalize_poly_vector(v: list[Poly]) -> list[Poly]:
    g = Poly()
    for x in v:
        g = poly_gcd(g, x)
    if not g.is_zero() and g.degree > 0:
        v = [x.exact_div(g) for x in v]
    last = next((x for x in reversed(v) if not x.is_zero()), None)
    if last is None:
        return v
    return [x / last.lead for x in v]


def _sturm_sequence(p: Poly) -> list[Poly]:
    seq = [p, p.derivative()]
    while not seq[-1].is_zero():
        r = seq[-2].divmod(seq[-1])[1]
        seq.append(-r)
    return seq[:-1]


def _sign_variations(seq: list[Poly], x) -> int:
    signs = []
    for q in seq:
        v = q(x)
        if v:
            signs.append(v > 0)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _sign_variations_inf(seq: list[Poly]) -> int:
    signs = [q.lead > 0 for q in seq if not q.is_zero()]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _squarefree(p: Poly) -> Poly:
    g = poly_gcd(p, p.derivative())
    return p.exact_div(g) if g.degree > 0 else p


def positive_root_count(p: Poly) -> int:
    """Number of distinct real roots of ``p`` in ``(0, inf)`` (Sturm)."""
    if p.is_zero():
        raise ValueError("zero polynomial has infinitely many roots")
    p = p.shift_down(p.low_order_zeros())
    if p.degree <= 0:
        return 0
    p = _squarefree(p)
    seq = _sturm_sequence(p)
    return _sign_variations(seq, Fraction(0)) - _sign_variations_inf(seq)


def _cauchy_bound(p: Poly) -> Fraction:
    lead = abs(p.lead)
    return 1 + max(abs(c) / lead for c in p.coeffs[:-1])


def sign_on_positive_axis(p: Poly) -> str:
    """Classify the sign of ``p(s)`` for real ``s > 0``.

    Returns ``"zero"`` (identically zero), ``"negative"``, ``"positive"``
    (a strict sign for all s > 0 except isolated even-multiplicity roots)
    or ``"sign-changing"``. Decided by exact root isolation, no sampling.
    """
    if p.is_zero():
        return "zero"
    core = p.shift_down(p.low_order_zeros())
    if core.degree <= 0:
        return "positive" if core.lead > 0 else "negative"
    sq = _squarefree(core)
    seq = _sturm_sequence(sq)

    def count(a, b):
        return _sign_variations(seq, a) - _sign_variations(seq, b)

    lo, hi = Fraction(0), _cauchy_bound(sq)
    stack = [(lo, hi)]
    signs = set()
    while stack:
        a, b = stack.pop()
        k = count(a, b)
        if k == 0:
            continue
        if k == 1:
            if (core(a) > 0) != (core(b) > 0):
                return "sign-changing"
            signs.add(core(b) > 0)
            continue
        mid = (a + b) / 2
        t = 3
        while sq(mid) == 0:
            mid = a + (b - a) / t
            t += 1
        stack.append((a, mid))
        stack.append((mid, b))
    if not signs:
        signs.add(core(Fraction(1)) > 0)
    return "positive" if signs.pop() else "negative"
