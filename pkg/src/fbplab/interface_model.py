"""Interface-condition systems of "2+2" free boundary problems.

A system is five linear conditions ``G @ U = b`` on the interface, where

    U = (u+_n, u-_n, p+_n, p-_n, u+, u-, p+, p-)

holds the normal derivatives (Neumann block, columns 0-3) followed by the
values (Dirichlet block, columns 4-7) of the two unknowns on each side.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .exact_linalg import Matrix, as_fraction, nullspace_basis, rref

VARIABLE_ORDER = ("u+_n", "u-_n", "p+_n", "p-_n", "u+", "u-", "p+", "p-")
NEUMANN = range(0, 4)
DIRICHLET = range(4, 8)
CLASS_BY_RANK = {4: "A", 3: "B", 2: "C", 1: "D"}
# pure Neumann count that defines the tilde subclass
TILDE_NEUMANN = {"A": 4, "B": 3, "C": 2}


class RankDeficient(ValueError):
    def __init__(self, rank: int):
        super().__init__(f"interface conditions are dependent: rank(G) = {rank} < 5")
        self.rank = rank


class DimensionMismatch(ValueError):
    pass


class MatrixFileError(ValueError):
    pass


@dataclass(frozen=True)
class InterfaceSystem:
    """Five interface conditions ``G U = b``.

    ``flux_basis`` optionally fixes the basis of ``ker G`` in which global
    fluxes are expressed (8x3, columns). Without it the RREF free-variable
    basis is used.
    """

    G: Matrix
    b: tuple[Fraction, ...] = (Fraction(0),) * 5
    flux_basis: Matrix | None = None
    row_labels: tuple[str, ...] = ("c1", "c2", "c3", "c4", "c5")

    def __post_init__(self):
        if self.G.shape != (5, 8):
            raise DimensionMismatch(f"G must be 5x8, got {self.G.shape}")
        b = tuple(as_fraction(x) for x in self.b)
        if len(b) != 5:
            raise DimensionMismatch("b must have 5 entries")
        object.__setattr__(self, "b", b)
        if self.flux_basis is not None:
            fb = self.flux_basis
            if fb.shape != (8, 3):
                raise DimensionMismatch("flux basis must be 8x3")
            if not (self.G @ fb).is_zero() or fb.rank() != 3:
                raise ValueError("flux basis must be 3 independent kernel vectors of G")

    @property
    def G_N(self) -> Matrix:
        return self.G.submatrix(cols=NEUMANN)

    @property
    def G_D(self) -> Matrix:
        return self.G.submatrix(cols=DIRICHLET)


@dataclass(frozen=True)
class ClassReport:
    class_label: str
    rank_GN: int
    rank_GD: int
    pure_dirichlet_count: int
    pure_neumann_count: int
    tilde: bool

    @property
    def name(self) -> str:
        return self.class_label + ("~" if self.tilde else "")


@dataclass(frozen=True)
class BaseState:
    """Flat-interface base solution ``u0 = y r1 + r0``.

    ``U0`` stacks ``r1`` (normal derivatives) on ``r0`` (values); ``U0n`` is
    the shifted vector ``(0, r1)`` entering the linearized interface problem.
    """

    q: tuple[Fraction, ...]
    U0: tuple[Fraction, ...]
    U0n: tuple[Fraction, ...]

    @property
    def r1(self) -> tuple[Fraction, ...]:
        return self.U0[:4]

    @property
    def r0(self) -> tuple[Fraction, ...]:
        return self.U0[4:]


def validate(sys: InterfaceSystem) -> None:
    rank = sys.G.rank()
    if rank != 5:
        raise RankDeficient(rank)


def classify(sys: InterfaceSystem) -> ClassReport:
    """Class from ranks of the Neumann and Dirichlet blocks.

    Independent of :func:`normal_form` so the two cross-check each other.
    """
    validate(sys)
    rn = sys.G_N.rank()
    rd = sys.G_D.rank()
    label = CLASS_BY_RANK[rn]
    pure_n = 5 - rd
    return ClassReport(
        class_label=label,
        rank_GN=rn,
        rank_GD=rd,
        pure_dirichlet_count=5 - rn,
        pure_neumann_count=pure_n,
        tilde=TILDE_NEUMANN.get(label) == pure_n,
    )


# ---------------------------------------------------------------- operations


def op_row(G: Matrix, E: Matrix) -> Matrix:
    """Allowed operation 1: left-multiply by an invertible 5x5 matrix."""
    if E.shape != (5, 5) or E.rank() != 5:
        raise ValueError("row operation must be an invertible 5x5 matrix")
    return E @ G


def op_relabel(G: Matrix) -> Matrix:
    """Allowed operation 2: swap the roles of the two subdomains.

    Swaps columns (0,1), (2,3), (4,5), (6,7); normal derivatives flip sign.
    """
    perm = [1, 0, 3, 2, 5, 4, 7, 6]
    return Matrix(
        [[(-r[perm[j]] if j < 4 else r[perm[j]]) for j in range(8)] for r in G.rows]
    )


_DOMAIN_PAIRS = {"+": (0, 2, 4, 6), "-": (1, 3, 5, 7)}


def op_domain_columns(G: Matrix, domain: str, T: Matrix) -> Matrix:
    """Allowed operations 3/4: invertible 2x2 change of unknowns in one domain.

    Applied identically to the Neumann pair and the Dirichlet pair of that
    domain, i.e. columns (0,2)&(4,6) for ``"+"`` and (1,3)&(5,7) for ``"-"``.
    ``T`` maps the old column pair to the new one: ``new = old @ T``.
    """
    if T.shape != (2, 2) or T.rank() != 2:
        raise ValueError("column operation must be an invertible 2x2 matrix")
    n0, n1, d0, d1 = _DOMAIN_PAIRS[domain]
    rows = []
    for r in G.rows:
        r = list(r)
        for a, b in ((n0, n1), (d0, d1)):
            x, y = r[a], r[b]
            r[a] = x * T[0, 0] + y * T[1, 0]
            r[b] = x * T[0, 1] + y * T[1, 1]
        rows.append(r)
    return Matrix(rows)


def apply_ops(G: Matrix, op_log: Sequence[tuple]) -> Matrix:
    """Replay an op log produced by :func:`normal_form`."""
    for op in op_log:
        kind = op[0]
        if kind == "row":
            G = op_row(G, op[1])
        elif kind == "relabel":
            G = op_relabel(G)
        elif kind == "columns":
            G = op_domain_columns(G, op[1], op[2])
        else:
            raise ValueError(f"unknown operation {kind!r}")
    return G


_SWAP = Matrix([[0, 1], [1, 0]])


def _row_reduce_op(G: Matrix) -> tuple[Matrix, list[tuple]]:
    """RREF of G as a logged row operation (nothing logged if already reduced)."""
    aug = Matrix([list(r) + [1 if i == j else 0 for j in range(5)] for i, r in enumerate(G.rows)])
    red, _, _ = rref(aug)
    # RREF of [G | I] with rank(G) = 5 ends with the transform in the right block
    E = red.submatrix(cols=range(8, 13))
    R = red.submatrix(cols=range(8))
    if R == G:
        return G, []
    return R, [("row", E)]


def normal_form(sys: InterfaceSystem) -> tuple[InterfaceSystem, list[tuple]]:
    """Canonical representative under the allowed operations.

    Fixed pass order:
      1. row-reduce G (Neumann columns lead, so pure Dirichlet rows sink to
         the bottom and pure Neumann rows are zero in the Dirichlet pivots);
      2. pick the in-domain column swaps (u <-> p on either side) that put the
         Dirichlet pivots of the pure Dirichlet rows furthest left;
      3. row-reduce again.
    """
    validate(sys)
    G = sys.G
    ops: list[tuple] = []

    G, log = _row_reduce_op(G)
    ops += log

    rn = sys.G_N.rank()
    n_pure = 5 - rn

    def dirichlet_pivots(M: Matrix) -> tuple[int, ...]:
        _, piv, _ = rref(M.submatrix(rows=range(rn, 5), cols=DIRICHLET))
        return tuple(piv)

    best = None
    for plus in (False, True):
        for minus in (False, True):
            cand = G
            cand_ops = []
            if plus:
                cand = op_domain_columns(cand, "+", _SWAP)
                cand_ops.append(("columns", "+", _SWAP))
            if minus:
                cand = op_domain_columns(cand, "-", _SWAP)
                cand_ops.append(("columns", "-", _SWAP))
            reduced, _ = _row_reduce_op(cand)
            key = (dirichlet_pivots(reduced) if n_pure else (), len(cand_ops))
            if best is None or key < best[0]:
                best = (key, cand, cand_ops)
    _, G, col_ops = best
    ops += col_ops
    if col_ops:
        G, log = _row_reduce_op(G)
        ops += log

    b = sys.b
    for op in ops:
        if op[0] == "row":
            b = op[1] @ b
    canonical = InterfaceSystem(G=G, b=b, row_labels=sys.row_labels)
    return canonical, ops


def pure_rows(G: Matrix) -> tuple[list[int], list[int]]:
    """Indices of rows that are pure Dirichlet and pure Neumann."""
    dirichlet = [i for i, r in enumerate(G.rows) if all(x == 0 for x in r[:4])]
    neumann = [i for i, r in enumerate(G.rows) if all(x == 0 for x in r[4:])]
    return dirichlet, neumann


# ------------------------------------------------------------ base solutions


def nullspace_of_G(sys: InterfaceSystem) -> Matrix:
    if sys.flux_basis is not None:
        return sys.flux_basis
    N = nullspace_basis(sys.G)
    if N.ncols != 3:
        raise DimensionMismatch(f"nullity of G is {N.ncols}, expected 3")
    return N


def particular_solution(sys: InterfaceSystem) -> tuple[Fraction, ...]:
    """Solution of ``G r = b`` with every RREF free variable set to zero."""
    aug = Matrix([list(r) + [bi] for r, bi in zip(sys.G.rows, sys.b)])
    red, piv, _ = rref(aug)
    if 8 in piv:
        raise RankDeficient(sys.G.rank())
    x = [Fraction(0)] * 8
    for i, c in enumerate(piv):
        x[c] = red[i, 8]
    return tuple(x)


def shift(U: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Move entries 0-3 to 4-7 and zero the first four."""
    return (Fraction(0),) * 4 + tuple(U[:4])


def base_solution(sys: InterfaceSystem, q: Sequence) -> BaseState:
    validate(sys)
    q = tuple(as_fraction(x) for x in q)
    if len(q) != 3:
        raise DimensionMismatch("q must have 3 entries")
    N = nullspace_of_G(sys)
    hom = N @ q
    rp = particular_solution(sys)
    U0 = tuple(a + c for a, c in zip(hom, rp))
    return BaseState(q=q, U0=U0, U0n=shift(U0))


def coordinates_in_flux_basis(sys: InterfaceSystem, U: Sequence) -> tuple[Fraction, ...]:
    """Global fluxes q with ``N q + r_P = U``; U must satisfy ``G U = b``."""
    U = [as_fraction(x) for x in U]
    if tuple(sys.G @ U) != sys.b:
        raise ValueError("vector does not satisfy the interface conditions")
    rp = particular_solution(sys)
    rhs = [u - p for u, p in zip(U, rp)]
    N = nullspace_of_G(sys)
    aug = Matrix([list(r) + [v] for r, v in zip(N.rows, rhs)])
    red, piv, _ = rref(aug)
    if 3 in piv:
        raise ValueError("vector is not in the affine solution set")
    return tuple(red[i, 3] for i in range(3))


# ------------------------------------------------------------------ file I/O

_TOKEN = re.compile(r"[^\s,]+")


def parse_matrix_text(text: str) -> InterfaceSystem:
    """Five rows of eight rationals, then one row of five for b. ``#`` comments."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([Fraction(t) for t in _TOKEN.findall(line)])
        except (ValueError, ZeroDivisionError) as exc:
            raise MatrixFileError(f"line {lineno}: {exc}") from None
    if len(rows) != 6:
        raise MatrixFileError(f"expected 6 data rows (5 of G, 1 of b), found {len(rows)}")
    if any(len(r) != 8 for r in rows[:5]):
        raise MatrixFileError("each row of G needs 8 entries")
    if len(rows[5]) != 5:
        raise MatrixFileError("b needs 5 entries")
    return InterfaceSystem(G=Matrix(rows[:5]), b=tuple(rows[5]))


def load_matrix_file(path: str | Path) -> InterfaceSystem:
    return parse_matrix_text(Path(path).read_text())


def format_matrix_text(sys: InterfaceSystem) -> str:
    lines = ["# " + " ".join(VARIABLE_ORDER)]
    lines += [" ".join(str(x) for x in r) for r in sys.G.rows]
    lines.append("# b")
    lines.append(" ".join(str(x) for x in sys.b))
    return "\n".join(lines) + "\n"
