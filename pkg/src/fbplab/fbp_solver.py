"""Residual-velocity iteration for the porous two-zone problem.

Each subdomain is mapped to a unit-height rectangle:

    upper:  y1 = 1 + (y - h(x)) / (L - h(x))   in [1, 2]
    lower:  y2 = y / h(x)                      in [0, 1]

so the interface ``y = h(x)`` becomes the fixed line ``y1 = y2 = 1``. The four
fields live on ``N x N`` node blocks (``N`` periodic x-nodes, ``N`` y-nodes
including both ends). Unknowns are ordered ``[T+, P, T-, s]``, node
``(j, i)`` at offset ``j*N + i``; upper blocks have ``j = 0`` on the
interface, lower blocks ``j = N - 1``.

At every step four interface conditions are enforced, the fifth one's
residual ``R(x)`` is evaluated and the interface moves by ``h += dt R``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .porous_case import REFERENCE_PARAMS, ExactSolution, PorousParams, exact_interface, flat_base_state

log = logging.getLogger(__name__)

RESIDUAL_CHOICES = ("neumann", "dirichlet")
T_PLUS, PRESSURE, T_MINUS, SATURATION = range(4)
EPS_MAP_FRACTION = 1e-3
DIVERGENCE_THRESHOLD = 1e3


class MappingSingular(ValueError):
    def __init__(self, msg: str, step: int | None = None):
        super().__init__(msg if step is None else f"step {step}: {msg}")
        self.step = step


class SolveFailure(RuntimeError):
    def __init__(self, msg: str, residual: float = float("nan"), step: int | None = None):
        super().__init__(msg if step is None else f"step {step}: {msg}")
        self.residual = residual
        self.step = step


def periodic_derivatives(heights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """h' and h'' by periodic central differences on [0, 2 pi)."""
    n = heights.size
    dx = 2.0 * np.pi / n
    up = np.roll(heights, -1)
    dn = np.roll(heights, 1)
    return (up - dn) / (2.0 * dx), (up - 2.0 * heights + dn) / dx**2


@dataclass(frozen=True)
class InterfaceCurve:
    heights: np.ndarray
    L: float
    slope: np.ndarray = field(init=False, repr=False)
    curvature: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = np.array(self.heights, dtype=float)
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)
        eps = EPS_MAP_FRACTION * self.L
        if not np.all(np.isfinite(h)):
            raise MappingSingular("interface height is not finite")
        if h.min() <= eps or self.L - h.max() <= eps:
            raise MappingSingular(
                f"interface left the domain: h in [{h.min():.4g}, {h.max():.4g}], L = {self.L}"
            )
        hp, hpp = periodic_derivatives(h)
        object.__setattr__(self, "slope", hp)
        object.__setattr__(self, "curvature", hpp)

    @classmethod
    def flat(cls, n: int, height: float, L: float) -> "InterfaceCurve":
        return cls(np.full(n, float(height)), L)

    @property
    def n(self) -> int:
        return self.heights.size

    @property
    def x(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n) / self.n


@dataclass(frozen=True)
class MappedGrid:
    N: int
    L: float

    @property
    def dx(self) -> float:
        return 2.0 * np.pi / self.N

    @property
    def dy(self) -> float:
        return 1.0 / (self.N - 1)

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.N)

    @property
    def y1(self) -> np.ndarray:
        return 1.0 + np.linspace(0.0, 1.0, self.N)

    @property
    def y2(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N)

    def physical_y(self, curve: InterfaceCurve, upper: bool) -> np.ndarray:
        """Physical y of every node of a block, shape (N, N)."""
        h = curve.heights[None, :]
        if upper:
            return h + (self.y1[:, None] - 1.0) * (self.L - h)
        return self.y2[:, None] * h


@dataclass(frozen=True)
class MappedOperator:
    """Per-node coefficients of ``A u_yy + u_xx + B u_xy + C u_y``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    upper: bool
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def matrix(self) -> sp.csr_matrix:
        n2 = self.A.size
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(n2, n2))


def _check_grid(curve: InterfaceCurve, grid: MappedGrid) -> None:
    if curve.n != grid.N:
        raise ValueError(f"curve has {curve.n} samples, grid expects {grid.N}")
    if grid.N < 4:
        raise ValueError("N must be at least 4")


def build_mapped_operator(curve: InterfaceCurve, grid: MappedGrid, side: str) -> MappedOperator:
    """Mapped Laplacian of one field block (``side`` is "upper" or "lower")."""
    _check_grid(curve, grid)
    upper = side == "upper"
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    args = (curve.heights, curve.slope, curve.curvature, float(grid.L), grid.N, upper)
    A, B, C = kernels.metric_coefficients(*args)
    rows, cols, vals = kernels.interior_triplets(*args)
    return MappedOperator(A, B, C, upper, rows, cols, vals)


def normal_derivative_operator(curve: InterfaceCurve, grid: MappedGrid, upper: bool) -> sp.csr_matrix:
    """``N x N^2`` map from a block's nodes to its unit-normal derivative on the interface.

    The normal points from the lower to the upper zone. The mapped-y
    derivative uses the one-sided second-order three-point formula; the
    tangential part uses periodic central differences along the interface row.
    """
    n = grid.N
    h, hp = curve.heights, curve.slope
    nrm = np.sqrt(1.0 + hp**2)
    i = np.arange(n)
    if upper:
        jy = (0, 1, 2)
        w = np.array([-3.0, 4.0, -1.0]) / (2.0 * grid.dy)
        metric = (1.0 + hp**2) / (grid.L - h) / nrm
        jrow = 0
    else:
        jy = (n - 1, n - 2, n - 3)
        w = np.array([3.0, -4.0, 1.0]) / (2.0 * grid.dy)
        metric = (1.0 + hp**2) / h / nrm
        jrow = n - 1
    tang = -hp / nrm / (2.0 * grid.dx)
    rows = [i, i, i, i, i]
    cols = [jy[0] * n + i, jy[1] * n + i, jy[2] * n + i, jrow * n + (i + 1) % n, jrow * n + (i - 1) % n]
    vals = [metric * w[0], metric * w[1], metric * w[2], tang, -tang]
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n * n)
    )


@dataclass(frozen=True)
class RunConfig:
    N: int = 10
    dt: float = 0.2
    t_end: float = 24.0
    residual_choice: str = "dirichlet"
    stop_tolerance: float = 1e-10
    solver_tolerance: float = 1e-10
    params: PorousParams = REFERENCE_PARAMS
    divergence_threshold: float = DIVERGENCE_THRESHOLD

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.N < 4:
            raise ValueError("N must be at least 4")
        if self.residual_choice not in RESIDUAL_CHOICES:
            raise ValueError(f"residual_choice must be one of {RESIDUAL_CHOICES}")

    @property
    def L(self) -> float:
        return float(self.params.L)


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    row_kinds: list[str]
    grid: MappedGrid
    curve: InterfaceCurve
    choice: str
    Dn_upper: sp.csr_matrix
    Dn_lower: sp.csr_matrix


def _block_offset(field_index: int, n: int) -> int:
    return field_index * n * n


def assemble(config: RunConfig, curve: InterfaceCurve) -> LinearSystem:
    n = config.N
    grid = MappedGrid(n, config.L)
    _check_grid(curve, grid)
    p = config.params
    Kp, Km = float(p.K_plus), float(p.K_minus)
    n2 = n * n
    size = 4 * n2
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    rhs = np.zeros(size)
    kinds = [""] * size

    def put(r, c, v):
        r = np.asarray(r, dtype=np.int64)
        rows.append(r.ravel())
        cols.append(np.broadcast_to(np.asarray(c, dtype=np.int64), r.shape).ravel())
        vals.append(np.broadcast_to(np.asarray(v, dtype=float), r.shape).ravel())

    def put_sparse(row_start, field_index, M: sp.csr_matrix, scale=1.0):
        coo = M.tocoo()
        put(row_start + coo.row, _block_offset(field_index, n) + coo.col, scale * coo.data)

    up = build_mapped_operator(curve, grid, "upper")
    lo = build_mapped_operator(curve, grid, "lower")
    for f, op in ((T_PLUS, up), (PRESSURE, up), (T_MINUS, lo), (SATURATION, lo)):
        off = _block_offset(f, n)
        put(off + op.rows, off + op.cols, op.vals)
        for r in range(off + n, off + n2 - n):
            kinds[r] = "interior"

    i = np.arange(n)
    top = (n - 1) * n + i
    w_back = np.array([3.0, -4.0, 1.0]) / (2.0 * grid.dy)
    d_top = grid.L - curve.heights
    for k, jj in enumerate((n - 1, n - 2, n - 3)):
        c = jj * n + i
        put(_block_offset(T_PLUS, n) + top, _block_offset(T_PLUS, n) + c, Kp * w_back[k] / d_top)
        put(_block_offset(PRESSURE, n) + top, _block_offset(PRESSURE, n) + c, w_back[k] / d_top)
    rhs[_block_offset(T_PLUS, n) + top] = p.heat_flux(grid.x)
    for r in _block_offset(T_PLUS, n) + top:
        kinds[r] = "top_heat_flux"
    for r in _block_offset(PRESSURE, n) + top:
        kinds[r] = "top_no_vapour_flux"

    bottom = i
    put(_block_offset(T_MINUS, n) + bottom, _block_offset(T_MINUS, n) + bottom, 1.0)
    put(_block_offset(SATURATION, n) + bottom, _block_offset(SATURATION, n) + bottom, 1.0)
    rhs[_block_offset(T_MINUS, n) + bottom] = float(p.T0)
    rhs[_block_offset(SATURATION, n) + bottom] = 1.0
    for r in _block_offset(T_MINUS, n) + bottom:
        kinds[r] = "bottom_temperature"
    for r in _block_offset(SATURATION, n) + bottom:
        kinds[r] = "bottom_saturation"

    Dp = normal_derivative_operator(curve, grid, upper=True)
    Dm = normal_derivative_operator(curve, grid, upper=False)
    iu = i  # interface row of upper blocks
    il = (n - 1) * n + i  # interface row of lower blocks

    # T+ interface rows: temperature continuity
    r0 = _block_offset(T_PLUS, n) + iu
    put(r0, _block_offset(T_PLUS, n) + iu, 1.0)
    put(r0, _block_offset(T_MINUS, n) + il, -1.0)
    # P interface rows: vapour pressure continuity
    r1 = _block_offset(PRESSURE, n) + iu
    put(r1, _block_offset(PRESSURE, n) + iu, 1.0)
    put(r1, _block_offset(T_MINUS, n) + il, -1.0)
    # T- interface rows: heat balance K+ T+_n - K- T-_n + s_n = 0
    r2 = _block_offset(T_MINUS, n) + il
    put_sparse(r2[0], T_PLUS, Dp, Kp)
    put_sparse(r2[0], T_MINUS, Dm, -Km)
    put_sparse(r2[0], SATURATION, Dm, 1.0)
    # s interface rows: s = 0, or mass balance when s is the residual
    r3 = _block_offset(SATURATION, n) + il
    if config.residual_choice == "neumann":
        put(r3, _block_offset(SATURATION, n) + il, 1.0)
        kind3 = "interface_saturation"
    else:
        put_sparse(r3[0], PRESSURE, Dp, 1.0)
        put_sparse(r3[0], T_MINUS, Dm, -1.0)
        put_sparse(r3[0], SATURATION, Dm, -1.0)
        kind3 = "interface_mass"
    for rr, kind in ((r0, "interface_temperature"), (r1, "interface_pressure"), (r2, "interface_heat"), (r3, kind3)):
        for r in rr:
            kinds[r] = kind

    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    )
    return LinearSystem(A, rhs, kinds, grid, curve, config.residual_choice, Dp, Dm)


@dataclass(frozen=True)
class FieldState:
    T_plus: np.ndarray
    P: np.ndarray
    T_minus: np.ndarray
    s: np.ndarray
    residual: float = 0.0

    @classmethod
    def from_vector(cls, u: np.ndarray, n: int, residual: float = 0.0) -> "FieldState":
        blocks = u.reshape(4, n, n)
        return cls(*(b.copy() for b in blocks), residual=residual)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.T_plus.ravel(), self.P.ravel(), self.T_minus.ravel(), self.s.ravel()])


def solve_fixed_boundary(system: LinearSystem, tol: float = 1e-10) -> FieldState:
    """Sparse LU solve; fails if the relative algebraic residual exceeds ``tol``."""
    A, b = system.matrix, system.rhs
    try:
        with np.errstate(all="ignore"):
            u = spla.splu(A.tocsc()).solve(b)
    except RuntimeError as exc:  # exactly singular factor
        raise SolveFailure(f"linear solve failed: {exc}") from None
    if not np.all(np.isfinite(u)):
        raise SolveFailure("linear solve produced non-finite values")
    res = np.linalg.norm(A @ u - b) / max(np.linalg.norm(b), 1e-300)
    if not res <= tol:
        raise SolveFailure(f"relative residual {res:.3e} exceeds {tol:.1e}", residual=res)
    return FieldState.from_vector(u, system.grid.N, residual=res)


def interface_residual(state: FieldState, system: LinearSystem, choice: str | None = None) -> np.ndarray:
    """Residual of the condition that was not enforced, one value per x-node."""
    choice = choice or system.choice
    n = system.grid.N
    if choice == "dirichlet":
        return state.s[n - 1].copy()
    if choice == "neumann":
        return (
            system.Dn_upper @ state.P.ravel()
            - system.Dn_lower @ state.T_minus.ravel()
            - system.Dn_lower @ state.s.ravel()
        )
    raise ValueError(f"unknown residual choice {choice!r}")


def evolve(curve: InterfaceCurve, R: np.ndarray, dt: float) -> InterfaceCurve:
    """Explicit Euler step of ``dh/dt = R`` (vertical motion)."""
    R = np.asarray(R, dtype=float)
    if not np.all(np.isfinite(R)):
        raise MappingSingular("residual is not finite")
    return InterfaceCurve(curve.heights + dt * R, curve.L)


def error_metrics(
    state: FieldState, curve: InterfaceCurve, params: PorousParams = REFERENCE_PARAMS,
    exact_heights: np.ndarray | None = None, frame: str = "mapped",
) -> tuple[float, float, float]:
    """Max-norm errors of interface height, temperature (both zones) and saturation.

    With ``frame="mapped"`` node ``(j, i)`` is compared with the exact field
    at the point the same mapped coordinates reach under the exact interface,
    so the interface-position error is not counted a second time in the
    field errors. ``frame="physical"`` compares at the node's own location.
    """
    if frame not in ("mapped", "physical"):
        raise ValueError("frame must be 'mapped' or 'physical'")
    ex = ExactSolution(params)
    n = curve.n
    grid = MappedGrid(n, float(params.L))
    x = grid.x
    if exact_heights is None:
        exact_heights = exact_interface(x, params)
    err_inf = float(np.max(np.abs(curve.heights - exact_heights)))
    X = np.broadcast_to(x, (n, n))
    ref = InterfaceCurve(exact_heights, float(params.L)) if frame == "mapped" else curve
    yu = grid.physical_y(ref, upper=True)
    yl = grid.physical_y(ref, upper=False)
    err_tp = np.max(np.abs(state.T_plus - ex.T_plus(X, yu)))
    err_tm = np.max(np.abs(state.T_minus - ex.T_minus(X, yl)))
    err_s = np.max(np.abs(state.s - ex.s(X, yl)))
    return err_inf, float(max(err_tp, err_tm)), float(err_s)


@dataclass
class StepRecord:
    step: int
    t: float
    max_residual: float
    err_inf: float


@dataclass
class RunReport:
    config: RunConfig
    trace: list[StepRecord]
    curve: InterfaceCurve
    state: FieldState | None
    err_inf: float
    err_T: float
    err_S: float
    converged: bool
    diverged: bool
    reason: str
    wall_time: float

    @property
    def steps(self) -> int:
        return len(self.trace)

    def residual_history(self) -> np.ndarray:
        return np.array([r.max_residual for r in self.trace])


def initial_curve(config: RunConfig) -> InterfaceCurve:
    y0, _ = flat_base_state(config.params)
    return InterfaceCurve.flat(config.N, float(y0), config.L)


def run_to_steady(
    config: RunConfig,
    curve: InterfaceCurve | None = None,
    on_step: Callable[[StepRecord], None] | None = None,
) -> RunReport:
    """Assemble, solve, measure the residual and move the interface until
    ``t_end`` or until ``max|R| <= stop_tolerance``.

    Blow-up (``max|R|`` above the divergence threshold, or the interface
    leaving the domain) ends the run with ``diverged = True`` instead of
    raising, so unstable time steps yield a report.
    """
    t_start = time.perf_counter()
    curve = curve if curve is not None else initial_curve(config)
    params = config.params
    comparable = params.K_plus == params.K_minus
    try:
        ExactSolution(params)
    except ValueError:
        comparable = False
    x = MappedGrid(config.N, config.L).x
    exact_h = exact_interface(x, params) if comparable else None

    trace: list[StepRecord] = []
    state: FieldState | None = None
    diverged = False
    reason = "t_end reached"
    t = 0.0
    step = 0
    n_steps = int(math.floor(config.t_end / config.dt + 1e-9))
    while True:
        try:
            system = assemble(config, curve)
            state = solve_fixed_boundary(system, config.solver_tolerance)
        except MappingSingular as exc:
            raise MappingSingular(str(exc), step) from None
        except SolveFailure as exc:
            raise SolveFailure(str(exc), exc.residual, step) from None
        R = interface_residual(state, system)
        max_r = float(np.max(np.abs(R)))
        e_inf = float(np.max(np.abs(curve.heights - exact_h))) if exact_h is not None else float("nan")
        rec = StepRecord(step, t, max_r, e_inf)
        trace.append(rec)
        if on_step is not None:
            on_step(rec)
        if not np.isfinite(max_r) or max_r > config.divergence_threshold:
            diverged, reason = True, f"max|R| = {max_r:.3g} exceeded {config.divergence_threshold:g}"
            break
        if max_r <= config.stop_tolerance:
            reason = "residual below stop tolerance"
            break
        if step >= n_steps:
            break
        try:
            curve = evolve(curve, R, config.dt)
        except MappingSingular as exc:
            diverged, reason = True, f"interface left the domain at step {step + 1} ({exc})"
            log.info("run diverged: %s", reason)
            break
        step += 1
        t = step * config.dt

    if comparable and state is not None:
        e_inf, e_t, e_s = error_metrics(state, curve, params, exact_h)
    else:
        e_inf = e_t = e_s = float("nan")
    final_r = trace[-1].max_residual
    converged = (not diverged) and final_r <= config.stop_tolerance
    return RunReport(
        config=config,
        trace=trace,
        curve=curve,
        state=state,
        err_inf=e_inf,
        err_T=e_t,
        err_S=e_s,
        converged=converged,
        diverged=diverged,
        reason=reason,
        wall_time=time.perf_counter() - t_start,
    )


def decay_factor(history, window: tuple[float, float] = (1e-9, 1e-3)) -> float:
    """Geometric-mean per-step ratio of ``max|R|`` while it lies in ``window``."""
    h = np.asarray(history, dtype=float)
    lo, hi = window
    idx = np.flatnonzero((h >= lo) & (h <= hi))
    if idx.size < 2:
        return float("nan")
    a, b = idx[0], idx[-1]
    return float((h[b] / h[a]) ** (1.0 / (b - a)))
