"""Command-line front end.

    fbplab analyze --config run.ini
    fbplab solve   --config run.ini --out results/
    fbplab tables  [--quick] [--jobs 4] --out results/

Configuration is an INI file. Sections and keys (all optional):

    [system]    matrix = porous | <path to matrix file>
                K_plus, K_minus, L, T0, flux_mean, flux_amplitude   (p/q rationals)
    [analysis]  mode = 2d | 3d
                q = from-data | q1, q2, q3                          (p/q rationals)
                velocities = default | e1; e5; 1,0,0,0,1 ...
    [solver]    N, dt, t_end, residual_choice, stop_tolerance, solver_tolerance
    [output]    directory, formats = text, csv

Exit codes: 0 success, 1 usage or runtime error, 2 ill-posed base state,
3 degenerate system or no stable velocity candidate.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .exact_linalg import DegenerateLeftNullspace
from .fbp_solver import MappingSingular, RunConfig, RunReport, SolveFailure, run_to_steady
from .interface_model import (
    InterfaceSystem,
    MatrixFileError,
    RankDeficient,
    classify,
    load_matrix_file,
    nullspace_of_G,
)
from .porous_case import NoFlatState, PorousParams, build_porous_system, flat_base_state
from .stability import (
    DEFAULT_CANDIDATES,
    AllDegenerate,
    DegenerateGM,
    SpectralMode,
    VelocityChoice,
    format_number,
    left_null_w,
    rank_velocities,
    ranking_csv,
)

log = logging.getLogger("fbplab")

EXIT_OK, EXIT_ERROR, EXIT_ILL_POSED, EXIT_DEGENERATE = 0, 1, 2, 3

_ALLOWED = {
    "system": {"matrix", "k_plus", "k_minus", "l", "t0", "flux_mean", "flux_amplitude"},
    "analysis": {"mode", "q", "velocities"},
    "solver": {"n", "dt", "t_end", "residual_choice", "stop_tolerance", "solver_tolerance"},
    "output": {"directory", "formats"},
}
_PARAM_KEYS = {
    "k_plus": "K_plus",
    "k_minus": "K_minus",
    "l": "L",
    "t0": "T0",
    "flux_mean": "flux_mean",
    "flux_amplitude": "flux_amplitude",
}


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    matrix: str = "porous"
    params: PorousParams = field(default_factory=PorousParams)
    mode: SpectralMode = field(default_factory=SpectralMode)
    q: tuple[Fraction, ...] | None = None  # None means "from-data"
    velocities: tuple[VelocityChoice, ...] = DEFAULT_CANDIDATES
    run: RunConfig = field(default_factory=RunConfig)
    out_dir: Path | None = None
    formats: tuple[str, ...] = ("text", "csv")

    @property
    def builtin(self) -> bool:
        return self.matrix == "porous"


def _rational(text: str, key: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: expected a rational like 3/2, got {text!r}") from None


def _rational_list(text: str, key: str) -> tuple[Fraction, ...]:
    return tuple(_rational(t, key) for t in text.split(",") if t.strip())


def _velocities(text: str) -> tuple[VelocityChoice, ...]:
    if text.strip().lower() == "default":
        return DEFAULT_CANDIDATES
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        if item[0] in "eE" and item[1:].isdigit():
            k = int(item[1:])
            if not 1 <= k <= 5:
                raise ConfigError(f"velocities: unit residual {item} out of range e1..e5")
            out.append(VelocityChoice.unit(k))
            continue
        try:
            out.append(VelocityChoice(_rational_list(item, "velocities")))
        except ValueError as exc:
            raise ConfigError(f"velocities: {exc}") from None
    if not out:
        raise ConfigError("velocities: empty candidate list")
    return tuple(out)


def parse_config(text: str, base_dir: Path | None = None) -> Config:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    for section in cp.sections():
        if section not in _ALLOWED:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(cp[section]) - _ALLOWED[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")

    cfg = Config()
    if cp.has_section("system"):
        sec = cp["system"]
        matrix = sec.get("matrix", "porous").strip()
        if matrix != "porous" and base_dir is not None and not Path(matrix).is_absolute():
            matrix = str(base_dir / matrix)
        cfg.matrix = matrix
        kw = {_PARAM_KEYS[k]: _rational(v, k) for k, v in sec.items() if k in _PARAM_KEYS}
        try:
            cfg.params = PorousParams(**kw)
        except ValueError as exc:
            raise ConfigError(f"[system]: {exc}") from None

    if cp.has_section("analysis"):
        sec = cp["analysis"]
        mode = sec.get("mode", "2d").strip().lower()
        if mode not in ("2d", "3d"):
            raise ConfigError("mode must be 2d or 3d")
        cfg.mode = SpectralMode(int(mode[0]))
        q = sec.get("q", "from-data").strip()
        if q.lower() != "from-data":
            cfg.q = _rational_list(q, "q")
            if len(cfg.q) != 3:
                raise ConfigError(f"q needs 3 entries, got {len(cfg.q)}")
        if "velocities" in sec:
            cfg.velocities = _velocities(sec["velocities"])

    kw = {"params": cfg.params}
    if cp.has_section("solver"):
        sec = cp["solver"]
        try:
            if "n" in sec:
                kw["N"] = sec.getint("n")
            for key in ("dt", "t_end", "stop_tolerance", "solver_tolerance"):
                if key in sec:
                    kw[key] = sec.getfloat(key)
        except ValueError as exc:
            raise ConfigError(f"[solver]: {exc}") from None
        if "residual_choice" in sec:
            kw["residual_choice"] = sec["residual_choice"].strip().lower()
    try:
        cfg.run = RunConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"[solver]: {exc}") from None

    if cp.has_section("output"):
        sec = cp["output"]
        if "directory" in sec:
            d = Path(sec["directory"].strip())
            cfg.out_dir = d if d.is_absolute() or base_dir is None else base_dir / d
        if "formats" in sec:
            fmts = tuple(f.strip().lower() for f in sec["formats"].split(",") if f.strip())
            bad = set(fmts) - {"text", "csv"}
            if bad or not fmts:
                raise ConfigError(f"formats must be text and/or csv, got {sec['formats']!r}")
            cfg.formats = fmts
    return cfg


def load_config(path: str | None) -> Config:
    if path is None:
        return Config()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, p.parent)


# ------------------------------------------------------------------ analyze


def _system(cfg: Config) -> InterfaceSystem:
    if cfg.builtin:
        return build_porous_system(cfg.params)
    return load_matrix_file(cfg.matrix)


def _fluxes(cfg: Config) -> tuple[Fraction, ...]:
    if cfg.q is not None:
        return cfg.q
    if not cfg.builtin:
        raise ConfigError("q = from-data needs the builtin porous system; give q explicitly")
    _, base = flat_base_state(cfg.params)
    return base.q


def _vec(xs) -> str:
    return "(" + ", ".join(str(x) for x in xs) + ")"


def analysis_report(cfg: Config) -> tuple[str, str, int]:
    """Text report, ranking CSV and exit code for one analysis."""
    sys_ = _system(cfg)
    q = _fluxes(cfg)
    cls = classify(sys_)
    lines = [
        f"system: {cfg.matrix}",
        f"class: {cls.name} (rank G_N = {cls.rank_GN}, rank G_D = {cls.rank_GD}, "
        f"pure Dirichlet rows = {cls.pure_dirichlet_count}, pure Neumann rows = {cls.pure_neumann_count})",
        "nullspace basis of G (columns):",
    ]
    N = nullspace_of_G(sys_)
    lines += [f"  n{k + 1} = {_vec(col)}" for k, col in enumerate(zip(*N.rows))]
    lines.append(f"global fluxes q = {_vec(q)}")
    w = left_null_w(sys_, cfg.mode)
    lines.append(f"w(s), s = {cfg.mode.symbol}:")
    lines += [f"  w{k + 1} = {wk}" for k, wk in enumerate(w)]
    report = rank_velocities(sys_, q, cfg.velocities, cfg.mode)
    form = report.form
    lines.append(f"well-posedness form: {form.poly}")
    lines.append(f"base state U0 = {_vec(form.base.U0)}")
    lines.append("ill-posed" if report.ill_posed else "well-posed (form nonzero for all s > 0)")
    lines.append("velocity candidates (best first):")
    for e in report.entries:
        if e.profile is None:
            lines.append(f"  {e.velocity.label:>12}  degenerate (w^T v = 0)")
        else:
            p = e.profile
            lines.append(
                f"  {e.velocity.label:>12}  {e.category:<15} growth {p.growth_order:+d}  "
                f"sign {p.stable_sign:<13} lambda(s) = {p}"
            )
    best = report.best
    if report.ill_posed:
        code = EXIT_ILL_POSED
    elif best is None:
        code = EXIT_DEGENERATE
        lines.append("no stable velocity candidate")
    else:
        code = EXIT_OK
        lines.append(f"best velocity: {best.velocity.label}, lambda(s) = {best.profile}")
    return "\n".join(lines) + "\n", ranking_csv(report), code


def cmd_analyze(cfg: Config) -> int:
    try:
        text, table, code = analysis_report(cfg)
    except (DegenerateGM, AllDegenerate, RankDeficient, DegenerateLeftNullspace) as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    print(text, end="")
    _write(cfg, {"analysis.txt": text}, {"ranking.csv": table})
    return code


# -------------------------------------------------------------------- solve


def _write(cfg: Config, texts: dict[str, str], csvs: dict[str, str]) -> None:
    if cfg.out_dir is None:
        return
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if "text" in cfg.formats:
        for name, body in texts.items():
            (cfg.out_dir / name).write_text(body)
    if "csv" in cfg.formats:
        for name, body in csvs.items():
            (cfg.out_dir / name).write_text(body)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()


def trace_csv(report: RunReport) -> str:
    return _csv(
        ["step", "t", "max_residual", "err_inf"],
        [
            [r.step, format_number(r.t), format_number(r.max_residual), format_number(r.err_inf)]
            for r in report.trace
        ],
    )


def run_summary(report: RunReport) -> str:
    c = report.config
    return (
        f"N={c.N} dt={c.dt:g} residual={c.residual_choice} steps={report.steps} "
        f"status={_status(report)} errInf={format_number(report.err_inf)} "
        f"errT={format_number(report.err_T)} errS={format_number(report.err_S)}"
    )


def _status(report: RunReport) -> str:
    if report.diverged:
        return "diverged"
    return "converged" if report.converged else "not-converged"


def cmd_solve(cfg: Config) -> int:
    if not cfg.builtin:
        raise ConfigError("solve supports only the builtin porous system")
    try:
        report = run_to_steady(cfg.run)
    except (SolveFailure, MappingSingular, NoFlatState) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    line = run_summary(report)
    print(line)
    text = line + f"\nreason: {report.reason}\nwall time: {report.wall_time:.2f} s\n"
    summary = _csv(
        ["N", "dt", "residual_choice", "steps", "status", "err_inf", "err_T", "err_S"],
        [[
            report.config.N, format_number(report.config.dt), report.config.residual_choice,
            report.steps, _status(report), format_number(report.err_inf),
            format_number(report.err_T), format_number(report.err_S),
        ]],
    )
    _write(cfg, {"report.txt": text}, {"report.csv": summary, "trace.csv": trace_csv(report)})
    return EXIT_ERROR if report.diverged else EXIT_OK


# ------------------------------------------------------------------- tables

# (N, dt, residual choice) cells of the three reference tables
TABLE1 = [(n, 0.02, "neumann") for n in (10, 20, 40)]
TABLE2 = [(n, 0.2, "dirichlet") for n in (10, 20, 40)]
TABLE3 = [
    (10, 0.2, "neumann"), (10, 0.15, "neumann"), (10, 0.12, "neumann"), (10, 0.2, "dirichlet"),
    (20, 0.12, "neumann"), (20, 0.08, "neumann"), (20, 0.06, "neumann"), (20, 0.2, "dirichlet"),
    (40, 0.06, "neumann"), (40, 0.04, "neumann"), (40, 0.03, "neumann"), (40, 0.2, "dirichlet"),
]


@dataclass(frozen=True)
class Cell:
    N: int
    dt: float
    choice: str
    status: str
    err_inf: float = float("nan")
    err_T: float = float("nan")
    err_S: float = float("nan")
    steps: int = 0

    @property
    def failed(self) -> bool:
        return self.status in ("diverged", "error")


def run_cell(base: RunConfig, key: tuple[int, float, str]) -> Cell:
    n, dt, choice = key
    cfg = replace(base, N=n, dt=dt, residual_choice=choice)
    try:
        rep = run_to_steady(cfg)
    except (SolveFailure, MappingSingular) as exc:
        log.warning("cell N=%d dt=%g %s failed: %s", n, dt, choice, exc)
        return Cell(n, dt, choice, "error")
    return Cell(n, dt, choice, _status(rep), rep.err_inf, rep.err_T, rep.err_S, rep.steps)


def _cell_value(cell: Cell, v: float) -> str:
    return cell.status if cell.failed else format_number(v)


def _ratio(prev: Cell | None, cur: Cell, attr: str) -> str:
    if prev is None or prev.failed or cur.failed:
        return "***"
    return f"{getattr(prev, attr) / getattr(cur, attr):.3f}"


def convergence_rows(cells: list[Cell]) -> list[list[str]]:
    rows, prev = [], None
    for c in cells:
        row = [f"{c.N}x{c.N}"]
        for attr in ("err_inf", "err_T", "err_S"):
            row += [_cell_value(c, getattr(c, attr)), _ratio(prev, c, attr)]
        rows.append(row)
        prev = c
    return rows


def stability_rows(cells: list[Cell]) -> list[list[str]]:
    rv = {"neumann": "VN", "dirichlet": "VD"}
    return [
        [f"{c.N}x{c.N}", f"{c.dt:g}", rv[c.choice], c.status,
         _cell_value(c, c.err_inf), _cell_value(c, c.err_T), _cell_value(c, c.err_S)]
        for c in cells
    ]


CONV_HEADER = ["grid", "errInf", "ratio", "errT", "ratio", "errS", "ratio"]
STAB_HEADER = ["grid", "dt", "RV", "status", "errInf", "errT", "errS"]


def format_table(title: str, header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    fmt = "  ".join(f"{{:>{w}}}" for w in widths)
    lines = [title, fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*r) for r in rows]
    return "\n".join(lines) + "\n"


def compute_tables(base: RunConfig, quick: bool = False, jobs: int = 1) -> dict[str, list[Cell]]:
    sizes = (10, 20) if quick else (10, 20, 40)
    grids = {
        "table1": [k for k in TABLE1 if k[0] in sizes],
        "table2": [k for k in TABLE2 if k[0] in sizes],
        "table3": [k for k in TABLE3 if k[0] in sizes],
    }
    # each distinct cell is run once, in a fixed order
    keys = list(dict.fromkeys(k for g in grids.values() for k in g))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(run_cell, [base] * len(keys), keys))
    else:
        cells = [run_cell(base, k) for k in keys]
    done = dict(zip(keys, cells))
    return {name: [done[k] for k in g] for name, g in grids.items()}


def cmd_tables(cfg: Config, quick: bool, jobs: int) -> int:
    if not cfg.builtin:
        raise ConfigError("tables supports only the builtin porous system")
    tables = compute_tables(cfg.run, quick, jobs)
    specs = {
        "table1": ("Convergence, neumann residual velocity, dt = 0.02", CONV_HEADER, convergence_rows),
        "table2": ("Convergence, dirichlet residual velocity, dt = 0.2", CONV_HEADER, convergence_rows),
        "table3": ("Stability, residual velocity versus time step", STAB_HEADER, stability_rows),
    }
    texts, csvs, out = {}, {}, []
    for name, (title, header, rows_fn) in specs.items():
        rows = rows_fn(tables[name])
        out.append(format_table(title, header, rows))
        csvs[f"{name}.csv"] = _csv(header, rows)
    text = "\n".join(out)
    print(text, end="")
    texts["tables.txt"] = text
    _write(cfg, texts, csvs)
    return EXIT_OK


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fbplab", description="Interface analysis and residual-velocity solver.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("analyze", "classify the interface system and rank residual velocities"),
        ("solve", "run the porous free-boundary solver to steady state"),
        ("tables", "reproduce the convergence and stability tables"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", help="output directory (overrides [output] directory)")
        if name == "tables":
            p.add_argument("--quick", action="store_true", help="only N = 10 and 20")
            p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg.out_dir = Path(args.out)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        return cmd_tables(cfg, args.quick, max(1, args.jobs))
    except (ConfigError, MatrixFileError, NoFlatState, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
