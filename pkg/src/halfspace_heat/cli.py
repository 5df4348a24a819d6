"""Command-line front end: ``run``, ``verify`` and ``converge``.

Configs are YAML files with the sections ``problem``, ``time``, ``source``,
``initial``, ``tangential`` (n-d only), ``tolerances``, ``field`` and the
scalar ``output``. Unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import scipy
import yaml

from . import __version__, adomian
from .errors import DomainError, HeatFluxError, NumericError
from .greens import (
    ConstantProfile,
    GaussianBump,
    InitialProfile,
    SpacePoint,
    TabulatedProfile,
    initial_flux_function,
)
from .specfun import SQRT_PI
from .suites import SUITES, run_suite
from .volterra1d import (
    SourceLaw,
    TimeGrid,
    flux_from_g,
    solve_abel_nonlinear,
    solve_smooth_linear,
    temperature_1d,
)
from .volterrand import (
    TangentialGrid,
    apriori_kernel_bound,
    reconstruct_temperature_nd,
    solve_flux_nd,
)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
#: largest N reached by a convergence study
MAX_STEPS = 1 << 16

NAMED_LAWS = {
    # name: (F(a) for lam = 1, Lipschitz constant for lam = 1)
    "tanh": (np.tanh, 1.0),
    "sine": (np.sin, 1.0),
    "saturating": (lambda a: a / (1.0 + np.abs(a)), 1.0),
}


class ConfigError(DomainError):
    """Invalid or malformed configuration."""


# {{{ config


@dataclass(frozen=True)
class SourceSpec:
    law: str = "linear"
    coefficient: float = 1.0

    def build(self) -> SourceLaw:
        if self.law == "linear":
            return SourceLaw.linear(self.coefficient)
        func, lip = NAMED_LAWS[self.law]
        lam = self.coefficient
        if lam == 0:
            return SourceLaw.zero()
        return SourceLaw.custom(lambda a: lam * func(a), abs(lam) * lip, name=f"{self.law}({lam:g})")


@dataclass(frozen=True)
class InitialSpec:
    form: str = "constant"
    h0: float = 1.0
    amplitude: float = 1.0
    center_x: float = 1.0
    width: float = 1.0
    center_y: tuple[float, ...] = ()
    x: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def build(self, n: int) -> InitialProfile:
        if self.form == "constant":
            return ConstantProfile(self.h0)
        if self.form == "gaussian":
            cy = self.center_y or (0.0,) * (n - 1)
            if len(cy) != n - 1:
                raise ConfigError(f"initial.center_y needs {n - 1} entries, got {len(cy)}")
            return GaussianBump(self.amplitude, self.center_x, self.width, cy)
        return TabulatedProfile(np.asarray(self.x), np.asarray(self.values))


@dataclass(frozen=True)
class Tolerances:
    series_tail: float = 1e-10
    max_terms: int = 400
    bound: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    """Validated run description; see the module docstring for the layout."""

    problem: str = "1d"
    n: int = 1
    T: float = 1.0
    N: int = 256
    source: SourceSpec = SourceSpec()
    initial: InitialSpec = InitialSpec()
    half_width: Optional[float] = None
    points: Optional[int] = None
    output: str = "out"
    tolerances: Tolerances = Tolerances()
    field_points: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.problem not in ("1d", "nd"):
            raise ConfigError(f"problem.kind must be '1d' or 'nd', got {self.problem!r}")
        if self.problem == "1d":
            if self.n != 1:
                raise ConfigError("1d problems have n = 1")
            if self.half_width is not None or self.points is not None:
                raise ConfigError("1d configs must not carry a tangential section")
        else:
            if self.n not in (2, 3):
                raise ConfigError(f"problem.n must be 2 or 3 for nd, got {self.n}")
            if self.half_width is None or self.points is None:
                raise ConfigError("nd configs need tangential.half_width and tangential.points")
            if not self.half_width > 0:
                raise ConfigError("tangential.half_width must be positive")
            if self.points < 3 or self.points % 2 == 0:
                raise ConfigError("tangential.points must be odd and >= 3")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ConfigError(f"time.T must be positive, got {self.T}")
        if self.N < 2:
            raise ConfigError(f"time.N must be >= 2, got {self.N}")
        if self.source.law != "linear" and self.source.law not in NAMED_LAWS:
            raise ConfigError(f"unknown source law {self.source.law!r}")
        if not math.isfinite(self.source.coefficient):
            raise ConfigError("source.lambda must be finite")
        if self.initial.form not in ("constant", "gaussian", "tabulated"):
            raise ConfigError(f"unknown initial form {self.initial.form!r}")
        if self.initial.form == "tabulated" and self.n != 1:
            raise ConfigError("tabulated profiles are one-dimensional")
        if not self.tolerances.series_tail > 0 or self.tolerances.max_terms < 1:
            raise ConfigError("tolerances must be positive")
        if self.tolerances.bound is not None and not self.tolerances.bound > 0:
            raise ConfigError("tolerances.bound must be positive")
        for pt in self.field_points:
            if len(pt) != self.n + 1:
                raise ConfigError(f"field point {pt} needs x, {self.n - 1} y values and t")
            if pt[0] < 0 or not 0 < pt[-1] <= self.T:
                raise ConfigError(f"field point {pt} needs x >= 0 and 0 < t <= T")

    @property
    def constant_h0(self) -> Optional[float]:
        return self.initial.h0 if self.initial.form == "constant" else None

    @property
    def linear_constant(self) -> bool:
        return self.source.law == "linear" and self.constant_h0 is not None

    # serialization

    def to_dict(self) -> dict[str, Any]:
        problem: dict[str, Any] = {"kind": self.problem}
        if self.problem == "nd":
            problem["n"] = self.n
        src = {"law": self.source.law, "lambda": self.source.coefficient}
        init = {"form": self.initial.form}
        if self.initial.form == "constant":
            init["h0"] = self.initial.h0
        elif self.initial.form == "gaussian":
            init.update(amplitude=self.initial.amplitude, center_x=self.initial.center_x,
                        width=self.initial.width, center_y=list(self.initial.center_y))
        else:
            init.update(x=list(self.initial.x), values=list(self.initial.values))
        tol = {"series_tail": self.tolerances.series_tail, "max_terms": self.tolerances.max_terms}
        if self.tolerances.bound is not None:
            tol["bound"] = self.tolerances.bound
        out: dict[str, Any] = {
            "problem": problem,
            "time": {"T": self.T, "N": self.N},
            "source": src,
            "initial": init,
        }
        if self.problem == "nd":
            out["tangential"] = {"half_width": self.half_width, "points": self.points}
        out["output"] = self.output
        out["tolerances"] = tol
        if self.field_points:
            out["field"] = {"points": [list(p) for p in self.field_points]}
        return out

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: Any) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        top = _Section(data, "config", {"problem", "time", "source", "initial", "tangential",
                                        "output", "tolerances", "field"})
        problem = _Section(top.get("problem", {}), "problem", {"kind", "n"})
        kind = str(problem.get("kind", "1d"))
        n = _int(problem.get("n", 1 if kind == "1d" else 2), "problem.n")
        time = _Section(top.get("time", {}), "time", {"T", "N"})
        src = _Section(top.get("source", {}), "source", {"law", "lambda"})
        init = _Section(top.get("initial", {}), "initial",
                        {"form", "h0", "amplitude", "center_x", "width", "center_y", "x", "values"})
        tol = _Section(top.get("tolerances", {}), "tolerances", {"series_tail", "max_terms", "bound"})
        fld = _Section(top.get("field", {}), "field", {"points"})
        half_width = points = None
        if "tangential" in top:
            tan = _Section(top.get("tangential"), "tangential", {"half_width", "points"})
            half_width = _float(tan.get("half_width"), "tangential.half_width")
            points = _int(tan.get("points"), "tangential.points")
        defaults = InitialSpec()
        initial = InitialSpec(
            form=str(init.get("form", "constant")),
            h0=_float(init.get("h0", defaults.h0), "initial.h0"),
            amplitude=_float(init.get("amplitude", defaults.amplitude), "initial.amplitude"),
            center_x=_float(init.get("center_x", defaults.center_x), "initial.center_x"),
            width=_float(init.get("width", defaults.width), "initial.width"),
            center_y=_floats(init.get("center_y", ()), "initial.center_y"),
            x=_floats(init.get("x", ()), "initial.x"),
            values=_floats(init.get("values", ()), "initial.values"),
        )
        bound = tol.get("bound")
        cfg = cls(
            problem=kind,
            n=n,
            T=_float(time.get("T", 1.0), "time.T"),
            N=_int(time.get("N", 256), "time.N"),
            source=SourceSpec(law=str(src.get("law", "linear")),
                              coefficient=_float(src.get("lambda", 1.0), "source.lambda")),
            initial=initial,
            half_width=half_width,
            points=points,
            output=str(top.get("output", "out")),
            tolerances=Tolerances(
                series_tail=_float(tol.get("series_tail", 1e-10), "tolerances.series_tail"),
                max_terms=_int(tol.get("max_terms", 400), "tolerances.max_terms"),
                bound=None if bound is None else _float(bound, "tolerances.bound"),
            ),
            field_points=tuple(_floats(p, "field.points") for p in fld.get("points", ()) or ()),
        )
        # building the profile validates its parameters
        try:
            cfg.initial.build(cfg.n)
        except DomainError as exc:
            raise ConfigError(f"initial: {exc}") from exc
        return cfg

    @classmethod
    def loads(cls, text: str) -> RunConfig:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | os.PathLike) -> RunConfig:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.loads(text)


class _Section:
    """Mapping wrapper that rejects keys outside ``allowed``."""

    def __init__(self, data: Any, name: str, allowed: set[str]) -> None:
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        unknown = sorted(set(map(str, data)) - allowed)
        if unknown:
            raise ConfigError(f"unknown key(s) in {name}: {', '.join(unknown)}")
        self.data, self.name = data, name

    def __contains__(self, key: str) -> bool:
        return key in self.data

    def get(self, key: str, default: Any = None) -> Any:
        return self.data.get(key, default)


def _float(v: Any, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    try:
        return float(v)
    except ValueError as exc:
        raise ConfigError(f"{name} must be a number, got {v!r}") from exc


def _int(v: Any, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    return v


def _floats(v: Any, name: str) -> tuple[float, ...]:
    if not isinstance(v, (list, tuple)):
        raise ConfigError(f"{name} must be a list, got {v!r}")
    return tuple(_float(x, name) for x in v)


# }}}


# {{{ solving


@dataclass
class Outcome:
    t: np.ndarray
    flux: np.ndarray
    A: np.ndarray
    U: Optional[np.ndarray]
    field_rows: list[tuple[float, ...]] = field(default_factory=list)
    achieved: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _v0_constant(h0: float):
    return lambda t: h0 / np.sqrt(np.pi * t)


def solve(cfg: RunConfig, N: Optional[int] = None) -> Outcome:
    """Run the configured solve on ``N`` steps (default ``cfg.N``)."""
    grid = TimeGrid(cfg.T, N or cfg.N)
    F = cfg.source.build()
    h = cfg.initial.build(cfg.n)
    if cfg.problem == "1d":
        h0 = cfg.constant_h0
        v0 = _v0_constant(h0) if h0 is not None else initial_flux_function(h)
        trace = solve_abel_nonlinear(F, v0, grid)
        U = None
        if cfg.linear_constant:
            c = 2 * F.coefficient / SQRT_PI
            U = solve_smooth_linear(c, lambda t: 2 * h0 * np.sqrt(t / np.pi), grid)
        out = Outcome(t=grid.nodes, flux=trace.W, A=trace.A, U=U)
        for pt in cfg.field_points:
            x, t = pt
            out.field_rows.append((x, t, temperature_1d(x, t, trace, F, h)))
    else:
        space = TangentialGrid(cfg.n, cfg.half_width, cfg.points)
        hist = solve_flux_nd(F, h, grid, space)
        out = Outcome(t=grid.nodes, flux=hist.V_origin, A=hist.A_origin, U=None,
                      warnings=list(hist.warnings))
        bound = cfg.tolerances.bound or float(np.max(np.abs(hist.A))) * (1 + 1e-12)
        out.achieved["apriori_ratio"] = apriori_kernel_bound(hist, F, bound) if bound > 0 else 0.0
        for pt in cfg.field_points:
            p = SpacePoint(pt[0], tuple(pt[1:-1]))
            out.field_rows.append((*pt, reconstruct_temperature_nd(p, pt[-1], hist, F, h)))
    if cfg.linear_constant:
        trunc = adomian.SeriesTruncation(max_terms=cfg.tolerances.max_terms,
                                         tail_tolerance=cfg.tolerances.series_tail)
        _, W_ref = adomian.series_total_flux(F.coefficient, cfg.constant_h0, cfg.T, trunc)
        out.achieved["series_flux_at_T"] = W_ref
        out.achieved["flux_minus_series_at_T"] = float(out.flux[-1] - W_ref)
    return out


def _fmt(v: Optional[float]) -> str:
    if v is None or not math.isfinite(v):
        return ""
    return f"{v:.17g}"


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def flux_csv(cfg: RunConfig, out: Outcome) -> str:
    header = ["t", "W" if cfg.problem == "1d" else "V", "A", "U"]
    U = out.U if out.U is not None else [None] * out.t.size
    rows = ((out.t[i], out.flux[i], out.A[i], U[i]) for i in range(1, out.t.size))
    return _csv_text(header, rows)


def field_csv(cfg: RunConfig, out: Outcome) -> str:
    ys = [f"y{k}" for k in range(1, cfg.n)]
    return _csv_text(["x", *ys, "t", "u"], out.field_rows)


def _versions() -> dict[str, str]:
    return {"halfspace_heat": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


# }}}


# {{{ commands


def _report(msg: str, quiet: bool) -> None:
    if not quiet:
        print(msg)


def cmd_run(cfg: RunConfig, outdir: Path, quiet: bool) -> int:
    out = solve(cfg)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_atomic(outdir / "flux.csv", flux_csv(cfg, out))
    if cfg.field_points:
        _write_atomic(outdir / "field.csv", field_csv(cfg, out))
    meta = {"config": cfg.to_dict(), "versions": _versions(), "achieved": out.achieved,
            "warnings": out.warnings}
    _write_atomic(outdir / "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    _report(f"wrote {outdir / 'flux.csv'} ({out.t.size - 1} rows)", quiet)
    return EXIT_OK


def convergence_table(cfg: RunConfig, refinements: int) -> list[tuple[int, float, float]]:
    """``(N, error, order)`` rows for the quantity at ``t = T``.

    Linear source with constant data is measured against the series; for
    one-dimensional problems the quantity is the wall flux assembled from
    the smooth-kernel solution ``g``. Other configs use the finest grid.
    """
    sizes = [cfg.N * 2**k for k in range(refinements)]
    if cfg.linear_constant:
        lam, h0 = cfg.source.coefficient, cfg.constant_h0
        trunc = adomian.SeriesTruncation(max_terms=cfg.tolerances.max_terms,
                                         tail_tolerance=cfg.tolerances.series_tail)
        _, ref = adomian.series_total_flux(lam, h0, cfg.T, trunc)
        values = []
        for N in sizes:
            if cfg.problem == "1d":
                grid = TimeGrid(cfg.T, N)
                g = solve_smooth_linear(2 * lam / SQRT_PI, lambda t: np.ones_like(t), grid)
                values.append(float(flux_from_g(g, h0, lam, grid).W[-1]))
            else:
                values.append(float(solve(cfg, N).flux[-1]))
        errors = [abs(v - ref) for v in values]
    else:
        values = [float(solve(cfg, N).flux[-1]) for N in sizes]
        errors = [abs(v - values[-1]) for v in values]
    rows = []
    for k, (N, e) in enumerate(zip(sizes, errors)):
        order = math.nan
        if k > 0 and e > 0 and errors[k - 1] > 0:
            order = math.log2(errors[k - 1] / e)
        rows.append((N, e, order))
    return rows


def cmd_converge(cfg: RunConfig, refinements: int, outdir: Path, quiet: bool) -> int:
    rows = convergence_table(cfg, refinements)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_atomic(outdir / "converge.csv",
                  _csv_text(["N", "error", "order"], ((float(N), e, o) for N, e, o in rows)))
    for N, e, o in rows:
        _report(f"N={N:<8d} error={e:.6e} order={'' if math.isnan(o) else f'{o:.3f}'}", quiet)
    return EXIT_OK


def cmd_verify(suite: str, quiet: bool) -> int:
    checks = run_suite(suite)
    for c in checks:
        _report(c.line(), quiet)
    failed = sum(not c.passed for c in checks)
    _report(f"{len(checks) - failed}/{len(checks)} invariants passed", quiet)
    return EXIT_OK if failed == 0 else EXIT_VERIFY


# }}}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse already exits with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--tolerance", type=float, metavar="X", help="series tail tolerance (overrides config)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = _Parser(prog="halfspace-heat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", parents=[common], help="solve a configured problem")
    run.add_argument("config")
    ver = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    ver.add_argument("suite", choices=[*SUITES, "all"])
    conv = sub.add_parser("converge", parents=[common], help="convergence study under grid doubling")
    conv.add_argument("config")
    conv.add_argument("--refinements", type=int, required=True, metavar="K")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    quiet = bool(args.quiet)
    if args.command == "verify":
        return cmd_verify(args.suite, quiet)
    try:
        cfg = RunConfig.load(args.config)
        if args.tolerance is not None:
            cfg = replace(cfg, tolerances=replace(cfg.tolerances, series_tail=args.tolerance))
        if args.command == "converge":
            if args.refinements < 2:
                raise ConfigError(f"--refinements must be >= 2, got {args.refinements}")
            if cfg.N * 2 ** (args.refinements - 1) > MAX_STEPS:
                raise ConfigError(f"finest grid would exceed {MAX_STEPS} steps")
    except DomainError as exc:
        print(f"halfspace-heat: {exc}", file=sys.stderr)
        return EXIT_USAGE
    outdir = Path(args.output if args.output is not None else cfg.output)
    try:
        if args.command == "run":
            return cmd_run(cfg, outdir, quiet)
        return cmd_converge(cfg, args.refinements, outdir, quiet)
    except NumericError as exc:
        print(f"halfspace-heat: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HeatFluxError as exc:
        print(f"halfspace-heat: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
