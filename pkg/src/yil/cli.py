"""Command-line driver: one subcommand per computation, CSV or JSON output.

Settings are merged in three layers: built-in defaults, then a JSON file given
with ``--config``, then explicit flags.  Every number written is rendered with
12 significant digits so that identical settings give byte-identical files.

Exit status: 0 on success, 2 for invalid input, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .curve import (CurveError, CurveSystem, ProximityError, annulus_system, disk_system, ellipse_system,
                    isoperimetric_deficit)
from .energy import DEFAULT_TOL, energy_boundary, energy_bulk, fmt12, halfplane_constant, second_order_terms
from .flow import TopologyError, flow_run
from .io import atomic_write_text
from .limits import (LIMIT_CSV_HEADER, PHASE_CSV_HEADER, TIE_TOL, SolverError, centered_hole_scan,
                     limit_rows, phase_diagram)
from .parallel import resolve_threads
from .physics import KERNEL_CSV_HEADER, MonolayerParams, farfield_slope, kernel_rows, yukawa_crossover
from .quadrature import QuadratureError, richardson
from .raster import RasterizationError
from .specfun import DomainError, ScreeningParams

SUBCOMMANDS = ("energy", "expansion", "phase", "flow", "centered", "kernels", "validate")
SHAPES = ("disk", "ellipse", "annulus", "file")
ENERGY_METHODS = ("bulk", "boundary", "anisotropic", "both", "all")
QUADRATURES = ("rays", "layer")
EXPANSION_HEADER = "lambda,scaled_remainder,richardson"
CENTERED_HEADER = "offset,f_value,est_error"
VALIDATE_HEADER = "check,value,expected,abs_err,tolerance,status"

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (QuadratureError, SolverError, TopologyError, RasterizationError, ProximityError,
                    FloatingPointError)
INVALID_ERRORS = (ValueError, CurveError, DomainError, OSError, KeyError, TypeError)


class ConfigError(ValueError):
    """Settings that do not describe a runnable computation."""


def _float_list(value) -> tuple:
    if isinstance(value, str):
        parts = [p for p in value.replace(" ", "").split(",") if p]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        parts = [value]
    try:
        return tuple(float(p) for p in parts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {value!r}") from exc


@dataclass
class RunConfig:
    """Fully merged settings of one run."""

    subcommand: str
    shape: str = "disk"
    radius: float = 1.0
    axes: tuple = (2.0, 1.0)
    area: float | None = math.pi
    r_inner: float = 4.0
    r_outer: float | None = None
    path: str | None = None
    n: int = 256
    lam: float | None = None
    alpha: float | None = None
    sigma: float | None = None
    method: str = "both"
    quadrature: str = "rays"
    tol: float = DEFAULT_TOL
    h: float = 0.01
    shifts: int = 4
    seed: int = 0
    lambdas: tuple = (16.0, 32.0, 64.0)
    sigmas: tuple = (0.05, 0.112736, 0.2)
    tie_tol: float = TIE_TOL
    offsets: tuple = (0.0, 0.1, 0.2, 0.3, 0.4)
    steps: int = 200
    dt_safety: float = 0.2
    energy_every: int = 10
    snapshot_every: int | None = None
    snapshot_dir: str | None = None
    rs: tuple = tuple(float(x) for x in np.geomspace(0.1, 100.0, 25))
    kappa: float = 1.0
    eps_d: float = 80.0
    out: str | None = None
    threads: int | None = None
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for name in ("axes", "lambdas", "sigmas", "offsets", "rs"):
            setattr(self, name, _float_list(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if self.extra:
            raise ConfigError(f"unknown setting(s): {', '.join(sorted(self.extra))}")
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.shape not in SHAPES:
            raise ConfigError(f"unknown shape {self.shape!r}; choose from {', '.join(SHAPES)}")
        if self.shape == "file" and not self.path:
            raise ConfigError("shape 'file' needs --path")
        if self.shape != "file" and self.path:
            raise ConfigError(f"--path only applies to shape 'file', not {self.shape!r}")
        if self.shape == "ellipse" and (len(self.axes) != 2 or min(self.axes) <= 0):
            raise ConfigError("ellipse needs two positive semi-axes")
        if self.shape == "disk" and not self.radius > 0:
            raise ConfigError("disk radius must be positive")
        if self.shape == "annulus" and not (self.r_inner > 0 and (self.r_outer is None or self.r_outer > self.r_inner)):
            raise ConfigError("annulus needs 0 < r_inner < r_outer")
        if self.area is not None and not self.area > 0:
            raise ConfigError("area must be positive")
        if self.n < 16:
            raise ConfigError("need at least 16 samples per curve")
        if self.method not in ENERGY_METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(ENERGY_METHODS)}")
        if self.quadrature not in QUADRATURES:
            raise ConfigError(f"unknown quadrature {self.quadrature!r}")
        if not 1e-10 < self.tol < 1e-2:
            raise ConfigError("tol must lie in (1e-10, 1e-2)")
        for name in ("h", "dt_safety", "kappa"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.shifts < 1 or self.steps < 0 or self.energy_every < 1:
            raise ConfigError("shifts and energy_every must be >= 1 and steps >= 0")
        if self.eps_d < 1:
            raise ConfigError("eps_d must be >= 1")
        if any(x <= 0 for x in self.lambdas) or any(x <= 0 for x in self.rs):
            raise ConfigError("lambdas and rs must be positive")
        if self.threads is not None:
            resolve_threads(self.threads)

    # -- derived objects ------------------------------------------------------------
    def system(self) -> CurveSystem:
        """The curve system named by the shape settings."""
        if self.shape == "disk":
            return disk_system(self.radius, self.n)
        if self.shape == "ellipse":
            return ellipse_system(self.axes[0], self.axes[1], self.n, area=self.area)
        if self.shape == "annulus":
            return annulus_system(self.r_inner, self.r_outer, self.n)
        return CurveSystem.load(self.path)

    def params(self) -> ScreeningParams:
        """ScreeningParams from lam with either alpha or sigma."""
        if self.lam is None:
            raise ConfigError("--lambda is required")
        if (self.alpha is None) == (self.sigma is None):
            raise ConfigError("give exactly one of --alpha and --sigma")
        if self.sigma is not None:
            return ScreeningParams.from_sigma(self.lam, self.sigma)
        return ScreeningParams(self.lam, self.alpha)

    @classmethod
    def from_mapping(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)} - {"extra"}
        kwargs = {k: v for k, v in doc.items() if k in known}
        kwargs["extra"] = {k: v for k, v in doc.items() if k not in known}
        return cls(**kwargs)


# -- per-subcommand defaults that differ from the RunConfig field defaults -----------------

SUBCOMMAND_DEFAULTS = {
    "energy": {},
    "expansion": {"alpha": None},
    "phase": {},
    # at lambda = 16 the driving force is O(lambda**-2) while dt is capped by the
    # curvature CFL, so relaxing the ellipse to a deficit below 1e-2 takes thousands of steps
    "flow": {"shape": "ellipse", "axes": (1.2, 1.0 / 1.2), "n": 64, "lam": 16.0, "sigma": 1.0, "steps": 6000,
             "energy_every": 100},
    "centered": {"radius": 1.0, "lam": 2.0, "alpha": 1.0},
    "kernels": {},
    "validate": {},
}


def _rounded(obj):
    """Round floats through the 12-digit format so JSON output is stable."""
    if isinstance(obj, float):
        return float(fmt12(obj)) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _csv(header: str, rows) -> str:
    return "\n".join([header, *rows]) + "\n"


# -- subcommands ------------------------------------------------------------------------------


def run_energy(cfg: RunConfig) -> int:
    system, params = cfg.system(), cfg.params()
    threads = resolve_threads(cfg.threads)
    wanted = {"bulk": ["bulk"], "boundary": ["boundary"], "anisotropic": ["anisotropic"],
              "both": ["bulk", "boundary"], "all": ["bulk", "boundary", "anisotropic"]}[cfg.method]
    reports = []
    for m in wanted:
        if m == "bulk":
            reports.append(energy_bulk(system, params, cfg.h, cfg.shifts, cfg.seed))
        else:
            quad = "rays" if m == "anisotropic" else cfg.quadrature
            reports.append(energy_boundary(system, params, cfg.tol, anisotropic=m == "anisotropic",
                                           quadrature=quad, threads=threads))
    doc = {"lambda": params.lam, "alpha": params.alpha, "sigma": params.sigma, "shape": cfg.shape,
           "perimeter": system.perimeter, "area": system.area,
           "reports": [r.to_dict() for r in reports]}
    if len(reports) > 1:
        gap = max(abs(a.total - b.total) for a in reports for b in reports)
        budget = min(a.est_error + b.est_error for a in reports for b in reports if a is not b)
        doc["max_total_gap"] = gap
        doc["totals_agree"] = bool(gap <= budget)
    _emit(json.dumps(_rounded(doc), indent=2, sort_keys=True) + "\n", cfg.out)
    return EXIT_OK


def run_expansion(cfg: RunConfig) -> int:
    system = cfg.system()
    threads = resolve_threads(cfg.threads)
    if cfg.sigma is not None:
        if cfg.alpha is not None:
            raise ConfigError("the critical mode derives alpha from --sigma; drop --alpha")
        if not cfg.sigma > 0:
            raise ConfigError("sigma must be positive")
        rows = limit_rows(system, cfg.sigma, cfg.lambdas, cfg.quadrature, threads=threads)
        _emit(_csv(LIMIT_CSV_HEADER, rows), cfg.out)
        return EXIT_OK
    alpha = 1.0 if cfg.alpha is None else cfg.alpha
    lams = sorted(cfg.lambdas)
    ratios = [b / a for a, b in zip(lams[:-1], lams[1:])]
    if ratios and max(ratios) - min(ratios) > 1e-12 * max(ratios):
        raise ConfigError("Richardson extrapolation needs geometrically spaced lambdas")
    ratio = ratios[0] if ratios else 2.0
    terms = second_order_terms(system, alpha, lams, cfg.tol, cfg.quadrature, threads)
    rows = []
    for k, (lam, val) in enumerate(terms):
        extra = fmt12(richardson([v for _, v in terms[: k + 1]], ratio)) if k else ""
        rows.append(",".join([fmt12(lam), fmt12(val), extra]))
    _emit(_csv(EXPANSION_HEADER, rows), cfg.out)
    return EXIT_OK


def run_phase(cfg: RunConfig) -> int:
    rows = phase_diagram(cfg.sigmas, tie_tol=cfg.tie_tol)
    _emit(_csv(PHASE_CSV_HEADER, [r.csv_row() for r in rows]), cfg.out)
    return EXIT_OK


def run_flow(cfg: RunConfig) -> int:
    system = cfg.system()
    if cfg.area is not None and abs(system.area - cfg.area) > 1e-9 * cfg.area:
        system = system.scaled(math.sqrt(cfg.area / system.area))
    state = flow_run(system, cfg.params(), cfg.steps, cfg.dt_safety, cfg.energy_every,
                     area=cfg.area if cfg.area is not None else system.area, trace_path=None,
                     snapshot_every=cfg.snapshot_every, snapshot_dir=cfg.snapshot_dir)
    _emit(state.trace_csv(), cfg.out)
    summary = {"steps": state.step_index, "final_deficit": isoperimetric_deficit(state.system),
               "final_energy": state.energy_history[-1], "final_residual": state.residual_history[-1]}
    sys.stderr.write(json.dumps(_rounded(summary), sort_keys=True) + "\n")
    return EXIT_OK


def run_centered(cfg: RunConfig) -> int:
    if cfg.lam is None or cfg.alpha is None:
        raise ConfigError("centered scan needs --lambda and --alpha")
    rows = centered_hole_scan(cfg.radius, cfg.lam, cfg.alpha, cfg.offsets, cfg.h, cfg.shifts, cfg.seed, cfg.n)
    _emit(_csv(CENTERED_HEADER, [",".join(map(fmt12, (r.offset, r.f_value, r.est_error))) for r in rows]),
          cfg.out)
    return EXIT_OK


def run_kernels(cfg: RunConfig) -> int:
    p = MonolayerParams(q=1.0, rho=1.0, eps0=1.0, kappa_D=cfg.kappa, gamma_line=1.0, eps_d=cfg.eps_d)
    rows = kernel_rows(p, [r / cfg.kappa for r in cfg.rs])
    _emit(_csv(KERNEL_CSV_HEADER, rows), cfg.out)
    cross = yukawa_crossover(p)
    summary = {"farfield_slope": farfield_slope(p), "crossover_kappa_r": cross}
    sys.stderr.write(json.dumps(_rounded(summary), sort_keys=True) + "\n")
    return EXIT_OK


def validation_rows(threads: int | None = None) -> tuple[list, bool]:
    """Half-plane constant at (1, 1) and bulk/boundary equality on the unit disk."""
    rows, ok = [], True

    def add(name, value, expected, tolerance):
        nonlocal ok
        err = abs(value - expected)
        passed = err <= tolerance
        ok &= passed
        rows.append(",".join([name, fmt12(value), fmt12(expected), fmt12(err), fmt12(tolerance),
                              "pass" if passed else "fail"]))

    add("halfplane_constant", halfplane_constant(1.0, 1.0), -2.0, 1e-8)
    disk, params = disk_system(1.0, 256), ScreeningParams(2.0, 1.0)
    bulk = energy_bulk(disk, params, 0.01)
    bound = energy_boundary(disk, params, threads=threads)
    add("representation_disk", bulk.total, bound.total, bulk.est_error + bound.est_error)
    return rows, ok


def run_validate(cfg: RunConfig) -> int:
    rows, ok = validation_rows(resolve_threads(cfg.threads))
    _emit(_csv(VALIDATE_HEADER, rows), cfg.out)
    if not ok:
        sys.stderr.write("yil: validation checks failed\n")
        return EXIT_NUMERICAL
    return EXIT_OK


RUNNERS = {"energy": run_energy, "expansion": run_expansion, "phase": run_phase, "flow": run_flow,
           "centered": run_centered, "kernels": run_kernels, "validate": run_validate}


def dispatch(cfg: RunConfig) -> int:
    """Run the computation selected by ``cfg.subcommand`` and return the exit status."""
    return RUNNERS[cfg.subcommand](cfg)


# -- argument parsing -------------------------------------------------------------------------

HELP = {
    "energy": "Screened perimeter energy of one shape in the raster (bulk) form, the boundary form, "
              "or both; JSON with one report per method.",
    "expansion": "Large-lambda behaviour at fixed shape. Default: lambda**2 times the nonlocal part "
                 "at fixed alpha with Richardson extrapolation toward the 1/(4 alpha**4) coefficient "
                 "on disks. With --sigma: the critical scaling lambda**2 F against the "
                 "perimeter-plus-elastica limit value.",
    "phase": "Disk versus optimal annulus in the perimeter-plus-elastica limit problem, one CSV row "
             "per sigma with the winner.",
    "flow": "Area-preserving gradient flow of the screened energy from a single closed curve; "
            "writes the step,energy,area,residual trace.",
    "centered": "Raster self-interaction of an annulus whose hole is shifted off-center, one row "
                "per offset.",
    "kernels": "Exact interface kernel of a charged monolayer versus its Yukawa approximation; "
               "far-field slope and crossover go to stderr.",
    "validate": "Quick self-check: half-plane constant at lambda = alpha = 1 and bulk/boundary "
                "equality on the unit disk at lambda = 2, alpha = 1.",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", dest="config_path", metavar="PATH", help="JSON file of settings; flags override it")
    p.add_argument("--out", help="output file (written atomically); stdout if omitted")
    p.add_argument("--threads", type=int, help="worker threads (fallback: $YIL_THREADS, then 1)")


def _add_shape(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("shape")
    g.add_argument("--shape", choices=SHAPES)
    g.add_argument("--radius", type=float, help="disk radius")
    g.add_argument("--axes", help="ellipse semi-axes a,b (rescaled to --area)")
    g.add_argument("--area", type=float, help="target area for ellipses and the flow")
    g.add_argument("--r-inner", dest="r_inner", type=float, help="annulus inner radius")
    g.add_argument("--r-outer", dest="r_outer", type=float,
                   help="annulus outer radius (default sqrt(1 + r_inner**2))")
    g.add_argument("--path", help="curve-system JSON file for shape 'file'")
    g.add_argument("-n", "--samples", dest="n", type=int, help="samples per curve")


def _add_screening(p: argparse.ArgumentParser, sigma: bool = True) -> None:
    g = p.add_argument_group("screening")
    g.add_argument("--lambda", dest="lam", type=float, help="mass scale lambda")
    g.add_argument("--alpha", type=float, help="screening alpha")
    if sigma:
        g.add_argument("--sigma", type=float, help="critical-regime perimeter coefficient (sets alpha)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="yil", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=HELP[name], description=HELP[name], argument_default=argparse.SUPPRESS)
        _add_common(p)
        if name in ("energy", "expansion", "flow"):
            _add_shape(p)
        if name in ("energy", "flow"):
            _add_screening(p)
        if name in ("energy", "expansion"):
            p.add_argument("--tol", type=float, help="radial truncation and quadrature tolerance")
            p.add_argument("--quadrature", choices=QUADRATURES,
                           help="boundary inner integral by ray casting or by the single-layer identity")
        if name in ("energy", "centered"):
            p.add_argument("--h", type=float, help="raster spacing")
            p.add_argument("--shifts", type=int, help="number of random sub-cell grid offsets")
            p.add_argument("--seed", type=int, help="seed for the grid offsets")
        if name == "energy":
            p.add_argument("--method", choices=ENERGY_METHODS)
        elif name == "expansion":
            p.add_argument("--alpha", type=float, help="fixed screening alpha (default 1)")
            p.add_argument("--sigma", type=float, help="switch to the critical scaling with this sigma")
            p.add_argument("--lambdas", help="comma-separated, geometrically spaced lambdas")
        elif name == "phase":
            p.add_argument("--sigmas", help="comma-separated sigmas")
            p.add_argument("--tie-tol", dest="tie_tol", type=float, help="energy tie tolerance")
        elif name == "flow":
            p.add_argument("--steps", type=int)
            p.add_argument("--dt-safety", dest="dt_safety", type=float, help="time-step safety factor")
            p.add_argument("--energy-every", dest="energy_every", type=int, help="trace row interval")
            p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
            p.add_argument("--snapshot-dir", dest="snapshot_dir")
        elif name == "centered":
            p.add_argument("--radius", type=float, help="hole radius r (outer radius sqrt(1 + r**2))")
            _add_screening(p, sigma=False)
            p.add_argument("--offsets", help="comma-separated hole offsets along e1")
            p.add_argument("-n", "--samples", dest="n", type=int, help="samples on the outer circle")
        elif name == "kernels":
            p.add_argument("--rs", help="comma-separated distances in units of 1/kappa")
            p.add_argument("--kappa", type=float, help="Debye screening constant")
            p.add_argument("--eps-d", dest="eps_d", type=float, help="relative permittivity of the electrolyte")
    return parser


def config_from_args(argv=None) -> RunConfig:
    """Defaults, then the --config file, then explicit flags."""
    ns = vars(build_parser().parse_args(argv))
    sub = ns.pop("subcommand")
    merged = dict(SUBCOMMAND_DEFAULTS[sub])
    path = ns.pop("config_path", None)
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        doc = {("lam" if k == "lambda" else k): v for k, v in doc.items()}
        if doc.pop("subcommand", sub) != sub:
            raise ConfigError(f"{path}: subcommand does not match {sub!r}")
        merged.update(doc)
    merged.update(ns)
    return RunConfig.from_mapping({"subcommand": sub, **merged})


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except INVALID_ERRORS as exc:
        sys.stderr.write(f"yil: invalid input: {_one_line(exc)}\n")
        return EXIT_INVALID
    try:
        return dispatch(cfg)
    except NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"yil: numerical failure: {_one_line(exc)}\n")
        return EXIT_NUMERICAL
    except INVALID_ERRORS as exc:
        sys.stderr.write(f"yil: invalid input: {_one_line(exc)}\n")
        return EXIT_INVALID


def _one_line(exc: BaseException) -> str:
    text = " ".join(str(exc).split())
    return f"{type(exc).__name__}: {text}" if text else type(exc).__name__


if __name__ == "__main__":
    sys.exit(main())
