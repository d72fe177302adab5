"""Command-line surface: kernels, metrics, projections, scans, verification.

Conventions shared by every subcommand:

* complex scalars on the command line are "re,im"; a point lists the
  coordinates in order, so a point of the two-dimensional ball reads
  "re1,im1,re2,im2"; several points are separated by semicolons.
* --domain takes disc, ball:N, polydisc:N, or thullen:ALPHA.
* ranges are start:stop:kind:count with kind linear or geometric.
* output is CSV (RFC 4180, one header row) or JSON ({"meta", "rows"});
  CSV carries a leading "# generated ..." comment line unless
  --reproducible is set.  Files are written to a temp path and renamed,
  so failures leave no partial output.

Exit codes: 0 success, 1 bad configuration or unknown suite, 2 at least
one solve failed to converge (its row is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .basis import check_exponent, set_fft_workers
from .domains import QuadratureRule, build_quadrature, default_orders, make_domain
from .errors import PBergmanError, ParameterError
from .lab import DEFAULT_SEED, levi_estimate, p_scan
from .solver import default_degree, offdiagonal, project_lp, solve_metric, solve_point_minimizer
from .suites import SUITE_NAMES, run_suite

_BOOL_KEYS = {"reproducible", "plot"}
_INT_KEYS = {"degree", "radial_order", "angular_order", "seed", "threads", "angles", "samples"}
_FLOAT_KEYS = {"tol", "alpha"}


# --------------------------------------------------------------------------
# argument parsing helpers
# --------------------------------------------------------------------------

def _parse_domain(text: str):
    name, _, tail = text.partition(":")
    name = name.strip().lower()
    if name == "disc":
        if tail:
            raise ParameterError("disc takes no parameter")
        return make_domain("disc")
    if name in ("ball", "polydisc"):
        try:
            n = int(tail) if tail else 1
        except ValueError:
            raise ParameterError(f"bad dimension {tail!r} in domain {text!r}") from None
        return make_domain(name, n)
    if name == "thullen":
        try:
            alpha = float(tail) if tail else 1.0
        except ValueError:
            raise ParameterError(f"bad alpha {tail!r} in domain {text!r}") from None
        return make_domain("thullen", alpha=alpha)
    raise ParameterError(f"unknown domain {text!r}; use disc, ball:N, polydisc:N, thullen:ALPHA")


def _parse_point(text: str, dimension: int) -> np.ndarray:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError:
        raise ParameterError(f"bad point {text!r}; expected comma-separated floats") from None
    if len(parts) != 2 * dimension:
        raise ParameterError(
            f"point {text!r} has {len(parts)} components; dimension {dimension} needs {2 * dimension}"
        )
    return np.array([complex(parts[2 * i], parts[2 * i + 1]) for i in range(dimension)])


def _parse_points(text: str, dimension: int) -> list:
    chunks = [c for c in text.split(";") if c.strip()]
    if not chunks:
        raise ParameterError("no points given")
    return [_parse_point(c, dimension) for c in chunks]


def _parse_p_list(text: str) -> list:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"bad p list {text!r}") from None
    if not values:
        raise ParameterError("empty p list")
    return [check_exponent(p) for p in values]


def _parse_p_grid(text: str) -> list:
    parts = text.split(":")
    if len(parts) != 4:
        raise ParameterError(f"bad range {text!r}; expected start:stop:kind:count")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[3])
    except ValueError:
        raise ParameterError(f"bad range {text!r}") from None
    kind = parts[2].strip().lower()
    if count < 2:
        raise ParameterError("a range needs at least 2 values")
    if kind == "linear":
        grid = np.linspace(start, stop, count)
    elif kind == "geometric":
        if start <= 0 or stop <= 0:
            raise ParameterError("geometric ranges need positive endpoints")
        grid = np.geomspace(start, stop, count)
    else:
        raise ParameterError(f"unknown range kind {kind!r}; use linear or geometric")
    return [check_exponent(p) for p in grid]


def _parse_float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"bad float list {text!r}") from None


# --------------------------------------------------------------------------
# output formatting
# --------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def _fmt_point(z) -> str:
    return ",".join(f"{c.real:.12g},{c.imag:.12g}" for c in np.atleast_1d(z))


def _fmt_coefficients(coeff) -> str:
    return ";".join(f"{c.real:.12g},{c.imag:.12g}" for c in np.asarray(coeff))


def _json_value(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return [_json_value(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


@dataclass
class RunConfig:
    """Validated shared settings for one CLI invocation."""

    command: str
    rule: QuadratureRule
    degree: int
    fmt: str
    out: Optional[str]
    seed: int
    tol: Optional[float]
    threads: int
    reproducible: bool
    plot: bool

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        domain = _parse_domain(args.domain)
        degree = int(args.degree)
        if degree < 0:
            raise ParameterError("degree must be nonnegative")
        radial, angular = default_orders(degree)
        if args.radial_order is not None:
            radial = int(args.radial_order)
        if args.angular_order is not None:
            angular = int(args.angular_order)
        rule = build_quadrature(domain, radial, angular)
        if default_degree(rule) < degree:
            raise ParameterError(
                f"angular order {angular} cannot support degree {degree}"
            )
        threads = int(args.threads)
        if threads < 1:
            raise ParameterError("threads must be at least 1")
        fmt = args.format.lower()
        if fmt not in ("csv", "json"):
            raise ParameterError(f"unknown format {args.format!r}")
        tol = float(args.tol) if args.tol is not None else None
        return cls(
            command=args.command, rule=rule, degree=degree, fmt=fmt, out=args.out,
            seed=int(args.seed), tol=tol, threads=threads,
            reproducible=bool(args.reproducible), plot=bool(args.plot),
        )

    def meta(self, **extra) -> dict:
        d = self.rule.domain
        meta = {
            "command": self.command,
            "version": __version__,
            "domain": d.describe(),
            "dimension": d.dimension,
            "degree": self.degree,
            "radial_order": self.rule.radial_order,
            "angular_order": self.rule.angular_order,
            "seed": self.seed,
        }
        if self.tol is not None:
            meta["tol"] = self.tol
        if not self.reproducible:
            meta["generated"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        meta.update(extra)
        return meta


def _atomic_write(path: str, payload: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    tmp = os.path.join(directory, f".{os.path.basename(path)}.tmp{os.getpid()}")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(config: RunConfig, meta: dict, columns: list, rows: list) -> None:
    """Serialize rows (list of dicts) and write them out."""
    if config.fmt == "json":
        body = {
            "meta": _json_value_dict(meta),
            "rows": [{k: _json_value(r[k]) for k in columns} for r in rows],
        }
        payload = json.dumps(body, indent=2, sort_keys=False) + "\n"
    else:
        buffer = io.StringIO()
        if not config.reproducible and "generated" in meta:
            buffer.write(f"# generated {meta['generated']}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in columns])
        payload = buffer.getvalue()
    if config.out:
        _atomic_write(config.out, payload)
    else:
        sys.stdout.write(payload)


def _json_value_dict(d: dict) -> dict:
    return {k: _json_value(v) for k, v in d.items()}


def _run_ordered(tasks, threads: int) -> list:
    if threads <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda task: task(), tasks))


def _plot_path(out: str) -> str:
    stem, _ = os.path.splitext(out)
    return stem + ".png"


def _note_no_plot(config: RunConfig) -> None:
    if config.plot:
        print(f"note: no figure is defined for {config.command}", file=sys.stderr)


def _exit_code(rows, key="converged") -> int:
    return 0 if all(r.get(key, True) for r in rows) else 2


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_kernel(config: RunConfig, args) -> int:
    points = _parse_points(args.z, config.rule.domain.dimension)
    p_values = _parse_p_list(args.p)

    def task(z, p):
        def run():
            rep = solve_point_minimizer(config.rule, p, z, degree=config.degree, tol=config.tol)
            return {
                "z": _fmt_point(z), "p": p,
                "m": rep.optimal_value,
                "kernel": rep.optimal_value ** (-p),
                "kkt_residual": rep.kkt_residual,
                "converged": rep.converged,
            }
        return run

    tasks = [task(z, p) for z in points for p in p_values]
    rows = _run_ordered(tasks, config.threads)
    columns = ["z", "p", "m", "kernel", "kkt_residual", "converged"]
    _emit(config, config.meta(p=p_values), columns, rows)
    _note_no_plot(config)
    return _exit_code(rows)


def cmd_offdiag(config: RunConfig, args) -> int:
    n = config.rule.domain.dimension
    zs = _parse_points(args.z, n)
    ws = _parse_points(args.w, n)
    if len(zs) != len(ws):
        raise ParameterError(f"{len(zs)} z points but {len(ws)} w points")
    p_values = _parse_p_list(args.p)

    def task(z, w, p):
        def run():
            res = offdiagonal(config.rule, p, z, w, degree=config.degree, tol=config.tol)
            return {
                "z": _fmt_point(z), "w": _fmt_point(w), "p": p,
                "m_re": res.m_value.real, "m_im": res.m_value.imag,
                "kernel_re": res.kernel_value.real, "kernel_im": res.kernel_value.imag,
                "kkt_residual": res.report.kkt_residual,
                "converged": res.report.converged,
            }
        return run

    tasks = [task(z, w, p) for z, w in zip(zs, ws) for p in p_values]
    rows = _run_ordered(tasks, config.threads)
    columns = ["z", "w", "p", "m_re", "m_im", "kernel_re", "kernel_im",
               "kkt_residual", "converged"]
    _emit(config, config.meta(p=p_values), columns, rows)
    _note_no_plot(config)
    return _exit_code(rows)


def cmd_metric(config: RunConfig, args) -> int:
    n = config.rule.domain.dimension
    points = _parse_points(args.z, n)
    direction = _parse_point(args.X, n)
    p_values = _parse_p_list(args.p)

    def task(z, p):
        def run():
            res = solve_metric(config.rule, p, z, direction, degree=config.degree, tol=config.tol)
            ok = res.point_report.converged and res.derivative_report.converged
            return {
                "z": _fmt_point(z), "X": _fmt_point(direction), "p": p,
                "metric": res.value,
                "kkt_point": res.point_report.kkt_residual,
                "kkt_derivative": res.derivative_report.kkt_residual,
                "converged": ok,
                "maximizer": _fmt_coefficients(res.derivative_report.minimizer.coefficients),
            }
        return run

    tasks = [task(z, p) for z in points for p in p_values]
    rows = _run_ordered(tasks, config.threads)
    columns = ["z", "X", "p", "metric", "kkt_point", "kkt_derivative",
               "converged", "maximizer"]
    _emit(config, config.meta(p=p_values), columns, rows)
    _note_no_plot(config)
    return _exit_code(rows)


def _projection_target(text: str, rule: QuadratureRule):
    """Built-in expressions conjz[:k] and absz[:k], or a node-sample file."""
    name, _, tail = text.partition(":")
    name = name.strip().lower()
    if name in ("conjz", "absz"):
        k = 1
        if tail:
            try:
                k = int(tail)
            except ValueError:
                raise ParameterError(f"bad power {tail!r} in input {text!r}") from None
        if k < 1:
            raise ParameterError("the input power must be at least 1")
        if name == "conjz":
            return lambda nodes: np.conj(nodes[:, 0]) ** k, f"conjz:{k}"
        return lambda nodes: np.abs(nodes[:, 0]) ** k + 0.0j, f"absz:{k}"
    if not os.path.exists(text):
        raise ParameterError(
            f"input {text!r} is neither conjz[:k], absz[:k], nor an existing sample file"
        )
    values = []
    with open(text, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            re_s, _, im_s = line.partition(",")
            try:
                values.append(complex(float(re_s), float(im_s or 0.0)))
            except ValueError:
                raise ParameterError(f"bad sample line {line!r} in {text}") from None
    samples = np.array(values)
    if samples.size != rule.node_count:
        raise ParameterError(
            f"{text} holds {samples.size} samples but the rule has {rule.node_count} nodes"
        )
    return samples, os.path.basename(text)


def cmd_project(config: RunConfig, args) -> int:
    target, label = _projection_target(args.input, config.rule)
    p_values = _parse_p_list(args.p)

    def task(p):
        def run():
            res = project_lp(config.rule, p, target, degree=config.degree, tol=config.tol)
            coeff = res.projection.coefficients
            return {
                "input": label, "p": p,
                "distance": res.distance,
                "coefficient_norm": float(np.linalg.norm(coeff)),
                "kkt_residual": res.report.kkt_residual,
                "converged": res.report.converged,
                "coefficients": _fmt_coefficients(coeff),
            }
        return run

    rows = _run_ordered([task(p) for p in p_values], config.threads)
    columns = ["input", "p", "distance", "coefficient_norm", "kkt_residual",
               "converged", "coefficients"]
    _emit(config, config.meta(p=p_values, input=label), columns, rows)
    _note_no_plot(config)
    return _exit_code(rows)


def cmd_scan(config: RunConfig, args) -> int:
    n = config.rule.domain.dimension
    z = _parse_point(args.z, n)
    grid = _parse_p_grid(args.p_grid)
    w = _parse_point(args.w, n) if args.w else None
    X = _parse_point(args.X, n) if args.X else None
    table = p_scan(config.rule, z, grid, w=w, X=X, degree=config.degree, tol=config.tol)

    header, _ = table.rows()
    columns, rows = [], []
    for name in header:
        source = table.axis if name == table.axis_name else table.columns[name]
        if np.iscomplexobj(np.asarray(source)):
            columns.extend([f"{name}_re", f"{name}_im"])
        else:
            columns.append(name)
    for i in range(len(table.axis)):
        row = {}
        for name in header:
            value = table.axis[i] if name == table.axis_name else table.columns[name][i]
            if isinstance(value, (complex, np.complexfloating)):
                row[f"{name}_re"] = value.real
                row[f"{name}_im"] = value.imag
            else:
                row[name] = float(value)
        rows.append(row)

    meta = config.meta(**{k: _json_value(v) for k, v in table.metadata.items()})
    _emit(config, meta, columns, rows)
    if config.plot:
        if config.out:
            from .plotting import plot_scan

            plot_scan(table, _plot_path(config.out))
        else:
            print("note: --plot needs --out to name the figure file", file=sys.stderr)
    return 0 if table.metadata["all_converged"] else 2


def cmd_levi(config: RunConfig, args) -> int:
    n = config.rule.domain.dimension
    points = _parse_points(args.z, n)
    direction = _parse_point(args.X, n)
    p_values = _parse_p_list(args.p)
    radii = tuple(_parse_float_list(args.radii))
    angles = int(args.angles)

    def task(z, p):
        def run():
            value = levi_estimate(
                config.rule, p, z, direction, radii=radii,
                degree=config.degree, angles=angles, tol=config.tol,
            )
            return {"z": _fmt_point(z), "X": _fmt_point(direction), "p": p,
                    "levi_log_kernel": value}
        return run

    tasks = [task(z, p) for z in points for p in p_values]
    rows = _run_ordered(tasks, config.threads)
    columns = ["z", "X", "p", "levi_log_kernel"]
    _emit(config, config.meta(p=p_values, radii=list(radii), angles=angles), columns, rows)
    _note_no_plot(config)
    return 0


def cmd_verify(config: RunConfig, args) -> int:
    records, all_passed = run_suite(
        args.suite, samples=int(args.samples), seed=config.seed,
        alpha=float(args.alpha), log=print,
    )
    passed = sum(r.passed for r in records)
    print(f"{passed}/{len(records)} checks passed")
    if config.out:
        rows = [
            {"suite": r.suite, "label": r.label, "passed": r.passed,
             "margin": r.margin, "note": r.note}
            for r in records
        ]
        meta = config.meta(suite=args.suite, samples=int(args.samples),
                           alpha=float(args.alpha))
        _emit(config, meta, ["suite", "label", "passed", "margin", "note"], rows)
        if config.plot:
            from .plotting import plot_margins

            plot_margins(records, _plot_path(config.out))
    elif config.plot:
        print("note: --plot needs --out to name the figure file", file=sys.stderr)
    return 0 if all_passed else 1


# --------------------------------------------------------------------------
# parser assembly
# --------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--domain", default="disc",
                     help="disc, ball:N, polydisc:N, or thullen:ALPHA (default disc)")
    sub.add_argument("--degree", default=20, type=int, help="basis degree (default 20)")
    sub.add_argument("--radial-order", default=None, type=int,
                     help="radial quadrature order (default 2*degree)")
    sub.add_argument("--angular-order", default=None, type=int,
                     help="angular quadrature order (default 4*degree+4)")
    sub.add_argument("--tol", default=None, type=float, help="solver tolerance override")
    sub.add_argument("--seed", default=DEFAULT_SEED, type=int, help="random seed")
    sub.add_argument("--format", default="csv", choices=("csv", "json"),
                     help="output format (default csv)")
    sub.add_argument("--out", default=None, help="output file (default stdout)")
    sub.add_argument("--threads", default=int(os.environ.get("PBERGMAN_THREADS", "1")),
                     type=int, help="parallel solves (default $PBERGMAN_THREADS or 1)")
    sub.add_argument("--reproducible", action="store_true",
                     help="suppress the timestamp line for byte-identical output")
    sub.add_argument("--plot", action="store_true",
                     help="render a PNG next to --out where a figure is defined")
    sub.add_argument("--config", default=None,
                     help="key = value file supplying defaults for any flag")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pbergman",
        description="p-Bergman kernels, metrics, and projections on model domains",
    )
    parser.add_argument("--version", action="version", version=f"pbergman {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("kernel", help="diagonal kernel and minimizer norm")
    _add_common(sub)
    sub.add_argument("--p", required=True, help="comma-separated exponents")
    sub.add_argument("--z", required=True, help="semicolon-separated points")
    sub.set_defaults(func=cmd_kernel)

    sub = subs.add_parser("offdiag", help="two-point minimizer and kernel values")
    _add_common(sub)
    sub.add_argument("--p", required=True)
    sub.add_argument("--z", required=True, help="evaluation points")
    sub.add_argument("--w", required=True, help="base points, matched to --z")
    sub.set_defaults(func=cmd_offdiag)

    sub = subs.add_parser("metric", help="directional metric and its maximizer")
    _add_common(sub)
    sub.add_argument("--p", required=True)
    sub.add_argument("--z", required=True)
    sub.add_argument("--X", required=True, help="direction vector")
    sub.set_defaults(func=cmd_metric)

    sub = subs.add_parser("project", help="best L^p approximation from the span")
    _add_common(sub)
    sub.add_argument("--p", required=True)
    sub.add_argument("--input", required=True,
                     help="conjz[:k], absz[:k], or a node-sample file")
    sub.set_defaults(func=cmd_project)

    sub = subs.add_parser("scan", help="kernel, norm, and metric along a p grid")
    _add_common(sub)
    sub.add_argument("--p-grid", required=True, dest="p_grid",
                     help="start:stop:kind:count, kind linear or geometric")
    sub.add_argument("--z", required=True)
    sub.add_argument("--w", default=None, help="optional second point")
    sub.add_argument("--X", default=None, help="optional metric direction")
    sub.set_defaults(func=cmd_scan)

    sub = subs.add_parser("levi", help="Levi form of log K_p via circle averages")
    _add_common(sub)
    sub.add_argument("--p", required=True)
    sub.add_argument("--z", required=True)
    sub.add_argument("--X", required=True)
    sub.add_argument("--radii", default="0.02,0.04,0.08",
                     help="circle radii (default 0.02,0.04,0.08)")
    sub.add_argument("--angles", default=64, type=int,
                     help="points per circle (default 64)")
    sub.set_defaults(func=cmd_levi)

    sub = subs.add_parser("verify", help="run a named check battery")
    _add_common(sub)
    sub.add_argument("suite", choices=SUITE_NAMES + ("all",))
    sub.add_argument("--samples", default=100_000, type=int,
                     help="triples per inequality branch (default 100000)")
    sub.add_argument("--alpha", default=3.0, type=float,
                     help="thullen exponent for the slice suite (default 3)")
    sub.set_defaults(func=cmd_verify)

    return parser


def _load_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise ParameterError(f"config file {path!r} does not exist")
    values = {}
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ParameterError(f"{path}:{number}: expected key = value")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key in _BOOL_KEYS:
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ParameterError(f"{path}:{number}: bad boolean {value!r}")
                values[key] = value.lower() in ("true", "1", "yes")
            elif key in _INT_KEYS:
                try:
                    values[key] = int(value)
                except ValueError:
                    raise ParameterError(f"{path}:{number}: bad integer {value!r}") from None
            elif key in _FLOAT_KEYS:
                try:
                    values[key] = float(value)
                except ValueError:
                    raise ParameterError(f"{path}:{number}: bad float {value!r}") from None
            else:
                values[key] = value
    return values


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)

    parser = build_parser()
    try:
        if known.config:
            defaults = _load_config_file(known.config)
            sub_action = next(
                a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
            )
            valid = {
                action.dest
                for sub in sub_action.choices.values()
                for action in sub._actions
            }
            unknown = set(defaults) - valid
            if unknown:
                raise ParameterError(
                    f"unknown config keys: {', '.join(sorted(unknown))}"
                )
            # Subparsers parse into a fresh namespace, so the defaults have
            # to live on each subparser; flags given on the command line
            # still override them.
            for sub in sub_action.choices.values():
                for action in sub._actions:
                    if action.dest in defaults:
                        action.required = False
                sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
        config = RunConfig.from_args(args)
        set_fft_workers(config.threads)
        return args.func(config, args)
    except PBergmanError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
