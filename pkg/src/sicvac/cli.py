"""Command-line entry point: ``sicvac <subcommand> ...``.

Subcommands write CSV (default) or JSON to ``--output`` or stdout.
Diagnostics go to stderr only.  Exit codes: 0 success, 1 unexpected
runtime failure, 2 usage or parse error, 3 fit did not converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dsl import DslError, compile_ast, parse, template_names, template_source
from .fitkit import PARAM_NAMES, ModelKind, fit, load_csv, parse_csv
from .fitkit.models import DecayModel, evaluate
from .odmr import OdmrCenter, dbm_to_watt, field_map
from .pumping import Populations, RateModel, propagator, pumping_time, rate_matrix, steady_state
from .spin import DomainError, FieldVector, SpinSystem, hamiltonian

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_FIT = 0, 1, 2, 3
M_LABELS = ("E_p3_2", "E_p1_2", "E_m1_2", "E_m3_2")


class UsageError(Exception):
    """Bad command-line values; reported with exit code 2."""


def _num(v):
    return repr(float(v))


def _table(header, rows, fmt: str, extra: dict | None = None, comments=()) -> str:
    """Render rows as CSV or as a JSON object of columns."""
    rows = list(rows)
    if fmt == "json":
        obj = dict(extra or {})
        obj.update({h: [float(r[i]) for r in rows] for i, h in enumerate(header)})
        return json.dumps(obj, indent=2) + "\n"
    out = io.StringIO()
    for c in comments:
        out.write(f"# {c}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return out.getvalue()


def _emit(text: str, output) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(output).write_text(text, encoding="utf-8")


def parse_range(text: str, name: str) -> np.ndarray:
    """``start:stop:n`` (n points, inclusive) or a single value."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--{name}: expected START:STOP:N or a single value, got {text!r}") from None
    if n < 1 or not np.isfinite(start) or not np.isfinite(stop):
        raise UsageError(f"--{name}: need N >= 1 and finite bounds, got {text!r}")
    if n == 1:
        if start != stop:
            raise UsageError(f"--{name}: N=1 needs START == STOP")
        return np.array([start])
    if stop <= start:
        raise UsageError(f"--{name}: STOP must exceed START, got {text!r}")
    return np.linspace(start, stop, n)


def parse_power(text) -> float:
    """RF power in W; accepts a ``dBm`` or ``W`` suffix."""
    s = str(text).strip()
    try:
        if s.lower().endswith("dbm"):
            return dbm_to_watt(float(s[:-3]))
        if s.lower().endswith("w"):
            s = s[:-1]
        value = float(s)
    except ValueError:
        raise UsageError(f"--power: cannot read {text!r}") from None
    if value < 0 or not np.isfinite(value):
        raise UsageError("--power must be a finite value >= 0")
    return value


def parse_params(text: str) -> dict:
    """``A=1,T=142.1`` into a dict."""
    out = {}
    for item in filter(None, (t.strip() for t in str(text).split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"expected NAME=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"parameter {key!r}: not a number: {val!r}") from None
    return out


def _center(name: str) -> str:
    key = name.strip().lower().replace("/", "")
    if key not in ("v1v3", "v2"):
        raise UsageError(f"unknown center {name!r}; choose v1v3 or v2")
    return key


# --------------------------------------------------------------------------- levels


def cmd_levels(args) -> int:
    system = SpinSystem.preset(_center(args.center))
    b = parse_range(args.b, "b")
    if np.any(b < 0):
        raise UsageError("--b: field values must be >= 0")
    rows = []
    for bz in b:
        # H is diagonal in the Sz basis for B along c
        e = np.real(np.diag(hamiltonian(system, FieldVector(bz=float(bz)))))
        nu1 = abs(e[0] - e[1])
        nu2 = abs(e[3] - e[2])
        central = abs(e[1] - e[2])
        rows.append([bz, *e, nu1, nu2, central])
    header = ["B_mT", *M_LABELS, "nu1", "nu2", "central"]
    _emit(_table(header, rows, args.format, {"center": args.center}), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------- map


def cmd_map(args) -> int:
    centers = [OdmrCenter.preset(_center(c)) for c in args.centers.split(",") if c.strip()]
    if not centers:
        raise UsageError("--centers: need at least one center")
    b = parse_range(args.b, "b")
    f = parse_range(args.f, "f")
    if np.any(b < 0):
        raise UsageError("--b: field values must be >= 0")
    smap = field_map(centers, b, f, parse_power(args.power), kind=args.lineshape)
    _emit(smap.to_json() + "\n" if args.format == "json" else smap.to_csv(), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------- run


def _load_sequence(ref: str):
    path = Path(ref)
    if path.is_file():
        return parse(path.read_text(encoding="utf-8"), origin=str(path))
    name = ref.removeprefix("templates/").removesuffix(".seq")
    if name in template_names():
        return parse(template_source(name), origin=f"templates/{name}.seq")
    raise UsageError(f"no such sequence file or template: {ref!r} (templates: {', '.join(template_names())})")


def cmd_run(args) -> int:
    ast = _load_sequence(args.sequence)
    family = compile_ast(ast, seed=args.seed, n_members=args.members)
    if args.dry_run:
        n_ref = sum(p.reference is not None for p in family.programs)
        print(f"{len(family)} programs ({n_ref} with reference), "
              f"{family.ensemble.n_members} members", file=sys.stderr)
        sys.stdout.write(f"{len(family)}\n")
        return EXIT_OK
    curve = family.run(threads=args.threads)
    result = None
    if args.fit:
        kind = args.model or family.fit
        if kind is None:
            raise UsageError("--fit needs a model: add 'fit <kind>;' to the file or pass --model")
        try:
            result = fit(ModelKind.parse(kind), curve.x, curve.signal)
        except ValueError as exc:
            print(f"fit failed: {exc}", file=sys.stderr)
            return EXIT_FIT
    if args.format == "json":
        obj = json.loads(curve.to_json())
        if result is not None:
            obj["fit"] = result.to_dict()
        _emit(json.dumps(obj, indent=2) + "\n", args.output)
    else:
        _emit(curve.to_csv(), args.output)
    if result is not None:
        if args.fit_output:
            Path(args.fit_output).write_text(result.to_json() + "\n", encoding="utf-8")
        summary = ", ".join(f"{k}={v:.6g}" for k, v in result.params.items())
        print(f"fit {result.kind.value}: {summary} ({result.message})", file=sys.stderr)
        if not result.converged:
            return EXIT_FIT
    return EXIT_OK


# --------------------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    kind = _model_kind(args.model)
    params = parse_params(args.params)
    try:
        model = DecayModel(kind, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.n_points < 1:
        raise UsageError("--n-points must be >= 1 (an empty data set cannot be written)")
    if args.noise < 0:
        raise UsageError("--noise must be >= 0")
    x = np.linspace(args.x_min, args.x_max, args.n_points) if args.n_points > 1 else np.array([args.x_min])
    clean = evaluate(model, x)
    # noise is relative to the peak magnitude of the clean curve
    sigma = args.noise * float(np.max(np.abs(clean))) if clean.size else 0.0
    rng = np.random.default_rng(args.seed)
    y = clean + sigma * rng.standard_normal(x.size)
    meta = {"model": kind.value, "params": params, "noise": args.noise, "seed": args.seed}
    comments = [
        f"synth model={kind.value} params={','.join(f'{k}={v!r}' for k, v in params.items())}",
        f"noise={args.noise!r} seed={args.seed} n_points={args.n_points}",
    ]
    rows = [(xi, yi, sigma) for xi, yi in zip(x, y)]
    _emit(_table(["x_value", "signal", "sigma"], rows, args.format, meta, comments), args.output)
    return EXIT_OK


def _model_kind(name: str) -> ModelKind:
    try:
        return ModelKind.parse(name)
    except ValueError:
        kinds = ", ".join(k.value for k in ModelKind)
        raise UsageError(f"unknown model {name!r}; choose one of {kinds}") from None


# --------------------------------------------------------------------------- pump


def cmd_pump(args) -> int:
    try:
        model = RateModel.load(args.rates) if args.rates else RateModel.preset(_center(args.center))
    except (KeyError, OSError) as exc:
        raise UsageError(str(exc)) from None
    if args.w_pump is not None:
        model = model.with_pump(args.w_pump)
    if args.duration <= 0 or args.dt <= 0:
        raise UsageError("--duration and --dt must be positive")
    times = np.arange(0.0, args.duration + args.dt / 2, args.dt)
    step = propagator(rate_matrix(model), args.dt)
    p = Populations.thermal().as_array()
    rows = []
    for t in times:
        rows.append([t, *p, p[1] - p[0]])
        p = step @ p
    extra = {"center": args.center}
    if model.w_pump > 0:
        extra["pumping_time_us"] = pumping_time(model)
        extra["steady_polarization"] = steady_state(model).polarization
    header = ["t_us", "p0", "p1", "p2", "p3", "p4", "polarization"]
    _emit(_table(header, rows, args.format, extra), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------- fit


def cmd_fit(args) -> int:
    kind = _model_kind(args.model)
    try:
        x, y, sigma = load_csv(args.data) if args.data != "-" else parse_csv(sys.stdin.read())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read data: {exc}") from None
    init = None
    if args.init:
        init = parse_params(args.init)
        missing = set(PARAM_NAMES[kind]) - set(init)
        if missing:
            raise UsageError(f"--init is missing {', '.join(sorted(missing))}")
    try:
        result = fit(kind, x, y, sigma=None if args.unweighted else sigma, init=init,
                     max_iter=args.max_iter, n_starts=args.starts, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        _emit(result.to_json() + "\n", args.output)
    else:
        errs = result.stderr or {}
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["param", "value", "stderr"])
        for name in PARAM_NAMES[kind]:
            w.writerow([name, _num(result.params[name]), _num(errs.get(name, float("nan")))])
        _emit(out.getvalue(), args.output)
    print(f"fit {kind.value}: {result.message}, {result.iterations} iterations, "
          f"rss={result.rss:.6g}", file=sys.stderr)
    return EXIT_OK if result.converged else EXIT_FIT


# --------------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format (default csv)")
    p.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    p.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    p.add_argument("--config", default=None, help="TOML file with defaults for these options")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sicvac", description="Silicon-vacancy spin simulation and fitting toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("levels", help="spin levels and transition branches vs field along c")
    p.add_argument("--center", default="v2")
    p.add_argument("--b", default="0:9:91", help="field grid in mT, START:STOP:N")
    _common(p)
    p.set_defaults(func=cmd_levels)

    p = sub.add_parser("map", help="cw ODMR map versus field and frequency")
    p.add_argument("--centers", default="v1v3,v2", help="comma-separated centers")
    p.add_argument("--b", default="0:9:200", help="field grid in mT, START:STOP:N")
    p.add_argument("--f", default="0:300:600", help="frequency grid in MHz, START:STOP:N")
    p.add_argument("--power", default="33dBm", help="RF power in W, or with a dBm suffix")
    p.add_argument("--lineshape", choices=("lorentzian", "gaussian"), default="lorentzian")
    _common(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("run", help="simulate a sequence file or built-in template")
    p.add_argument("sequence", help="path to a .seq file or a template name such as rabi_v1v3")
    p.add_argument("--fit", action="store_true", help="fit the curve with the file's model")
    p.add_argument("--model", default=None, help="override the fit model")
    p.add_argument("--fit-output", default=None, help="write the fit result JSON here")
    p.add_argument("--dry-run", action="store_true", help="compile only and print the program count")
    p.add_argument("--members", type=int, default=None, help="override the ensemble size")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default SICVAC_THREADS or 1)")
    _common(p)
    p.set_defaults(func=cmd_run, seed=None)

    p = sub.add_parser("synth", help="synthetic data set from a closed-form model")
    p.add_argument("--model", required=True)
    p.add_argument("--params", required=True, help="NAME=VALUE,... for every model parameter")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise relative to the peak value")
    p.add_argument("--n-points", type=int, default=30)
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, default=1.0)
    _common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pump", help="population transient under optical pumping")
    p.add_argument("--center", default="v2")
    p.add_argument("--rates", default=None, help="JSON or TOML file with rate constants")
    p.add_argument("--w-pump", type=float, default=None, help="override the pump rate (1/us)")
    p.add_argument("--duration", type=float, default=200.0, help="us")
    p.add_argument("--dt", type=float, default=0.5, help="us")
    _common(p)
    p.set_defaults(func=cmd_pump)

    p = sub.add_parser("fit", help="fit a closed-form model to CSV data")
    p.add_argument("data", help="CSV with x, y and optional sigma columns ('-' for stdin)")
    p.add_argument("--model", required=True)
    p.add_argument("--init", default=None, help="NAME=VALUE,... starting point")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--starts", type=int, default=1, help="number of jittered starts")
    p.add_argument("--unweighted", action="store_true", help="ignore a sigma column")
    _common(p)
    p.set_defaults(func=cmd_fit)
    return parser


def _load_config(path: str, command: str) -> dict:
    try:
        import tomllib
    except ImportError:  # python < 3.11
        import tomli as tomllib
    try:
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"--config: {exc}") from None
    # top-level scalars apply to every subcommand, a [command] table to that one only
    merged = {k: v for k, v in data.items() if not isinstance(v, dict)}
    merged.update(data.get(command, {}))
    return {k.replace("-", "_"): v for k, v in merged.items()}


def _apply_config(parser, args, argv):
    sub = parser._subparsers._group_actions[0].choices[args.command]
    config = _load_config(args.config, args.command)
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(config) - known - {"command", "func", "config"})
    if unknown:
        raise UsageError(f"--config: unknown option(s) for {args.command}: {', '.join(unknown)}")
    sub.set_defaults(**config)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, args, argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"sicvac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DslError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, KeyError) as exc:
        print(f"sicvac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"sicvac: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if os.environ.get("SICVAC_DEBUG"):
            raise
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
