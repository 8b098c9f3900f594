"""Command-line front end.

Usage
-----
::

    mtspec tapers    --n N --nw NW [--k K] [--taper slepian|tukey|rect] ...
    mtspec estimate  --input FILE [--method multitaper] [--nw NW] [--k K] ...
    mtspec jackknife --input FILE --nw NW [--k K] [--n-sigma 2] ...
    mtspec synth     --model KIND|FILE [--param key=value ...] --n N --seed S
    mtspec compare   [--seed S] [--methods a,b,...] ...
    mtspec tables    --table 3|4 [--n 300 --nw 5.46 --k 10]
    mtspec replay    MANIFEST [--out DIR]

Every subcommand writes its files into ``--out`` (default: the current
directory) together with ``manifest.json``, which records the command and
its fully resolved options. ``mtspec replay manifest.json --out other``
reruns the command and reproduces every file byte for byte. A JSON file of
option values (keys are the long option names with ``_`` for ``-``, or a
previous manifest) can also be given to any subcommand with ``--config``;
flags on the command line take precedence over it.

Exit status is 0 on success, 1 for invalid parameters or input files and 2
when a numerical routine fails.

Output schemas
--------------
=================  ====================================================
``estimate.csv``   frequency_hz, power, dof, ci_lo, ci_hi
``weights.csv``    frequency_hz, k, weight, selected
``jackknife.csv``  frequency_hz, power, log_mean, mean_log, jack_var,
                   ci_lo, ci_hi, gauss_lo, gauss_hi
``taper_KK.csv``   index, value
``eigenvalues.csv`` k, eigenvalue, one_minus_eigenvalue
``window_KK.csv``  frequency, value (cycles/sample, squared magnitude)
``spectrum.csv``   frequency_hz, power
``table3.csv``     k, eigenvalue, one_minus_eigenvalue
``table4.csv``     K, bias, trigamma, jack_expect, jack_asymptotic,
                   meanlog_variance, ratio
``series.csv``     one sample per line
``series.f64``     little-endian float64, sidecar ``series.f64.json``
                   with sample_rate_hz, n_samples, encoding
=================  ====================================================

``compare`` writes ``method_<name>.csv`` (frequency_hz, bias, variance,
rmse), ``summary.csv`` and ``reference.csv``; see :mod:`mtspec.harness`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from . import io
from .adaptive import KINDS, WeightingScheme, apply_weighting
from .estimators import (FrequencyGrid, boxcar_smooth, eigencoefficients,
                         periodogram, tapered_periodogram, welch_estimate)
from .exceptions import NumericError, ParameterError
from .harness import (ComparisonConfig, compare_methods, default_methods,
                      write_report)
from .jackknife import (adaptive_jackknife_variance, confidence_band,
                        gaussian_band, jackknife_log_stats, table4)
from .synth import SpectrumModel, evaluate_spectrum, generate, rng_info
from .tapers import (Taper, build_slepian_family, build_tukey_taper,
                     rectangular_taper, spectral_window)

__all__ = ["run", "main", "build_parser", "EXIT_OK", "EXIT_PARAM",
           "EXIT_NUMERIC"]

EXIT_OK = 0
EXIT_PARAM = 1
EXIT_NUMERIC = 2

_WEIGHTINGS = KINDS + ("seqdesel", "minloss", "thomson")
# options that never enter the manifest: where files go and how we got here
_PLUMBING = {"command", "config", "out", "manifest"}


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def _add_series_input(p):
    p.add_argument("--input", help="series file (csv or raw f64le)")
    p.add_argument("--format", choices=io.SERIES_FORMATS,
                   help="input format; guessed from the extension")
    p.add_argument("--sample-rate", type=float,
                   help="sampling rate in Hz for CSV input (default 1)")


def _add_model(p, default):
    p.add_argument("--model", default=default,
                   help="model kind (white, ar, tabulated, tftr_like) or a "
                        "model config file")
    p.add_argument("--param", action="append", default=[],
                   metavar="KEY=VALUE", help="model parameter; repeatable")


def build_parser():
    parser = _Parser(prog="mtspec", description="Multitaper and smoothed "
                     "periodogram spectral estimation.")
    parser.add_argument("--version", action="version",
                        version=f"mtspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def command(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--config", help="JSON option file or manifest")
        return p

    p = command("tapers", "export taper sequences")
    p.add_argument("--taper", choices=("slepian", "tukey", "rect"),
                   default="slepian")
    p.add_argument("--n", type=int, help="taper length")
    p.add_argument("--nw", type=float, help="time-bandwidth product NW")
    p.add_argument("--k", type=int, help="number of Slepian tapers")
    p.add_argument("--alpha-n", type=float, default=33.0,
                   help="Tukey taper length alpha*N in samples")
    p.add_argument("--window-grid", type=int,
                   help="also write spectral windows on this many points")

    p = command("estimate", "estimate a spectrum")
    _add_series_input(p)
    p.add_argument("--method", default="multitaper",
                   choices=("periodogram", "tapered", "multitaper", "hybrid",
                            "welch"))
    p.add_argument("--taper", choices=("rect", "tukey", "slepian"),
                   default="tukey", help="single taper for tapered/welch")
    p.add_argument("--alpha-n", type=float, default=33.0)
    p.add_argument("--taper-nw", type=float, default=1.0,
                   help="NW of a single Slepian taper")
    p.add_argument("--nw", type=float, help="multitaper NW")
    p.add_argument("--k", type=int, help="number of tapers")
    p.add_argument("--weighting", choices=_WEIGHTINGS,
                   default="sequential_deselection")
    p.add_argument("--alpha-k", type=float, default=2.0,
                   help="deselection threshold in standard deviations")
    p.add_argument("--smooth-hz", type=float, default=0.0,
                   help="boxcar half-width in Hz (0: no smoothing)")
    p.add_argument("--grid-size", type=int, help="transform length")
    p.add_argument("--segment-len", type=int, help="Welch segment length")
    p.add_argument("--overlap", type=float, default=0.0,
                   help="Welch overlap fraction")
    p.add_argument("--n-sigma", type=float, default=2.0,
                   help="jackknife band half-width in standard deviations")

    p = command("jackknife", "jackknife confidence bands")
    _add_series_input(p)
    p.add_argument("--nw", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--weighting", choices=_WEIGHTINGS, default="uniform",
                   help="non-uniform weightings are re-run on every "
                        "delete-one set")
    p.add_argument("--grid-size", type=int)
    p.add_argument("--n-sigma", type=float, default=2.0)

    p = command("synth", "generate a synthetic series")
    _add_model(p, None)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-rate", type=float, default=1.0)
    p.add_argument("--format", choices=io.SERIES_FORMATS, default="csv")
    p.add_argument("--spectrum-grid", type=int,
                   help="also write the model spectrum on this many points")

    p = command("compare", "bias/variance/RMSE comparison of estimators")
    _add_model(p, "tftr_like")
    _add_series_input(p)
    p.add_argument("--n-total", type=int, default=45000)
    p.add_argument("--segment-len", type=int, default=300)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--reference-nw", type=float, default=126.0)
    p.add_argument("--grid-factor", type=int, default=4)
    p.add_argument("--band", action="append", nargs=2, type=float,
                   metavar=("LO_HZ", "HI_HZ"), default=None,
                   help="scoring band in Hz; repeatable")
    p.add_argument("--methods", help="comma-separated subset of the default "
                   "method names")

    p = command("tables", "reproduce the eigenvalue or log-moment tables")
    p.add_argument("--table", type=int, choices=(3, 4))
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--nw", type=float, default=5.46)
    p.add_argument("--k", type=int, default=10)

    p = sub.add_parser("replay", help="rerun the command in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="output directory (default: the "
                   "manifest's directory)")
    return parser


# ---------------------------------------------------------------- helpers

def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise ParameterError(f"--{name.replace('_', '-')} is required")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _series(args, inputs):
    _need(args, "input")
    path = os.path.abspath(args.input)
    x = io.ingest(path, args.format, args.sample_rate)
    inputs[path] = io.file_digest(path)
    return x


def _model(args):
    if args.model is None:
        raise ParameterError("--model is required")
    params = io.parse_model_params(args.param, where="--param")
    if os.path.isfile(args.model):
        base = io.read_model_config(args.model)
        return SpectrumModel(base.kind, {**base.params, **params})
    return SpectrumModel(args.model, params)


def _path(out, name, written):
    p = os.path.join(out, name)
    written.append(p)
    return p


# --------------------------------------------------------------- commands

def _cmd_tapers(args, out, written, info):
    _need(args, "n")
    if args.taper == "slepian":
        _need(args, "nw")
        fam = build_slepian_family(args.n, args.nw, args.k)
        tapers = list(fam.tapers)
        io.write_csv(_path(out, "eigenvalues.csv", written),
                     ["k", "eigenvalue", "one_minus_eigenvalue"],
                     ((k, lam, 1.0 - lam)
                      for k, lam in enumerate(fam.eigenvalues)))
        info["K"] = fam.K
    elif args.taper == "tukey":
        tapers = [build_tukey_taper(args.n, args.alpha_n).values]
    else:
        tapers = [rectangular_taper(args.n).values]
    for k, v in enumerate(tapers):
        io.write_taper_csv(v, _path(out, f"taper_{k:02d}.csv", written))
        if args.window_grid:
            t = Taper(v, "raw").normalized()
            win = spectral_window(t, args.window_grid)
            io.write_csv(_path(out, f"window_{k:02d}.csv", written),
                         ["frequency", "value"],
                         zip(win.frequencies, np.abs(win.values) ** 2))


def _single_taper(args, L):
    if args.taper == "rect":
        return rectangular_taper(L, unit_energy=True)
    if args.taper == "tukey":
        return build_tukey_taper(L, args.alpha_n).normalized()
    return Taper(build_slepian_family(L, args.taper_nw, 1).tapers[0],
                 "unit-energy")


def _cmd_estimate(args, out, written, info):
    x = _series(args, info["inputs"])
    field = None
    if args.method == "periodogram":
        est = periodogram(x, args.grid_size)
    elif args.method == "tapered":
        est = tapered_periodogram(x, _single_taper(args, x.N), args.grid_size)
    elif args.method == "welch":
        _need(args, "segment_len")
        est = welch_estimate(x, args.segment_len, args.overlap,
                             _single_taper(args, args.segment_len),
                             args.grid_size)
    else:
        _need(args, "nw")
        fam = build_slepian_family(x.N, args.nw, args.k)
        es = eigencoefficients(x, fam, args.grid_size)
        scheme = WeightingScheme(args.weighting, alpha_K=args.alpha_k)
        field, est = apply_weighting(es, scheme)
        if fam.K >= 3 and args.smooth_hz == 0:
            stats = jackknife_log_stats(es)
            est = confidence_band(est, stats, args.n_sigma)
    if args.smooth_hz > 0:
        if args.method in ("multitaper", "welch"):
            raise ParameterError(f"--smooth-hz does not apply to "
                                 f"{args.method}; use --method hybrid")
        est = boxcar_smooth(est, args.smooth_hz * x.dt)
    info["method"] = est.method
    io.write_estimate_csv(est, _path(out, "estimate.csv", written))
    if field is not None:
        io.write_weights_csv(field, _path(out, "weights.csv", written))


def _cmd_jackknife(args, out, written, info):
    x = _series(args, info["inputs"])
    _need(args, "nw")
    fam = build_slepian_family(x.N, args.nw, args.k)
    es = eigencoefficients(x, fam, args.grid_size)
    stats = jackknife_log_stats(es)
    scheme = WeightingScheme(args.weighting)
    _, est = apply_weighting(es, scheme)
    if scheme.kind != "uniform":
        stats = type(stats)(stats.grid, stats.log_mean, stats.mean_log,
                            adaptive_jackknife_variance(es, scheme), stats.K,
                            stats.valid)
    est = confidence_band(est, stats, args.n_sigma)
    g_lo, g_hi = gaussian_band(stats, args.n_sigma)
    lo, hi = est.band
    info["method"] = est.method
    io.write_estimate_csv(est, _path(out, "estimate.csv", written))
    io.write_csv(_path(out, "jackknife.csv", written),
                 ["frequency_hz", "power", "log_mean", "mean_log", "jack_var",
                  "ci_lo", "ci_hi", "gauss_lo", "gauss_hi"],
                 zip(est.grid.frequencies_hz, est.values, stats.log_mean,
                     stats.mean_log, stats.jack_var, lo, hi, g_lo, g_hi))


def _cmd_synth(args, out, written, info):
    _need(args, "n")
    model = _model(args)
    x = generate(model, args.n, args.seed, dt=1.0 / args.sample_rate)
    name = "series.csv" if args.format == "csv" else "series.f64"
    written.extend(io.export_series(x, os.path.join(out, name), args.format))
    if args.spectrum_grid:
        spec = evaluate_spectrum(model, _grid(args.spectrum_grid, x.dt))
        io.write_csv(_path(out, "spectrum.csv", written),
                     ["frequency_hz", "power"],
                     zip(spec.grid.frequencies_hz, spec.values))
    info["model"] = model.to_dict()
    info["rng"] = rng_info()


def _grid(size, dt):
    size = int(size)
    if size < 2:
        raise ParameterError("--spectrum-grid must be at least 2")
    return FrequencyGrid(size + size % 2, dt)


def _cmd_compare(args, out, written, info):
    fs = 5e6 if args.sample_rate is None else args.sample_rate
    methods = default_methods(args.segment_len, fs)
    if args.methods:
        wanted = [m.strip() for m in args.methods.split(",") if m.strip()]
        known = {m.name: m for m in methods}
        unknown = [w for w in wanted if w not in known]
        if unknown:
            raise ParameterError(f"unknown methods {unknown}; choose from "
                                 f"{sorted(known)}")
        methods = [known[w] for w in wanted]
    kwargs = dict(model=_model(args), n_total=args.n_total,
                  segment_len=args.segment_len, seed=args.seed,
                  sample_rate_hz=fs, reference_nw=args.reference_nw,
                  grid_factor=args.grid_factor, methods=methods)
    if args.band:
        kwargs["bands_hz"] = tuple(tuple(b) for b in args.band)
    config = ComparisonConfig(**kwargs)
    data = None
    if args.input is not None:
        data = _series(args, info["inputs"])
        if abs(1.0 / data.dt - fs) > 1e-9 * fs:
            raise ParameterError("input sample rate differs from "
                                 "--sample-rate")
    report = compare_methods(config, data)
    written.extend(write_report(report, out, manifest=False))
    info["comparison"] = report.config
    info["segments"] = {"bias": report.bias_plan.count,
                        "variance": report.variance_plan.count}
    failed = [r.name for r in report.records if r.error]
    if failed:
        info["failed_methods"] = failed


def _cmd_tables(args, out, written, info):
    _need(args, "table")
    if args.table == 3:
        fam = build_slepian_family(args.n, args.nw, args.k)
        io.write_csv(_path(out, "table3.csv", written),
                     ["k", "eigenvalue", "one_minus_eigenvalue"],
                     ((k, lam, 1.0 - lam)
                      for k, lam in enumerate(fam.eigenvalues)))
    else:
        io.write_csv(_path(out, "table4.csv", written),
                     ["K", "bias", "trigamma", "jack_expect",
                      "jack_asymptotic", "meanlog_variance", "ratio"],
                     table4())


_COMMANDS = {"tapers": _cmd_tapers, "estimate": _cmd_estimate,
             "jackknife": _cmd_jackknife, "synth": _cmd_synth,
             "compare": _cmd_compare, "tables": _cmd_tables}


# ------------------------------------------------------------- dispatching

def _load_options(path):
    """Option dict and the command it belongs to (``None`` if unstated)."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except FileNotFoundError:
        raise ParameterError(f"no such config file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParameterError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise ParameterError(f"{path}: expected a JSON object")
    if "command" in d and "config" in d:
        return d["command"], d["config"], d.get("inputs", {})
    return None, d, {}


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_options(parser, command, options, argv=None):
    sub = _subparser(parser, command)
    dests = {a.dest for a in sub._actions} - _PLUMBING - {"help"}
    unknown = set(options) - dests
    if unknown:
        raise ParameterError(f"unknown options for {command}: "
                             f"{sorted(unknown)}")
    sub.set_defaults(**options)
    if argv is None:
        return sub.parse_args([])
    return parser.parse_args(argv)


def _check_inputs(recorded):
    for path, digest in recorded.items():
        if not os.path.isfile(path):
            raise ParameterError(f"input {path} named in the manifest is "
                                 "missing")
        if io.file_digest(path) != digest:
            raise ParameterError(f"input {path} changed since the manifest "
                                 "was written")


def _execute(args, recorded_inputs=None):
    if recorded_inputs:
        _check_inputs(recorded_inputs)
    out = args.out
    os.makedirs(out, exist_ok=True)
    written = []
    info = {"inputs": {}}
    _COMMANDS[args.command](args, out, written, info)
    options = {k: v for k, v in sorted(vars(args).items())
               if k not in _PLUMBING}
    payload = {"command": args.command, "config": options,
               "mtspec_version": __version__,
               "outputs": sorted(os.path.basename(p) for p in written)}
    payload.update({k: v for k, v in info.items() if v or k != "inputs"})
    io.write_manifest(out, _jsonable(payload))
    for p in written:
        print(p)
    return EXIT_OK


def _parse(parser, argv):
    args = parser.parse_args(argv)
    if args.command == "replay":
        command, options, inputs = _load_options(args.manifest)
        if command is None:
            raise ParameterError(f"{args.manifest} is not a manifest")
        if command not in _COMMANDS:
            raise ParameterError(f"unknown command {command!r} in manifest")
        out = args.out or os.path.dirname(os.path.abspath(args.manifest))
        replayed = _apply_options(parser, command, options)
        replayed.command = command
        replayed.out = out
        return replayed, inputs
    if args.config:
        command, options, inputs = _load_options(args.config)
        if command not in (None, args.command):
            raise ParameterError(f"{args.config} belongs to {command!r}, "
                                 f"not {args.command!r}")
        return _apply_options(parser, args.command, options, argv), inputs
    return args, None


def run(argv=None):
    """Run the command line ``argv``; returns the exit status."""
    parser = build_parser()
    try:
        args, inputs = _parse(parser, sys.argv[1:] if argv is None else argv)
        return _execute(args, inputs)
    except SystemExit as exc:
        return EXIT_PARAM if exc.code not in (0, None) else EXIT_OK
    except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"mtspec: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParameterError, ValueError, OSError) as exc:
        print(f"mtspec: error: {exc}", file=sys.stderr)
        return EXIT_PARAM


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
