"""File formats used by the command-line front end.

Series
    ``csv``: one sample per line, optional ``#`` comment lines.
    ``raw``: little-endian float64 samples plus a JSON sidecar
    ``<path>.json`` holding ``sample_rate_hz``, ``n_samples`` and
    ``encoding`` (always ``"f64le"``).

Tables
    All numeric CSV output uses 17 significant digits, so values round-trip
    exactly through text.

Model configs
    Either a JSON object ``{"kind": ..., "params": {...}}`` or plain text
    with one ``key = value`` per line, where ``kind`` names the model and
    every other key is a parameter. Comma-separated values become tuples.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os

import numpy as np

from .estimators import TimeSeries
from .exceptions import ParameterError
from .synth import SpectrumModel

__all__ = [
    "SERIES_FORMATS",
    "sidecar_path",
    "detect_format",
    "ingest",
    "export_series",
    "write_csv",
    "write_estimate_csv",
    "write_taper_csv",
    "write_weights_csv",
    "read_model_config",
    "parse_model_params",
    "file_digest",
    "write_manifest",
    "fmt",
]

SERIES_FORMATS = ("csv", "raw")
RAW_ENCODING = "f64le"
_RAW_SUFFIXES = (".f64", ".raw", ".bin")


def fmt(v):
    """17-significant-digit text for a float; empty for ``None``."""
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def sidecar_path(path):
    return os.fspath(path) + ".json"


def detect_format(path):
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext in _RAW_SUFFIXES:
        return "raw"
    return "csv"


def _read_csv_samples(path):
    samples = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            # tolerate a trailing comma or a single-column header
            token = text.split(",")[0].strip()
            try:
                value = float(token)
            except ValueError:
                if not samples and lineno == 1 and token.isidentifier():
                    continue
                raise ParameterError(
                    f"{path}:{lineno}: cannot parse {token!r} as a number"
                ) from None
            if not math.isfinite(value):
                raise ParameterError(
                    f"{path}:{lineno}: non-finite sample {token!r}")
            samples.append(value)
    return np.array(samples, dtype=float)


def _read_sidecar(path):
    side = sidecar_path(path)
    try:
        with open(side) as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise ParameterError(f"missing sidecar {side}") from None
    except json.JSONDecodeError as exc:
        raise ParameterError(
            f"{side}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    missing = {"sample_rate_hz", "n_samples", "encoding"} - set(meta)
    if missing:
        raise ParameterError(f"{side}: missing keys {sorted(missing)}")
    if meta["encoding"] != RAW_ENCODING:
        raise ParameterError(
            f"{side}: unsupported encoding {meta['encoding']!r}")
    return meta


def _read_raw_samples(path, meta):
    size = os.path.getsize(path)
    if size % 8:
        raise ParameterError(
            f"{path}: size {size} bytes is not a multiple of 8 "
            f"(trailing bytes at offset {size - size % 8})")
    n = int(meta["n_samples"])
    if size // 8 != n:
        raise ParameterError(
            f"{path}: sidecar declares {n} samples, file holds {size // 8}")
    x = np.fromfile(path, dtype="<f8").astype(float)
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        i = int(bad[0])
        raise ParameterError(
            f"{path}: non-finite sample {i} at byte offset {8 * i}")
    return x


def ingest(path, format=None, sample_rate_hz=None):
    """Read a series from ``path``.

    Parameters
    ----------
    format : {"csv", "raw"}, optional
        Guessed from the extension (``.f64``, ``.raw``, ``.bin`` are raw).
    sample_rate_hz : float, optional
        For CSV input (default 1 Hz). For raw input the sidecar is
        authoritative; a conflicting value is rejected.

    Returns
    -------
    TimeSeries
    """
    path = os.fspath(path)
    format = format or detect_format(path)
    if format not in SERIES_FORMATS:
        raise ParameterError(f"unknown series format {format!r}")
    if not os.path.exists(path):
        raise ParameterError(f"no such file: {path}")
    if format == "raw":
        meta = _read_sidecar(path)
        fs = float(meta["sample_rate_hz"])
        if sample_rate_hz is not None and float(sample_rate_hz) != fs:
            raise ParameterError(
                f"sample rate {sample_rate_hz} conflicts with sidecar {fs}")
        x = _read_raw_samples(path, meta)
    else:
        fs = 1.0 if sample_rate_hz is None else float(sample_rate_hz)
        x = _read_csv_samples(path)
    if not fs > 0:
        raise ParameterError(f"sample_rate_hz={fs} must be positive")
    return TimeSeries(x, 1.0 / fs)


def export_series(series, path, format=None):
    """Write ``series`` as CSV or raw float64 plus sidecar.

    Returns the list of files written.
    """
    path = os.fspath(path)
    format = format or detect_format(path)
    if format == "raw":
        np.asarray(series.samples, dtype="<f8").tofile(path)
        meta = {"encoding": RAW_ENCODING, "n_samples": int(series.N),
                "sample_rate_hz": 1.0 / series.dt}
        with open(sidecar_path(path), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return [path, sidecar_path(path)]
    if format != "csv":
        raise ParameterError(f"unknown series format {format!r}")
    with open(path, "w") as fh:
        fh.writelines(fmt(v) + "\n" for v in series.samples)
    return [path]


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_estimate_csv(est, path):
    """Columns ``frequency_hz, power, dof, ci_lo, ci_hi``; the interval
    columns are empty when the estimate carries no band."""
    f = est.grid.frequencies_hz
    if est.band is None:
        lo = hi = [None] * f.size
    else:
        lo, hi = est.band
    return write_csv(path, ["frequency_hz", "power", "dof", "ci_lo", "ci_hi"],
                     zip(f, est.values, est.dof, lo, hi))


def write_taper_csv(values, path):
    """Columns ``index, value``."""
    v = np.asarray(values, dtype=float)
    return write_csv(path, ["index", "value"], zip(range(v.size), v))


def write_weights_csv(field, path):
    """Long format: ``frequency_hz, k, weight, selected``."""
    f = field.grid.frequencies_hz
    K = field.weights.shape[0]

    def rows():
        for j in range(f.size):
            for k in range(K):
                yield (f[j], k, field.weights[k, j],
                       int(field.selected[k, j]))

    return write_csv(path, ["frequency_hz", "k", "weight", "selected"],
                     rows())


def _parse_value(text):
    text = text.strip()
    if "," in text:
        return tuple(_parse_value(t) for t in text.split(",") if t.strip())
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_model_params(pairs, where="<params>"):
    """``["a=1", "coeffs=0.5,-0.2"]`` to a dict of parsed values."""
    out = {}
    for i, item in enumerate(pairs, start=1):
        if "=" not in item:
            raise ParameterError(f"{where}:{i}: expected key=value, got "
                                 f"{item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if not key:
            raise ParameterError(f"{where}:{i}: empty key")
        out[key] = _parse_value(value)
    return out


def read_model_config(path):
    """Load a :class:`SpectrumModel` from JSON or ``key = value`` text."""
    path = os.fspath(path)
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(
                f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        if "kind" not in d:
            raise ParameterError(f"{path}: model config needs 'kind'")
        return SpectrumModel(d["kind"], d.get("params", {}))
    lines = []
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            lines.append((i, line))
    params = {}
    kind = None
    for i, line in lines:
        parsed = parse_model_params([line], where=f"{path}:{i}")
        ((key, value),) = parsed.items()
        if key == "kind":
            kind = str(value)
        else:
            params[key] = value
    if kind is None:
        raise ParameterError(f"{path}: model config needs 'kind'")
    return SpectrumModel(kind, params)


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(outdir, payload):
    """Write ``manifest.json`` with sorted keys; returns its path."""
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
