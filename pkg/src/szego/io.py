"""JSON input parsing and CSV / metadata output."""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np

from .errors import InputError, SymbolError
from .hardy import HardyFunction, RationalSymbol, default_modes, rational_to_coeffs


def _complex_list(value, pointer):
    if not isinstance(value, list) or not value:
        raise InputError("expected a non-empty array of [re, im] pairs", pointer)
    out = []
    for i, pair in enumerate(value):
        p = f"{pointer}/{i}"
        if not (isinstance(pair, list) and len(pair) == 2):
            raise InputError("expected a [re, im] pair", p)
        for j, x in enumerate(pair):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x):
                raise InputError("expected a finite number", f"{p}/{j}")
        out.append(complex(pair[0], pair[1]))
    return np.array(out, dtype=complex)


def parse_datum(obj) -> HardyFunction | RationalSymbol:
    """Decode ``{"coeffs": [...]}`` or ``{"rational": {"A", "B", "d"}}``."""
    if not isinstance(obj, dict):
        raise InputError("top level must be an object", "")
    keys = {"coeffs", "rational"} & set(obj)
    if len(keys) != 1:
        raise InputError('exactly one of "coeffs" or "rational" is required', "")
    extra = set(obj) - keys
    if extra:
        raise InputError(f"unexpected key {sorted(extra)[0]!r}", f"/{sorted(extra)[0]}")
    if "coeffs" in obj:
        return HardyFunction(_complex_list(obj["coeffs"], "/coeffs"))
    rat = obj["rational"]
    if not isinstance(rat, dict):
        raise InputError("expected an object", "/rational")
    for key in ("A", "B", "d"):
        if key not in rat:
            raise InputError(f"missing key {key!r}", "/rational")
    d = rat["d"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise InputError("expected a positive integer", "/rational/d")
    A = _complex_list(rat["A"], "/rational/A")
    B = _complex_list(rat["B"], "/rational/B")
    try:
        return RationalSymbol(A, B, d)
    except SymbolError as exc:
        raise InputError(str(exc), "/rational") from exc


def parse_input(path) -> HardyFunction | RationalSymbol:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_datum(obj)


def datum_coeffs(datum, modes: int | None = None, tol: float = 1e-12) -> HardyFunction:
    """Coefficients of a parsed datum, truncated or padded to ``modes``."""
    if isinstance(datum, RationalSymbol):
        n = modes if modes is not None else default_modes(datum, tol)
        return rational_to_coeffs(datum, n)
    if modes is None:
        return datum
    return datum.truncated(modes)


def encode_datum(datum) -> dict:
    def pairs(c):
        return [[float(z.real), float(z.imag)] for z in np.asarray(c, dtype=complex)]

    if isinstance(datum, RationalSymbol):
        return {"rational": {"A": pairs(datum.A), "B": pairs(datum.B), "d": int(datum.d)}}
    return {"coeffs": pairs(datum.coeffs)}


def fmt(x) -> str:
    """17 significant digits, enough for an exact decimal round trip."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            values = [row[h] for h in header] if isinstance(row, dict) else row
            w.writerow([fmt(v) for v in values])
    return path


def read_csv(path):
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [[float(x) for x in row] for row in r]


def coeff_rows(c):
    return [{"n": n, "re": z.real, "im": z.imag} for n, z in enumerate(np.asarray(c, dtype=complex))]


def write_metadata(csv_path, config: dict, summary: dict) -> Path:
    """Sidecar ``<out>.meta.json`` with the run configuration and versions."""
    import scipy

    from . import __version__

    path = Path(str(csv_path) + ".meta.json")
    meta = {
        "config": config,
        "summary": summary,
        "versions": {
            "szego": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    path.write_text(json.dumps(meta, indent=2, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
