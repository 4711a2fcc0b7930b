"""
report.py

Encoders and writers for JSON reports, CSV tables and PGM maps. Every
writer produces identical bytes for identical input.
"""

import json
import logging
import math

import numpy as np

from .errors import InputFormatError

logger = logging.getLogger(__name__)


def encode_complex(x):
    x = complex(x)
    return [x.real, x.imag]


def decode_complex(pair, what="value"):
    if isinstance(pair, (int, float)) and not isinstance(pair, bool):
        pair = [pair, 0]
    if (
        not isinstance(pair, (list, tuple))
        or len(pair) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)
    ):
        raise InputFormatError(f"{what}: expected [re, im], got {pair!r}")
    try:
        value = complex(pair[0], pair[1])
    except OverflowError:
        value = complex("inf")
    if not np.isfinite(value):
        raise InputFormatError(f"{what}: {pair!r} is not finite")
    return value


def encode_matrix(m):
    """Row-major list of rows of [re, im] pairs."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[encode_complex(x) for x in row] for row in m]


def decode_matrix(rows, what="matrix"):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputFormatError(f"{what}: expected a non-empty list of rows")
    width = len(rows[0])
    if width == 0 or any(len(r) != width for r in rows):
        raise InputFormatError(f"{what}: rows must be non-empty and of equal length")
    return np.array(
        [[decode_complex(x, what) for x in row] for row in rows], dtype=complex
    )


def to_jsonable(obj):
    """Recursively convert numpy and complex values into JSON-friendly data."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if obj.ndim == 2:
                return encode_matrix(obj)
            return [to_jsonable(v) for v in obj]
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report):
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2) + "\n"


def write_json(path, report):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps(report))
    logger.debug("wrote %s", path)


def fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(x) for x in row) + "\n")
    logger.debug("wrote %s", path)


def write_pgm(path, pixels):
    """Binary P5 greymap; pixels is a 2-D uint8 array, row 0 at the top."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    height, width = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())
    logger.debug("wrote %s", path)
