"""
catalog.py

Named families of inner functions and polynomial generators used as
reference inputs.
"""

import logging

from .errors import InputFormatError
from .inner import make_rational_inner
from .poly import BiPoly

logger = logging.getLogger(__name__)

Z = BiPoly.monomial(1, 0)
W = BiPoly.monomial(0, 1)
ONE = BiPoly(1)


def _product(polys):
    out = ONE
    for p in polys:
        out = out * p
    return out


def annulus(t=0.5):
    """(zw - t)/(1 - t zw); Fredholm of index 1 on t < |lam| < 1."""
    return make_rational_inner(ONE - t * Z * W, factors=[(Z * W - t, 1)])


def disk_hole(t=0.5):
    """(zw - tz - (1-t)w)/(1 - tw - (1-t)z); resolvent on |lam - 1/(2-t)| < (1-t)/(2-t)."""
    return make_rational_inner(ONE - t * W - (1 - t) * Z)


def disconnected(c=0.1):
    """(2z^2 w - z + c)/(2 - zw + c z^2 w); two Fredholm components of index 1."""
    return make_rational_inner(2 * ONE - Z * W + c * Z * Z * W)


def nested_annuli(ts=(0.3, 0.6)):
    """prod (zw - t_i)/(1 - t_i zw)."""
    ts = [float(t) for t in ts]
    p = _product(ONE - t * Z * W for t in ts)
    return make_rational_inner(p, factors=[(Z * W - t, 1) for t in ts])


def even_in_w(c=0.1):
    """(2z^2 w^2 - z + c)/(2 - zw^2 + c z^2 w^2); two components of index 2."""
    return make_rational_inner(2 * ONE - Z * W * W + c * Z * Z * W * W)


def blaschke_z(zeros=(0.0,)):
    """prod (z - a_i)/(1 - conj(a_i) z)."""
    zeros = [complex(a) for a in zeros]
    p = _product(ONE - a.conjugate() * Z for a in zeros)
    # zeros at the origin drop out of p and come back as the z^k prefix
    return make_rational_inner(p, k=len(zeros) - p.deg_z)


def binomial(m=2, n=2):
    """Generator z^m - w^n."""
    return make_rational_inner(Z**m - W**n, mode="polynomial")


def diagonal_power(n=2):
    """Generator (z - w)^n."""
    return make_rational_inner((Z - W) ** n, mode="polynomial", factors=[(Z - W, n)])


def homogeneous2(alpha=1.0, beta=-1.0):
    """Generator (z - alpha w)(z - beta w)."""
    return make_rational_inner(
        (Z - alpha * W) * (Z - beta * W),
        mode="polynomial",
        factors=[(Z - alpha * W, 1), (Z - beta * W, 1)],
    )


FAMILIES = {
    "annulus": (annulus, {"t": float}),
    "disk-hole": (disk_hole, {"t": float}),
    "disconnected": (disconnected, {"c": float}),
    "nested-annuli": (nested_annuli, {"ts": "floats"}),
    "even-in-w": (even_in_w, {"c": float}),
    "blaschke-z": (blaschke_z, {"zeros": "complexes"}),
    "binomial": (binomial, {"m": int, "n": int}),
    "diagonal-power": (diagonal_power, {"n": int}),
    "homogeneous2": (homogeneous2, {"alpha": complex, "beta": complex}),
}


def _parse(kind, text, what):
    try:
        if kind == "floats":
            return [float(x) for x in text.split(",")]
        if kind == "complexes":
            return [complex(x.replace(" ", "")) for x in text.split(",")]
        return kind(text.replace(" ", ""))
    except ValueError as e:
        raise InputFormatError(f"{what}: cannot parse {text!r}") from e


def build(name, params=()):
    """Construct a family member from 'key=value' strings."""
    if name not in FAMILIES:
        raise InputFormatError(f"unknown example {name!r}; known: {sorted(FAMILIES)}")
    constructor, kinds = FAMILIES[name]
    kwargs = {}
    for item in params:
        key, sep, value = item.partition("=")
        if not sep or key not in kinds:
            raise InputFormatError(
                f"{name}: expected one of {sorted(kinds)} as key=value, got {item!r}"
            )
        kwargs[key] = _parse(kinds[key], value, f"{name}.{key}")
    logger.debug("building example %s with %s", name, kwargs)
    return constructor(**kwargs)
