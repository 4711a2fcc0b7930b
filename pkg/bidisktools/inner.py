"""
inner.py

Rational inner functions theta = z^k w^l p~/p on the bidisk, and polynomial
generators treated the same way with denominator 1.
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .config import setting
from .errors import (
    FactorMismatchError,
    InputFormatError,
    NotInnerError,
    ZeroFiberError,
    ZeroPolynomialError,
)
from .poly import (
    BiPoly,
    RootSet,
    UniPoly,
    fiber_coefficients,
    fiber_poly,
    reflect,
    rowwise_roots,
    uni_roots,
)

logger = logging.getLogger(__name__)

STABILITY_GRID_N = setting("inner", "stability_grid_n")
STABILITY_TOL = setting("inner", "stability_tol")
INTERIOR_ANGLES = setting("inner", "interior_angles")
FACTOR_TOL = setting("inner", "factor_tol")

STABILITY_RADII = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99)

MODES = ("inner", "polynomial")

# Largest monomial prefix or factor exponent accepted from input.
MAX_EXPONENT = 256


@dataclass(frozen=True)
class StabilityReport:
    interior_min_modulus: float
    torus_zero_candidates: Tuple[Tuple[complex, complex], ...]
    disk_times_circle_violations: Tuple[Tuple[complex, complex], ...]

    @property
    def stable(self):
        return not self.disk_times_circle_violations


@dataclass(frozen=True)
class RationalInner:
    """
    theta = q/p with q = z^k w^l reflect(p).

    In polynomial mode p is 1 and q is the generator of the submodule whose
    orthogonal complement is studied.
    """

    k: int
    l: int
    p: BiPoly
    q: BiPoly
    factors: Tuple[Tuple[BiPoly, int], ...] = field(default=())
    mode: str = "inner"

    @property
    def generator(self):
        """The polynomial the user supplied: denominator or submodule generator."""
        if self.mode == "polynomial":
            return self.q
        return self.p

    def __call__(self, z, w):
        return self.q(z, w) / self.p(z, w)

    def to_json(self):
        return {
            "k": self.k if self.mode == "inner" else 0,
            "l": self.l if self.mode == "inner" else 0,
            "p": self.generator.to_json(),
            "factors": [{"poly": f.to_json(), "exp": e} for f, e in self.factors],
            "mode": self.mode,
        }


def _fiber_violations(p, frozen, grid_n, tol):
    angles = 2 * np.pi * np.arange(grid_n) / grid_n
    samples = [(r, r * np.exp(1j * angles)) for r in STABILITY_RADII]
    samples.append((1.0, np.exp(1j * angles)))
    violations = []
    candidates = []
    for r, lams in samples:
        rows = fiber_coefficients(p, lams, frozen)
        for lam, roots in zip(lams, rowwise_roots(rows)):
            if roots is None:
                violations.append((lam, 0j))
                continue
            for root in roots:
                modulus = abs(root)
                if modulus < 1 - tol:
                    violations.append((lam, root))
                elif abs(modulus - 1) <= tol:
                    if r < 1:
                        violations.append((lam, root))
                    else:
                        candidates.append((lam, root))
    if frozen == "w":
        violations = [(z, w) for w, z in violations]
        candidates = [(z, w) for w, z in candidates]
    return violations, candidates


def validate_stability(p, grid_n=STABILITY_GRID_N, tol=STABILITY_TOL):
    """
    Sample fibers of p in both variables over circles in the closed disk and
    report zeros that rule p out as the denominator of an inner function.
    """
    if p.is_zero:
        raise ZeroPolynomialError("denominator is the zero polynomial")
    violations, candidates = _fiber_violations(p, "z", grid_n, tol)
    v_w, c_w = _fiber_violations(p, "w", grid_n, tol)
    violations += v_w
    # Torus candidates show up from both sides; keep one copy of each.
    for z, w in c_w:
        if not any(abs(z - z0) + abs(w - w0) < 1e-6 for z0, w0 in candidates):
            candidates.append((z, w))

    angles = 2 * np.pi * np.arange(INTERIOR_ANGLES) / INTERIOR_ANGLES
    pts = np.concatenate(
        [[0j]] + [r * np.exp(1j * angles) for r in STABILITY_RADII]
    )
    modulus = np.abs(p(pts.reshape(-1, 1), pts.reshape(1, -1)))
    report = StabilityReport(
        interior_min_modulus=float(modulus.min()),
        torus_zero_candidates=tuple(candidates),
        disk_times_circle_violations=tuple(violations),
    )
    logger.debug(
        "stability: min |p| %.3g, %d torus candidates, %d violations",
        report.interior_min_modulus,
        len(candidates),
        len(violations),
    )
    return report


def _factor_product(factors):
    product = BiPoly(1)
    for poly, exp in factors:
        product = product * poly**exp
    return product


def _check_factors(q, factors, unimodular):
    product = _factor_product(factors)
    if product.is_zero:
        raise FactorMismatchError("factor product is zero")
    a, b = np.unravel_index(np.argmax(np.abs(product.coeffs)), product.coeffs.shape)
    qc = q.coeffs[a, b] if a <= q.deg_z and b <= q.deg_w else 0
    scale = qc / product.coeffs[a, b]
    if unimodular and abs(abs(scale) - 1) > FACTOR_TOL:
        raise FactorMismatchError(
            f"factor product differs from the numerator by |c| = {abs(scale):.6g}, "
            "not a unimodular constant"
        )
    atol = FACTOR_TOL * max(1.0, float(np.max(np.abs(q.coeffs))))
    if scale == 0 or not q.allclose(product * scale, atol=atol):
        raise FactorMismatchError("product of the declared factors does not match q")


def make_rational_inner(
    p, k=0, l=0, factors=None, mode="inner", grid_n=STABILITY_GRID_N, tol=STABILITY_TOL
):
    """
    Build theta = z^k w^l p~/p, or in polynomial mode the quotient by [z^k w^l p].
    """
    if mode not in MODES:
        raise InputFormatError(f"mode must be one of {MODES}, not {mode!r}")
    if k < 0 or l < 0:
        raise InputFormatError(f"k and l must be nonnegative, got ({k}, {l})")
    if max(k, l) > MAX_EXPONENT:
        raise InputFormatError(f"k and l must be at most {MAX_EXPONENT}, got ({k}, {l})")
    if p.is_zero:
        raise ZeroPolynomialError("cannot build a quotient from the zero polynomial")
    factors = tuple((f, int(e)) for f, e in (factors or ()))
    if mode == "polynomial":
        q = p.shift(k, l)
        theta = RationalInner(0, 0, BiPoly(1), q, factors, mode)
    else:
        report = validate_stability(p, grid_n, tol)
        if not report.stable:
            witness = report.disk_times_circle_violations[0]
            raise NotInnerError(
                f"denominator vanishes at (z, w) = ({witness[0]:.6g}, {witness[1]:.6g}) "
                "inside the bidisk, so theta is not inner",
                witness=witness,
            )
        q = reflect(p, p.deg_z, p.deg_w).shift(k, l)
        theta = RationalInner(k, l, p, q, factors, mode)
    if factors:
        _check_factors(theta.q, factors, unimodular=(mode == "inner"))
    logger.debug("built %s theta with numerator degree (%d, %d)", mode, q.deg_z, q.deg_w)
    return theta


def numerator_fiber_roots(theta, lam):
    """Roots in w of q(lam, .)."""
    fiber = fiber_poly(theta.q, lam, "z")
    if fiber.is_zero:
        raise ZeroFiberError(f"numerator fiber at lambda = {lam} vanishes identically", lam)
    return uni_roots(fiber)


def univariate_factor_roots(theta, var="z"):
    """
    Common roots in var of the coefficient polynomials of q, i.e. the roots
    of the largest factor of q that depends on var alone.
    """
    c = theta.q.coeffs if var == "z" else theta.q.coeffs.T
    columns = [UniPoly(c[:, j]) for j in range(c.shape[1])]
    columns = [col for col in columns if not col.is_zero]
    if any(col.degree == 0 for col in columns):
        return RootSet(())
    sets = [uni_roots(col) for col in columns]
    common = []
    for r, mult in sets[0].roots:
        keep = True
        for col, rs in zip(columns[1:], sets[1:]):
            size = float(np.sum(np.abs(col.coeffs))) * max(1.0, abs(r)) ** col.degree
            if abs(col(r)) > 1e-9 * size:
                keep = False
                break
            near = [m for s, m in rs.roots if abs(s - r) < 1e-4 * (1 + abs(r))]
            mult = min(mult, sum(near)) if near else mult
        if keep:
            common.append((r, mult))
    return RootSet(tuple(common))


def is_z_only(theta):
    """theta depends on z alone, e.g. a finite Blaschke product in z."""
    return theta.q.deg_w == 0 and theta.p.deg_w == 0


def boundary_modulus_error(theta, samples=64):
    """max ||theta| - 1| over a torus grid, skipping near-zeros of p."""
    t = np.exp(2j * np.pi * (np.arange(samples) + 0.5) / samples)
    z, w = t.reshape(-1, 1), t.reshape(1, -1)
    den = theta.p(z, w)
    num = theta.q(z, w)
    ok = np.abs(den) > 1e-6
    return float(np.max(np.abs(np.abs(num[ok] / den[ok]) - 1))) if ok.any() else 0.0


def inner_from_json(data, grid_n=STABILITY_GRID_N, tol=STABILITY_TOL):
    if not isinstance(data, dict):
        raise InputFormatError("input must be a JSON object")
    unknown = set(data) - {"k", "l", "p", "factors", "mode"}
    if unknown:
        raise InputFormatError(f"unknown input fields: {sorted(unknown)}")
    if "p" not in data:
        raise InputFormatError("input is missing the polynomial 'p'")
    k, l = data.get("k", 0), data.get("l", 0)
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in (k, l)):
        raise InputFormatError("'k' and 'l' must be integers")
    factors = []
    for i, entry in enumerate(data.get("factors", [])):
        if not isinstance(entry, dict) or set(entry) != {"poly", "exp"}:
            raise InputFormatError(f"factors[{i}]: expected {{'poly', 'exp'}}")
        exp = entry["exp"]
        if not isinstance(exp, int) or isinstance(exp, bool) or not 1 <= exp <= MAX_EXPONENT:
            raise InputFormatError(
                f"factors[{i}].exp must be an integer between 1 and {MAX_EXPONENT}"
            )
        factors.append((BiPoly.from_json(entry["poly"], f"factors[{i}].poly"), entry["exp"]))
    p = BiPoly.from_json(data["p"], "p")
    return make_rational_inner(
        p, k, l, factors, data.get("mode", "inner"), grid_n=grid_n, tol=tol
    )
