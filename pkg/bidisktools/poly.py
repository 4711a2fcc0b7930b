"""
poly.py

Dense complex polynomials in one and two variables: evaluation, reflection
through the torus, fibers, and a companion-matrix root finder.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg
import scipy.signal

from .config import setting
from .errors import InputFormatError, ReflectionDegreeError, ZeroPolynomialError
from .report import decode_complex, encode_complex

logger = logging.getLogger(__name__)

TRIM_TOL = setting("poly", "trim_tol")
CLUSTER_TOL = setting("poly", "cluster_tol")
NEWTON_STEPS = setting("poly", "newton_steps")

# Eigenvalues of a perturbed k-fold root spread over roughly eps**(1/k).
MULTIPLE_ROOT_SCALE = 10.0
EPS = np.finfo(float).eps


def _trim(coeffs):
    c = coeffs
    while c.shape[0] > 1 and np.max(np.abs(c[-1, :])) < TRIM_TOL:
        c = c[:-1, :]
    while c.shape[1] > 1 and np.max(np.abs(c[:, -1])) < TRIM_TOL:
        c = c[:, :-1]
    return c


class BiPoly:
    """
    Bivariate polynomial with coeffs[a][b] the coefficient of z^a w^b.

    Instances are immutable; arithmetic returns new polynomials.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 0:
            c = c.reshape(1, 1)
        if c.ndim != 2 or c.size == 0:
            raise InputFormatError(f"coefficients must form a matrix, got {c.shape}")
        c = np.array(_trim(c))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("BiPoly is immutable")

    def __reduce__(self):
        return (BiPoly, (np.array(self.coeffs),))

    @classmethod
    def from_terms(cls, terms):
        """Build from a mapping {(a, b): coefficient}."""
        if not terms:
            return cls(0)
        dz = max(a for a, _ in terms)
        dw = max(b for _, b in terms)
        c = np.zeros((dz + 1, dw + 1), dtype=complex)
        for (a, b), v in terms.items():
            c[a, b] += v
        return cls(c)

    @classmethod
    def monomial(cls, a, b, coeff=1.0):
        return cls.from_terms({(a, b): coeff})

    @classmethod
    def constant(cls, value):
        return cls(value)

    @property
    def deg_z(self):
        return self.coeffs.shape[0] - 1

    @property
    def deg_w(self):
        return self.coeffs.shape[1] - 1

    @property
    def is_zero(self):
        return self.coeffs.shape == (1, 1) and abs(self.coeffs[0, 0]) < TRIM_TOL

    def __call__(self, z, w):
        return eval_bi(self, z, w)

    def _coerce(self, other):
        if isinstance(other, BiPoly):
            return other
        return BiPoly(other)

    def __add__(self, other):
        other = self._coerce(other)
        shape = (
            max(self.coeffs.shape[0], other.coeffs.shape[0]),
            max(self.coeffs.shape[1], other.coeffs.shape[1]),
        )
        c = np.zeros(shape, dtype=complex)
        c[: self.coeffs.shape[0], : self.coeffs.shape[1]] += self.coeffs
        c[: other.coeffs.shape[0], : other.coeffs.shape[1]] += other.coeffs
        return BiPoly(c)

    __radd__ = __add__

    def __neg__(self):
        return BiPoly(-self.coeffs)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, BiPoly):
            return BiPoly(scipy.signal.convolve2d(self.coeffs, other.coeffs))
        return BiPoly(self.coeffs * complex(other))

    __rmul__ = __mul__

    def __pow__(self, k):
        result = BiPoly(1)
        for _ in range(int(k)):
            result = result * self
        return result

    def shift(self, s, t):
        """z^s w^t times this polynomial."""
        c = np.zeros((self.deg_z + 1 + s, self.deg_w + 1 + t), dtype=complex)
        c[s:, t:] = self.coeffs
        return BiPoly(c)

    def allclose(self, other, atol=1e-12):
        other = self._coerce(other)
        diff = self - other
        return bool(np.max(np.abs(diff.coeffs)) <= atol)

    def to_json(self):
        return {"coeffs": [[encode_complex(x) for x in row] for row in self.coeffs]}

    @classmethod
    def from_json(cls, data, what="polynomial"):
        if not isinstance(data, dict) or set(data) != {"coeffs"}:
            raise InputFormatError(f"{what}: expected an object with only 'coeffs'")
        rows = data["coeffs"]
        if not isinstance(rows, list) or not rows:
            raise InputFormatError(f"{what}: 'coeffs' must be a non-empty list of rows")
        width = max(len(r) if isinstance(r, list) else -1 for r in rows)
        if width <= 0 or any(not isinstance(r, list) for r in rows):
            raise InputFormatError(f"{what}: every row of 'coeffs' must be a list")
        c = np.zeros((len(rows), width), dtype=complex)
        for a, row in enumerate(rows):
            for b, x in enumerate(row):
                c[a, b] = decode_complex(x, f"{what}.coeffs[{a}][{b}]")
        return cls(c)

    def __repr__(self):
        terms = []
        for (a, b), v in np.ndenumerate(self.coeffs):
            if abs(v) >= TRIM_TOL:
                terms.append(f"({v:.6g})z^{a}w^{b}")
        return "BiPoly(" + (" + ".join(terms) or "0") + ")"


class UniPoly:
    """Univariate polynomial, coefficients ascending in degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        n = len(c)
        while n > 1 and abs(c[n - 1]) < TRIM_TOL:
            n -= 1
        c = np.array(c[:n])
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("UniPoly is immutable")

    def __reduce__(self):
        return (UniPoly, (np.array(self.coeffs),))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return self.degree == 0 and abs(self.coeffs[0]) < TRIM_TOL

    def __call__(self, x):
        acc = np.zeros_like(np.asarray(x, dtype=complex))
        for c in self.coeffs[::-1]:
            acc = acc * x + c
        return acc

    def derivative(self):
        if self.degree == 0:
            return UniPoly(0)
        return UniPoly(self.coeffs[1:] * np.arange(1, len(self.coeffs)))

    def __repr__(self):
        return f"UniPoly({list(self.coeffs)})"


@dataclass(frozen=True)
class RootSet:
    """Distinct roots with multiplicities, sorted by (real, imag)."""

    roots: Tuple[Tuple[complex, int], ...]

    @property
    def values(self):
        return np.array([r for r, _ in self.roots], dtype=complex)

    @property
    def multiplicities(self):
        return [k for _, k in self.roots]

    @property
    def degree(self):
        return sum(k for _, k in self.roots)

    def count_inside(self, radius=1.0):
        return sum(k for r, k in self.roots if abs(r) < radius)

    def inside(self, radius=1.0):
        return RootSet(tuple((r, k) for r, k in self.roots if abs(r) < radius))

    def __len__(self):
        return len(self.roots)


def eval_bi(p, z, w):
    """Evaluate p at (z, w) by nested Horner; z and w may be arrays."""
    acc = 0j
    for row in p.coeffs[::-1]:
        inner = 0j
        for c in row[::-1]:
            inner = inner * w + c
        acc = acc * z + inner
    return acc


def reflect(p, m, n):
    """z^m w^n conj(p(1/conj z, 1/conj w)), i.e. c~[a][b] = conj(c[m-a][n-b])."""
    if m < p.deg_z or n < p.deg_w:
        raise ReflectionDegreeError(
            f"reflection degree ({m}, {n}) is below polynomial degree "
            f"({p.deg_z}, {p.deg_w})"
        )
    padded = np.zeros((m + 1, n + 1), dtype=complex)
    padded[: p.deg_z + 1, : p.deg_w + 1] = p.coeffs
    return BiPoly(np.conj(padded[::-1, ::-1]))


def fiber_poly(p, lam, frozen="z"):
    """
    Freeze one variable of p at lam and return the polynomial in the other.

    frozen="z" gives p(lam, .) as a polynomial in w; frozen="w" gives p(., lam).
    """
    if frozen == "z":
        c = p.coeffs
    elif frozen == "w":
        c = p.coeffs.T
    else:
        raise ValueError(f"frozen must be 'z' or 'w', not {frozen!r}")
    acc = np.zeros(c.shape[1], dtype=complex)
    for row in c[::-1]:
        acc = acc * lam + row
    return UniPoly(acc)


def fiber_coefficients(p, lams, frozen="z"):
    """Fiber coefficient rows for an array of frozen values, shape (len, deg+1)."""
    c = p.coeffs if frozen == "z" else p.coeffs.T
    lams = np.asarray(lams, dtype=complex).reshape(-1, 1)
    acc = np.zeros((lams.shape[0], c.shape[1]), dtype=complex)
    for row in c[::-1]:
        acc = acc * lams + row
    return acc


def _polish(p, roots, steps):
    dp = p.derivative()
    polished = []
    for r in roots:
        f = p(r)
        for _ in range(steps):
            df = dp(r)
            if df == 0:
                break
            candidate = r - f / df
            fc = p(candidate)
            if abs(fc) >= abs(f):
                break
            r, f = candidate, fc
        polished.append(complex(r))
    return polished


def _merge_radius(k, centre, cluster_tol):
    if k <= 2:
        return cluster_tol
    return max(cluster_tol, MULTIPLE_ROOT_SCALE * EPS ** (1.0 / k) * (1 + abs(centre)))


def cluster_roots(values, cluster_tol=CLUSTER_TOL):
    """
    Group numerically split copies of multiple roots.

    Every root seeds the largest set of its nearest neighbours whose spread
    is consistent with one perturbed root of that multiplicity; larger
    groups claim their members first.
    """
    values = [complex(v) for v in values]
    n = len(values)
    candidates = []
    for i in range(n):
        order = sorted(range(n), key=lambda j: (abs(values[j] - values[i]), j))
        best = [i]
        for k in range(2, n + 1):
            pts = np.array([values[j] for j in order[:k]])
            centre = pts.mean()
            if 2 * np.max(np.abs(pts - centre)) <= _merge_radius(k, centre, cluster_tol):
                best = order[:k]
        candidates.append(sorted(best))
    unused = set(range(n))
    groups = []
    for members in sorted(candidates, key=lambda m: (-len(m), m)):
        if all(j in unused for j in members):
            groups.append(members)
            unused -= set(members)
    groups += [[j] for j in sorted(unused)]
    merged = [(complex(np.mean([values[j] for j in g])), len(g)) for g in groups]
    merged.sort(key=lambda rk: (rk[0].real, rk[0].imag))
    return tuple(merged)


def refine_multiple_root(p, root, k, steps=NEWTON_STEPS):
    """
    A k-fold root of p is a simple root of its (k-1)-th derivative; Newton
    there recovers the digits that the cluster mean loses.
    """
    q = p
    for _ in range(k - 1):
        q = q.derivative()
    return _polish(q, [root], steps)[0]


def uni_roots(p, cluster_tol=CLUSTER_TOL):
    """All complex roots of p with multiplicity."""
    if p.is_zero:
        raise ZeroPolynomialError("the zero polynomial has no well-defined root set")
    d = p.degree
    if d == 0:
        return RootSet(())
    c = p.coeffs
    if d == 1:
        raw = [-c[0] / c[1]]
    else:
        raw = scipy.linalg.eigvals(scipy.linalg.companion(c[::-1]))
    roots = _polish(p, raw, NEWTON_STEPS)
    merged = []
    for r, k in cluster_roots(roots, cluster_tol):
        if k > 1:
            refined = refine_multiple_root(p, r, k)
            if abs(refined - r) <= _merge_radius(k, r, cluster_tol):
                r = refined
        merged.append((r, k))
    merged.sort(key=lambda rk: (rk[0].real, rk[0].imag))
    return RootSet(tuple(merged))


def batched_roots(rows):
    """
    Roots of many polynomials of the same degree at once.

    rows has shape (count, d+1), ascending coefficients with a nonzero
    leading column; returns shape (count, d). No polishing or clustering.
    """
    rows = np.asarray(rows, dtype=complex)
    count, width = rows.shape
    d = width - 1
    if d == 0:
        return np.zeros((count, 0), dtype=complex)
    if d == 1:
        return (-rows[:, 0] / rows[:, 1]).reshape(count, 1)
    monic = rows[:, :-1] / rows[:, -1:]
    comp = np.zeros((count, d, d), dtype=complex)
    comp[:, 0, :] = -monic[:, ::-1]
    idx = np.arange(d - 1)
    comp[:, idx + 1, idx] = 1
    return np.linalg.eigvals(comp)


def monic_from_roots(roots):
    """Ascending coefficients of the monic polynomial with the given roots."""
    coeffs = np.array([1.0 + 0j])
    for r in roots:
        coeffs = np.convolve(coeffs, [-r, 1.0])
    return coeffs


def rowwise_roots(rows):
    """
    Roots of each coefficient row, allowing the effective degree to vary.

    Rows are grouped by degree and solved together; an identically zero row
    yields None.
    """
    rows = np.asarray(rows, dtype=complex)
    big = np.abs(rows) >= TRIM_TOL
    degrees = np.where(big.any(axis=1), rows.shape[1] - 1 - np.argmax(big[:, ::-1], axis=1), -1)
    result = [None] * rows.shape[0]
    for d in np.unique(degrees):
        idx = np.nonzero(degrees == d)[0]
        if d < 0:
            continue
        roots = batched_roots(rows[idx, : d + 1])
        for i, r in zip(idx, roots):
            result[i] = r
    return result
