"""
quotient.py

Finite truncations of the compressed shift: [q]^perp inside a box of
monomials z^a w^b, and S_z there as a matrix.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from .config import setting
from .errors import NumericalFailureError, ZeroPolynomialError
from .poly import BiPoly

logger = logging.getLogger(__name__)

DEGREE = setting("quotient", "degree")
KERNEL_DEGREE = setting("quotient", "kernel_degree")
INTERIOR_OFFSET = setting("quotient", "interior_offset")
WEIGHT_TOL = setting("quotient", "weight_tol")
RANK_TOL = setting("reduce", "rank_tol")

RESIDUAL_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class TruncationBasis:
    """
    Orthonormal basis q of the complement of {z^s w^t p} inside the box
    0 <= a <= dz, 0 <= b <= dw. Monomial (a, b) is row a * (dw + 1) + b.
    """

    dz: int
    dw: int
    generator: BiPoly
    shifts: Tuple[Tuple[int, int], ...]
    q: np.ndarray

    @property
    def monomials(self):
        return [(a, b) for a in range(self.dz + 1) for b in range(self.dw + 1)]

    @property
    def dim(self):
        return self.q.shape[1]

    def index(self, a, b):
        return a * (self.dw + 1) + b

    def vector(self, terms):
        """Coefficient vector of sum c z^a w^b for terms {(a, b): c} in the box."""
        v = np.zeros((self.dz + 1) * (self.dw + 1), dtype=complex)
        for (a, b), c in terms.items():
            v[self.index(a, b)] = c
        return v

    def coordinates(self, v):
        return self.q.conj().T @ v

    def contains(self, v, tol=1e-10):
        """v lies in the span of q."""
        norm = np.linalg.norm(v)
        return norm == 0 or np.linalg.norm(v - self.q @ self.coordinates(v)) <= tol * norm


@dataclass(frozen=True, eq=False)
class CompressedShiftMatrix:
    """
    S = Q^H M Q. edge_loss[i] is the mass of column i of Q that multiplication
    by the variable pushes out of the box.
    """

    s: np.ndarray
    var: str
    basis: TruncationBasis
    edge_loss: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.s, 2)) if self.s.size else 0.0


def _box(degree):
    if isinstance(degree, int):
        return degree, degree
    dz, dw = degree
    return int(dz), int(dw)


def _generator(p_or_theta):
    return p_or_theta if isinstance(p_or_theta, BiPoly) else p_or_theta.q


def quotient_basis(p, degree=DEGREE):
    """
    Complement of the submodule generated by p inside the monomial box.
    p may be a BiPoly or a RationalInner, for which its numerator is used.
    """
    p = _generator(p)
    if p.is_zero:
        raise ZeroPolynomialError("cannot truncate the submodule of the zero polynomial")
    dz, dw = _box(degree)
    if p.deg_z > dz or p.deg_w > dw:
        raise ValueError(
            f"degree ({p.deg_z}, {p.deg_w}) of p does not fit the box ({dz}, {dw})"
        )
    size = (dz + 1) * (dw + 1)
    shifts = tuple(
        (s, t) for s in range(dz - p.deg_z + 1) for t in range(dw - p.deg_w + 1)
    )
    rows = np.zeros((len(shifts), size), dtype=complex)
    for r, (s, t) in enumerate(shifts):
        block = np.zeros((dz + 1, dw + 1), dtype=complex)
        block[s : s + p.deg_z + 1, t : t + p.deg_w + 1] = p.coeffs
        rows[r] = block.reshape(-1)
    q = scipy.linalg.null_space(rows.conj()) if len(shifts) else np.eye(size, dtype=complex)
    logger.debug(
        "box (%d, %d): %d shifts, complement dimension %d", dz, dw, len(shifts), q.shape[1]
    )
    return TruncationBasis(dz, dw, p, shifts, q)


def _multiplication(dz, dw, var):
    size = (dz + 1) * (dw + 1)
    m = np.zeros((size, size))
    lost = np.zeros(size, dtype=bool)
    for a in range(dz + 1):
        for b in range(dw + 1):
            src = a * (dw + 1) + b
            a2, b2 = (a + 1, b) if var == "z" else (a, b + 1)
            if a2 <= dz and b2 <= dw:
                m[a2 * (dw + 1) + b2, src] = 1
            else:
                lost[src] = True
    return m, lost


def compress_shift(basis, var="z"):
    if var not in ("z", "w"):
        raise ValueError(f"var must be 'z' or 'w', not {var!r}")
    m, lost = _multiplication(basis.dz, basis.dw, var)
    s = basis.q.conj().T @ m @ basis.q
    edge_loss = np.linalg.norm(basis.q[lost], axis=0)
    out = CompressedShiftMatrix(s, var, basis, edge_loss)
    if out.norm > 1 + 1e-10:
        logger.warning("compressed shift has norm %.12g > 1", out.norm)
    return out


def closed_form_weight(m, N):
    return math.sqrt(N // m + 1) / math.sqrt((N + 1) // m + 1)


def chain_vector(basis, m, n, N, j=0):
    """w^j sum_k z^(N - m k) w^(n k), the N-th vector of chain j."""
    return basis.vector({(N - m * k, n * k + j): 1.0 for k in range(N // m + 1)})


def weighted_shift_weights(m, n, degree=DEGREE):
    """
    Weights of S_z on [z^m - w^n]^perp along the chains w^j e_N, N <= degree - 2,
    checked against sqrt(N//m + 1)/sqrt((N+1)//m + 1) for every j < n.

    Returns (weights, multiplicity); multiplicity counts the pure powers of w
    lying in the complement.
    """
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be positive, got ({m}, {n})")
    dw = max(degree, n * (degree // m) + n - 1)
    p = BiPoly.monomial(m, 0) - BiPoly.monomial(0, n)
    basis = quotient_basis(p, (degree, dw))
    shift = compress_shift(basis, "z")
    weights = []
    for j in range(n):
        for N in range(degree - 1):
            x0 = chain_vector(basis, m, n, N, j)
            x1 = chain_vector(basis, m, n, N + 1, j)
            if not (basis.contains(x0) and basis.contains(x1)):
                raise NumericalFailureError(f"chain vector w^{j} e_{N} left the complement")
            c0, c1 = basis.coordinates(x0), basis.coordinates(x1)
            weight = abs(np.vdot(c1, shift.s @ c0)) / (
                np.linalg.norm(c0) * np.linalg.norm(c1)
            )
            expected = closed_form_weight(m, N)
            if abs(weight - expected) > WEIGHT_TOL:
                raise NumericalFailureError(
                    f"weight at N = {N}, chain {j}: matrix {weight:.15g} "
                    f"vs formula {expected:.15g}"
                )
            if j == 0:
                weights.append(weight)
    multiplicity = sum(
        1 for b in range(dw + 1) if basis.contains(basis.vector({(0, b): 1.0}))
    )
    return weights, multiplicity


def _taylor_vector(basis, fv):
    """Truncated Taylor coefficients of K_lam(z) K^{(j)}_zeta(w)."""
    a = np.arange(basis.dz + 1)
    b = np.arange(basis.dw + 1)
    z_part = np.conj(complex(fv.lam)) ** a
    j = fv.order
    falling = np.array([math.perm(int(k), j) for k in b], dtype=float)
    w_part = falling * np.conj(complex(fv.node)) ** np.maximum(b - j, 0)
    return np.outer(z_part, w_part).reshape(-1)


def kernel_residual(p_or_theta, lam, frame, degree=KERNEL_DEGREE):
    """
    max over the frame of ||S^H v - conj(lam) v|| / ||v|| for the truncated,
    projected frame sections.
    """
    basis = quotient_basis(p_or_theta, degree)
    shift = compress_shift(basis, "z")
    raw = np.array([_taylor_vector(basis, fv) for fv in frame.vectors])
    worst = 0.0
    for section in frame.matrix @ raw:
        v = basis.coordinates(section)
        norm = np.linalg.norm(v)
        if norm == 0:
            continue
        r = np.linalg.norm(shift.s.conj().T @ v - np.conj(lam) * v) / norm
        worst = max(worst, float(r))
    return worst


def residual_bound(frame, degree=KERNEL_DEGREE):
    """
    Geometric tail bound 10 r^(D-1), r the largest of |lam| and the node
    moduli, plus a floor for rounding in the projected residual.
    """
    r = max([abs(frame.lam)] + [abs(v.node) for v in frame.vectors])
    return 10 * r ** (degree - 1) + RESIDUAL_FLOOR


def _interior(shift, interior_degree):
    """Coordinates of the complement vectors supported on z-degree <= interior_degree."""
    basis = shift.basis
    outside = [basis.index(a, b) for a, b in basis.monomials if a > interior_degree]
    if not outside:
        return np.eye(basis.dim, dtype=complex)
    return scipy.linalg.null_space(basis.q[outside])


def _nullity(a, tol=RANK_TOL):
    sv = scipy.linalg.svdvals(a)
    if sv.size == 0 or sv[0] == 0:
        return a.shape[1]
    return int(a.shape[1] - np.sum(sv > tol * sv[0]))


def commutant_dim_estimate(shift, interior_degree=None):
    """
    Dimension of {X : XS = SX, XS^H = S^H X} for S compressed to the complement
    vectors of low z-degree, away from the truncated top edge.
    """
    basis = shift.basis
    if interior_degree is None:
        interior_degree = basis.dz - INTERIOR_OFFSET
    limit = basis.dz - basis.generator.deg_z - 1
    if interior_degree > limit:
        raise ValueError(f"interior degree {interior_degree} exceeds {limit}")
    c = _interior(shift, interior_degree)
    s = c.conj().T @ shift.s @ c
    k = s.shape[0]
    if k == 0:
        return 0
    eye = np.eye(k)
    # Row-major vec: vec(A X B) = (A kron B^T) vec(X).
    system = np.vstack(
        [
            np.kron(eye, s.T) - np.kron(s, eye),
            np.kron(eye, s.conj()) - np.kron(s.conj().T, eye),
        ]
    )
    dim = _nullity(system)
    logger.debug("commutant of a %d x %d interior block has dimension %d", k, k, dim)
    return dim


def weights_table(m, n, degree=DEGREE):
    """Rows (N, formula weight, matrix weight, abs diff) for the CSV report."""
    weights, multiplicity = weighted_shift_weights(m, n, degree)
    rows = []
    for N, w in enumerate(weights):
        expected = closed_form_weight(m, N)
        rows.append((N, expected, w, abs(expected - w)))
    return rows, multiplicity
