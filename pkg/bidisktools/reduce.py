"""
reduce.py

Reducibility of S_z on each Fredholm component from the algebra generated by
the curvature of the kernel bundle and its covariant derivatives, and strict
reducibility across components: a splitting of the bundle that is nontrivial
on every component and orthogonal between any two of them.
"""

import enum
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.ndimage

from .bundle import (
    FrameField,
    FrameVector,
    KernelFrame,
    cross_gram,
    curvature_jets,
    gram,
    kernel_frame,
    orthonormal_transform,
    vector_gram,
)
from .config import setting
from .errors import (
    CoalescingPointError,
    CurvatureError,
    InputFormatError,
    NumericalFailureError,
    SingularGramError,
    UnivariateFactorError,
)
from .inner import univariate_factor_roots
from .poly import BiPoly, fiber_poly, uni_roots

logger = logging.getLogger(__name__)

MAX_ORDER = setting("reduce", "max_order")
PRODUCT_LENGTH = setting("reduce", "product_length")
RANK_TOL = setting("reduce", "rank_tol")
SAMPLES_PER_COMPONENT = setting("reduce", "samples_per_component")
PROJECTION_SAMPLES = setting("reduce", "projection_samples")
CROSS_SAMPLES = setting("reduce", "cross_samples")
ORTHOGONALITY_TOL = setting("reduce", "orthogonality_tol")
DEGREE2_TOL = setting("reduce", "degree2_tol")

ESCALATED_ORDER = 3
ESCALATED_LENGTH = 4
CLOSURE_TOL = 1e-4
RESAMPLE_ATTEMPTS = 8


class Verdict(enum.Enum):
    IRREDUCIBLE = "Irreducible"
    REDUCIBLE = "Reducible"


@dataclass(frozen=True, eq=False)
class MatrixAlgebraBasis:
    """A Frobenius-orthonormal basis of the *-algebra generated by generators."""

    lam: complex
    generators: Tuple[np.ndarray, ...]
    span_basis: Tuple[np.ndarray, ...]
    max_order: int
    length: int
    size: int

    @property
    def dim(self):
        return len(self.span_basis)


@dataclass(eq=False)
class ReducibilityReport:
    component_id: int
    blocks: List[Tuple[int, int]]
    commutant_dim: int
    minimal_projections: List[np.ndarray]
    verdict: Verdict
    sample_points: List[complex]
    algebra_dim: int
    block_of: List[int] = field(default_factory=list)
    commutant_basis: List[np.ndarray] = field(default_factory=list, repr=False)

    def to_json(self):
        return {
            "component_id": self.component_id,
            "blocks": [list(b) for b in self.blocks],
            "commutant_dim": self.commutant_dim,
            "algebra_dim": self.algebra_dim,
            "minimal_projections": self.minimal_projections,
            "verdict": self.verdict.value,
            "sample_points": self.sample_points,
        }


@dataclass(eq=False)
class StrictReducibilityReport:
    per_component: List[ReducibilityReport]
    cross_orthogonality: List[dict]
    verdict: Verdict
    witness: Optional[dict]
    reason: str

    def to_json(self):
        return {
            "per_component": [r.to_json() for r in self.per_component],
            "cross_orthogonality": self.cross_orthogonality,
            "verdict": self.verdict.value,
            "witness": self.witness,
            "reason": self.reason,
        }


def _span(mats, tol=RANK_TOL):
    """Orthonormal basis, in the Frobenius inner product, of the span of mats."""
    mats = [m for m in mats if np.linalg.norm(m) > 0]
    if not mats:
        return []
    size = mats[0].shape[0]
    rows = np.array([m.reshape(-1) / np.linalg.norm(m) for m in mats])
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(s > tol * s[0]))
    return [vh[k].reshape(size, size) for k in range(rank)]


def _residual(mat, basis):
    rows = np.array([b.reshape(-1) for b in basis])
    x = mat.reshape(-1)
    proj = (x @ rows.conj().T) @ rows
    return np.linalg.norm(x - proj) / max(np.linalg.norm(x), 1e-300)


def closure_defect(alg):
    """Largest relative residual of a product of two basis elements off the span."""
    return max(
        (_residual(a @ b, alg.span_basis) for a in alg.span_basis for b in alg.span_basis),
        default=0.0,
    )


def _generators(samples, max_order, size):
    """
    Curvature and covariant derivatives up to max_order with their adjoints,
    dropping those that are multiples of the identity up to rounding.
    """
    mats = [c.orthonormal for c in samples if sum(c.order) <= max_order]
    mats += [m.conj().T for m in mats]
    scale = max((np.linalg.norm(m) for m in mats), default=0.0)
    eye = np.eye(size)
    kept = []
    for m in mats:
        traceless = m - np.trace(m) / size * eye
        if np.linalg.norm(traceless) > RANK_TOL * scale:
            kept.append(m)
    return kept


def _close(generators, size, length):
    """Span of the identity and every word of at most length generators."""
    basis = _span([np.eye(size, dtype=complex)] + generators)
    for _ in range(length - 1):
        if not generators or len(basis) == size * size:
            break
        grown = _span(basis + [a @ g for a in basis for g in generators])
        if len(grown) == len(basis):
            break
        basis = grown
    return basis


def _algebra_at(frame_field, lam, max_order, length):
    samples = curvature_jets(frame_field, lam, max_order)
    size = samples[0].matrix.shape[0]
    gens = _generators(samples, max_order, size)
    basis = _close(gens, size, length)
    if max_order < ESCALATED_ORDER:
        lower = _close(_generators(samples, max_order - 1, size), size, length)
        if len(basis) > len(lower):
            logger.debug(
                "algebra dimension grew from %d to %d at order %d; escalating",
                len(lower),
                len(basis),
                max_order,
            )
            return _algebra_at(frame_field, lam, ESCALATED_ORDER, ESCALATED_LENGTH)
    alg = MatrixAlgebraBasis(lam, tuple(gens), tuple(basis), max_order, length, size)
    defect = closure_defect(alg)
    if defect > CLOSURE_TOL:
        if length < ESCALATED_LENGTH:
            logger.debug("words of length %d do not close the algebra at %s", length, lam)
            return _algebra_at(frame_field, lam, max_order, ESCALATED_LENGTH)
        raise NumericalFailureError(
            f"curvature algebra at {lam} is not closed (defect {defect:.3g})"
        )
    return alg


def curvature_algebra(
    theta,
    lam,
    max_order=MAX_ORDER,
    length=PRODUCT_LENGTH,
    frame_field=None,
    check_coalescing=True,
):
    """
    The algebra generated by the curvature and its covariant derivatives at
    lam, in the Cholesky orthonormal frame.
    """
    lam = complex(lam)
    if frame_field is None:
        frame_field = FrameField(theta, lam)
    alg = _algebra_at(frame_field, lam, max_order, length)
    logger.debug("curvature algebra at %s: dimension %d of %d", lam, alg.dim, alg.size**2)
    if check_coalescing:
        delta = 0.5 * min(frame_field.safe_radius(lam), 0.02)
        for mu in (lam + delta, lam - delta):
            other = _algebra_at(frame_field, mu, alg.max_order, alg.length)
            if other.dim != alg.dim:
                raise CoalescingPointError(
                    f"algebra dimension changes from {alg.dim} to {other.dim} "
                    f"between {lam} and {mu}; resample away from this point"
                )
    return alg


def _random_hermitian(basis, rng):
    h = np.zeros_like(basis[0])
    for c in basis:
        a, b = rng.standard_normal(2)
        h += a * (c + c.conj().T) / 2 + b * (c - c.conj().T) / 2j
    return h


def _eigenprojections(h, tol=1e-6):
    values, vectors = np.linalg.eigh(h)
    spread = max(1.0, float(np.ptp(values))) if values.size else 1.0
    groups = [[0]]
    for k in range(1, len(values)):
        if values[k] - values[k - 1] <= tol * spread:
            groups[-1].append(k)
        else:
            groups.append([k])
    out = []
    for g in groups:
        v = vectors[:, g]
        out.append(v @ v.conj().T)
    return out


def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def commutant_and_blocks(alg, rng=None, component_id=0, sample_points=None):
    """
    Commutant of the algebra and its block structure M(n_1, m_1) + ...: n_i is
    the size of block i and m_i its multiplicity.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    size = alg.size
    points = list(sample_points) if sample_points is not None else [alg.lam]
    eye = np.eye(size)
    # Column-major vec: vec(AX - XA) = (I kron A - A^T kron I) vec(X).
    system = np.vstack([np.kron(eye, a) - np.kron(a.T, eye) for a in alg.span_basis])
    _, s, vh = np.linalg.svd(system)
    rank = int(np.sum(s > RANK_TOL * s[0])) if s[0] > 0 else 0
    commutant = [vh[k].conj().reshape(size, size, order="F") for k in range(rank, size * size)]
    commutant = _span(commutant)

    projections = _eigenprojections(_random_hermitian(commutant, rng))
    parent = list(range(len(projections)))
    for a, b in itertools.combinations(range(len(projections)), 2):
        pa, pb = projections[a], projections[b]
        if any(np.linalg.norm(pa @ c @ pb) > 1e-6 for c in commutant):
            parent[_find(parent, a)] = _find(parent, b)
    roots = sorted({_find(parent, i) for i in range(len(projections))})
    block_of = [roots.index(_find(parent, i)) for i in range(len(projections))]
    blocks = []
    for r in range(len(roots)):
        members = [i for i, b in enumerate(block_of) if b == r]
        ranks = {int(round(np.trace(projections[i]).real)) for i in members}
        if len(ranks) != 1:
            raise NumericalFailureError(
                f"minimal projections of one block have ranks {sorted(ranks)}"
            )
        blocks.append((ranks.pop(), len(members)))

    dim_a = sum(n * n for n, _ in blocks)
    dim_c = sum(m * m for _, m in blocks)
    total = sum(n * m for n, m in blocks)
    if dim_a != alg.dim or dim_c != len(commutant) or total != size:
        raise NumericalFailureError(
            f"blocks {blocks} do not fit algebra dimension {alg.dim}, "
            f"commutant dimension {len(commutant)} and rank {size}"
        )
    verdict = Verdict.IRREDUCIBLE if len(commutant) == 1 else Verdict.REDUCIBLE
    return ReducibilityReport(
        component_id,
        blocks,
        len(commutant),
        projections,
        verdict,
        points,
        alg.dim,
        block_of,
        commutant,
    )


def random_minimal_projections(report, block, count, rng):
    """count minimal projections of the commutant inside one block."""
    members = [i for i, b in enumerate(report.block_of) if b == block]
    total = sum(report.minimal_projections[i] for i in members)
    values, vectors = np.linalg.eigh(total)
    u = vectors[:, values > 0.5]
    out = []
    for _ in range(count):
        h = u.conj().T @ _random_hermitian(report.commutant_basis, rng) @ u
        p = _eigenprojections(h)[0]
        out.append(u @ p @ u.conj().T)
    return out


def degree2_criterion(alpha, beta):
    """S_z on [(z - alpha w)(z - beta w)]^perp is reducible iff alpha + beta = 0."""
    if alpha == 0 or beta == 0:
        raise InputFormatError(f"alpha and beta must be nonzero, got ({alpha}, {beta})")
    return abs(complex(alpha) + complex(beta)) < DEGREE2_TOL


def _orthonormalized(frame):
    a = orthonormal_transform(gram(frame).entries)
    return KernelFrame(frame.lam, frame.vectors, a @ frame.matrix)


def _stack(frames):
    vectors = [v for f in frames for v in f.vectors]
    coeffs = scipy.linalg.block_diag(*[f.matrix for f in frames])
    return vectors, coeffs


def max_cross_inner_product(first, second, points_first, points_second):
    """
    Largest |<u, v>| over unit sections u of first(mu), v of second(nu), for
    mu in points_first and nu in points_second.
    """
    fa = [_orthonormalized(first(mu)) for mu in points_first]
    fb = [_orthonormalized(second(nu)) for nu in points_second]
    va, ca = _stack(fa)
    vb, cb = _stack(fb)
    return float(np.max(np.abs(ca @ vector_gram(va, vb) @ cb.conj().T)))


def cross_component_orthogonal(
    first, second, points_first, points_second, tol=ORTHOGONALITY_TOL
):
    """first(mu) is orthogonal to second(nu) for all sampled mu and nu."""
    return max_cross_inner_product(first, second, points_first, points_second) < tol


class ExtendedSubBundle:
    """
    E(mu) intersected with the orthogonal complement of the sections avoid at
    a base point; for the complement of a reducing sub-bundle this is the
    reducing sub-bundle itself.
    """

    def __init__(self, theta, avoid, rank):
        self.theta = theta
        self.avoid = avoid
        self.rank = rank

    def __call__(self, mu):
        full = kernel_frame(self.theta, mu)
        x = cross_gram(full, self.avoid)
        null = scipy.linalg.null_space(x.T, rcond=1e-9)
        if null.shape[1] != self.rank:
            raise NumericalFailureError(
                f"candidate sub-bundle has rank {null.shape[1]} at {mu}, expected {self.rank}"
            )
        return KernelFrame(full.lam, full.vectors, null.T @ full.matrix)


def projection_sub_bundles(theta, lam0, projection):
    """
    The splitting (E1, E2) of the kernel bundle that a projection in the
    orthonormal frame at lam0 defines there, extended to every fiber.
    """
    base = kernel_frame(theta, lam0)
    a = orthonormal_transform(gram(base).entries)
    values, vectors = np.linalg.eigh(projection)
    u1 = vectors[:, values > 0.5]
    u2 = vectors[:, values <= 0.5]
    first = KernelFrame(base.lam, base.vectors, u1.conj().T @ a @ base.matrix)
    second = KernelFrame(base.lam, base.vectors, u2.conj().T @ a @ base.matrix)
    return (
        ExtendedSubBundle(theta, second, u1.shape[1]),
        ExtendedSubBundle(theta, first, u2.shape[1]),
    )


def rotation_orders(theta):
    """n >= 2 such that theta only involves powers of w divisible by n."""
    q = theta.q.coeffs
    used = [b for b in range(q.shape[1]) if np.any(q[:, b] != 0)]
    top = max(used) if used else 0
    return [n for n in range(2, top + 1) if all(b % n == 0 for b in used)]


class RotationSubBundle:
    """
    Sections sum_k zeta^(jk) K_mu K_{rho zeta^k} over each orbit of nodes under
    w -> zeta w, zeta = e^(2 pi i/n), for the characters j in characters.
    """

    def __init__(self, theta, n, characters):
        if n not in rotation_orders(theta):
            raise ValueError(f"numerator is not a polynomial in w^{n}")
        self.theta = theta
        self.n = n
        self.characters = tuple(characters)
        self.reduced = BiPoly(theta.q.coeffs[:, ::n])

    def __call__(self, mu):
        mu = complex(mu)
        n = self.n
        zeta = np.exp(2j * np.pi / n)
        roots = uni_roots(fiber_poly(self.reduced, mu, "z")).inside(1.0)
        vectors, rows = [], []
        for u, mult in roots.roots:
            if mult != 1:
                raise NumericalFailureError(f"repeated node orbit at lambda = {mu}")
            start = len(vectors)
            if abs(u) < 1e-12:
                vectors += [FrameVector(mu, 0j, i) for i in range(n)]
            else:
                rho = np.exp(np.log(complex(u)) / n)
                vectors += [FrameVector(mu, complex(rho * zeta**k)) for k in range(n)]
            for j in self.characters:
                row = np.zeros(n, dtype=complex)
                if abs(u) < 1e-12:
                    row[j] = 1 / math.factorial(j)
                else:
                    row[:] = zeta ** (j * np.arange(n)) / (n * np.conj(rho) ** j)
                rows.append((start, row))
        coeffs = np.zeros((len(rows), len(vectors)), dtype=complex)
        for r, (start, row) in enumerate(rows):
            coeffs[r, start : start + n] = row
        return KernelFrame(mu, tuple(vectors), coeffs)


def rotation_sub_bundles(theta, n):
    """One sub-bundle per character of the rotation w -> e^(2 pi i/n) w."""
    return [RotationSubBundle(theta, n, (j,)) for j in range(n)]


def _depth(region_map, label):
    mask = region_map.labels == label
    return scipy.ndimage.distance_transform_cdt(mask, metric="taxicab")


def sample_points(region_map, component, count, rng, min_depth=3):
    """The representative and count - 1 random deep cells of a component."""
    depth = _depth(region_map, component.label)
    points = region_map.points
    deep = points[depth >= min_depth]
    if deep.size == 0:
        deep = points[depth >= 1]
    picks = rng.choice(deep.size, size=min(count, deep.size), replace=False)
    chosen = [complex(component.representative)]
    chosen += [complex(deep[i]) for i in picks if deep[i] != component.representative]
    return chosen[:count]


def _signature(report):
    return report.commutant_dim, tuple(sorted(report.blocks))


def component_report(theta, region_map, component, rng, samples=SAMPLES_PER_COMPONENT):
    """Curvature-algebra verdicts at several points of a component, by majority."""
    candidates = sample_points(region_map, component, samples + RESAMPLE_ATTEMPTS, rng)
    reports = []
    used = []
    for lam in candidates:
        if len(reports) == samples:
            break
        try:
            alg = curvature_algebra(theta, lam)
        except (CoalescingPointError, CurvatureError, SingularGramError) as e:
            logger.debug("resampling component %d: %s", component.label, e)
            continue
        reports.append(commutant_and_blocks(alg, rng, component.label, [lam]))
        used.append(lam)
    if not reports:
        raise CoalescingPointError(
            f"no usable sample point found in component {component.label}"
        )
    votes = Counter(_signature(r) for r in reports)
    winner, count = votes.most_common(1)[0]
    if count < len(reports):
        logger.warning(
            "component %d: sample points disagree on the algebra (%s)",
            component.label,
            dict(votes),
        )
    chosen = next(r for r in reports if _signature(r) == winner)
    own = chosen.sample_points[0]
    chosen.sample_points = [own] + [p for p in used if p != own]
    return chosen


def _candidates(theta, report, rng, projection_samples):
    lam0 = report.sample_points[0]
    size = sum(n * m for n, m in report.blocks)
    projections = list(report.minimal_projections)
    for b, (_, m) in enumerate(report.blocks):
        if m > 1:
            projections += random_minimal_projections(report, b, projection_samples, rng)
    eye = np.eye(size)
    out = []
    for p in projections:
        for candidate in (p, eye - p):
            rank = int(round(np.trace(candidate).real))
            if 0 < rank < size:
                out.append(projection_sub_bundles(theta, lam0, candidate))
    return out


def _compatible(first, second, points_first, points_second, log, tag):
    """E1 and E2 orthogonal in both directions between two candidate splittings."""
    try:
        a = max_cross_inner_product(first[0], second[1], points_first, points_second)
        b = max_cross_inner_product(first[1], second[0], points_first, points_second)
    except ValueError as e:
        logger.debug("candidate %s rejected: %s", tag, e)
        log.append({"pair": tag, "orthogonal": False, "max_inner_product": None})
        return False
    worst = max(a, b)
    ok = worst < ORTHOGONALITY_TOL
    log.append({"pair": tag, "orthogonal": ok, "max_inner_product": worst})
    return ok


def _search(choices, points, log):
    """
    Backtracking over one candidate per component, every pair (including a
    candidate with itself) orthogonal.
    """
    labels = list(choices)
    cache = {}

    def ok(i, a, j, b):
        key = (i, a, j, b)
        if key not in cache:
            cache[key] = _compatible(
                choices[labels[i]][a],
                choices[labels[j]][b],
                points[labels[i]],
                points[labels[j]],
                log,
                [labels[i], a, labels[j], b],
            )
        return cache[key]

    def extend(picked):
        i = len(picked)
        if i == len(labels):
            return picked
        for a in range(len(choices[labels[i]])):
            if not ok(i, a, i, a):
                continue
            if all(ok(j, picked[j], i, a) for j in range(i)):
                found = extend(picked + [a])
                if found is not None:
                    return found
        return None

    return extend([])


def strict_reducibility(
    theta,
    region_map,
    seed=0,
    samples=SAMPLES_PER_COMPONENT,
    cross_samples=CROSS_SAMPLES,
    projection_samples=PROJECTION_SAMPLES,
):
    """
    Decide whether the kernel bundle splits orthogonally over all Fredholm
    components at once, which is equivalent to S_z being reducible.
    """
    for var in ("z", "w"):
        if len(univariate_factor_roots(theta, var)):
            raise UnivariateFactorError(
                f"numerator has a factor depending on {var} alone; "
                "split it off before testing reducibility"
            )
    rng = np.random.default_rng(seed)
    components = region_map.fredholm_components()
    if not components:
        return StrictReducibilityReport(
            [], [], Verdict.IRREDUCIBLE, None, "no Fredholm component"
        )
    for c in components:
        if c.index == 1:
            return StrictReducibilityReport(
                [], [], Verdict.IRREDUCIBLE, None, f"component {c.label} has index 1"
            )

    reports = [component_report(theta, region_map, c, rng, samples) for c in components]
    for r in reports:
        if r.verdict is Verdict.IRREDUCIBLE:
            return StrictReducibilityReport(
                reports,
                [],
                Verdict.IRREDUCIBLE,
                None,
                f"bundle is irreducible on component {r.component_id}",
            )
    if len(components) == 1:
        witness = {
            "kind": "minimal_projections",
            "component": reports[0].component_id,
            "projections": reports[0].minimal_projections,
        }
        return StrictReducibilityReport(
            reports, [], Verdict.REDUCIBLE, witness, "single component with nontrivial commutant"
        )

    points = {
        c.label: sample_points(region_map, c, cross_samples, rng, min_depth=2)
        for c in components
    }
    log = []
    for n in rotation_orders(theta):
        for j in range(n):
            rest = [k for k in range(n) if k != j]
            pair = (RotationSubBundle(theta, n, (j,)), RotationSubBundle(theta, n, rest))
            choices = {c.label: [pair] for c in components}
            if _search(choices, points, log) is not None:
                witness = {"kind": "rotation", "order": n, "character": j}
                return StrictReducibilityReport(
                    reports, log, Verdict.REDUCIBLE, witness, "rotation-symmetric splitting"
                )

    choices = {
        c.label: _candidates(theta, r, rng, projection_samples)
        for c, r in zip(components, reports)
    }
    picked = _search(choices, points, log)
    if picked is None:
        return StrictReducibilityReport(
            reports, log, Verdict.IRREDUCIBLE, None, "no splitting is orthogonal across components"
        )
    witness = {"kind": "projections", "choice": dict(zip(choices, picked))}
    return StrictReducibilityReport(
        reports, log, Verdict.REDUCIBLE, witness, "orthogonal splitting across components"
    )
