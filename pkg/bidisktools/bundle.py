"""
bundle.py

Reproducing-kernel frames of Ker S*_{z-lam}, their Gram matrices, and the
connection and curvature of the kernel bundle.

Frames are anti-holomorphic in lam: every section is built from K_lam(z) and
kernels K^{(j)}_zeta(w) at nodes zeta(lam) that depend holomorphically on lam,
and K_a is anti-holomorphic in a. All geometry follows that convention:

    connection   Theta = dbar(G) G^-1          (coefficient of d lam-bar)
    curvature    K     = d(dbar(G) G^-1)       (raw, no sign normalisation)

For rank one this makes K = d dbar log G. Endomorphisms act on frame rows,
phi(e_i) = sum_j M_ij e_j, so M is self-adjoint exactly when M G is Hermitian;
with G = L L^H the matrix L^-1 M L is the same endomorphism in the Cholesky
orthonormal frame, where adjoints are conjugate transposes.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from .config import setting
from .errors import (
    CoalescingPointError,
    CurvatureError,
    NodeCollisionError,
    NotFredholmError,
    SingularGramError,
)
from .inner import numerator_fiber_roots
from .spectrum import TOL, VerdictKind, classify_point

logger = logging.getLogger(__name__)

H = setting("bundle", "h")
SERIES_DEGREE = setting("bundle", "series_degree")
MAX_ORDER = setting("bundle", "max_order")
JET_SAMPLES = setting("bundle", "jet_samples")
JET_RADIUS = setting("bundle", "jet_radius")
HERMITIAN_TOL = setting("bundle", "hermitian_tol")

SINGULAR_COND = 1e12


@dataclass(frozen=True)
class FrameVector:
    """K_lam(z) K^{(order)}_node(w), K^{(l)}_a(w) = l! w^l / (1 - conj(a) w)^(l+1)."""

    lam: complex
    node: complex
    order: int = 0

    def __post_init__(self):
        if abs(self.lam) >= 1 or abs(self.node) >= 1:
            raise ValueError(
                f"frame vector needs |lam| < 1 and |node| < 1, got {self.lam}, {self.node}"
            )
        if self.order < 0:
            raise ValueError(f"derivative order must be nonnegative, got {self.order}")


@dataclass(frozen=True, eq=False)
class KernelFrame:
    """
    Sections s_i = sum_a coefficients[i, a] * vectors[a]; without explicit
    coefficients every vector is its own section.
    """

    lam: complex
    vectors: Tuple[FrameVector, ...]
    coefficients: Optional[np.ndarray] = None

    @property
    def matrix(self):
        if self.coefficients is None:
            return np.eye(len(self.vectors), dtype=complex)
        return np.asarray(self.coefficients, dtype=complex)

    @property
    def rank(self):
        return self.matrix.shape[0]

    @property
    def nodes(self):
        """Distinct nodes with the length of their derivative tower."""
        out = []
        for v in self.vectors:
            if out and out[-1][0] == v.node:
                out[-1] = (v.node, out[-1][1] + 1)
            else:
                out.append((v.node, 1))
        return out


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    frame: KernelFrame


@dataclass(frozen=True, eq=False)
class ConnectionSample:
    lam: complex
    matrix: np.ndarray
    convention: str = "anti-holomorphic"


@dataclass(frozen=True, eq=False)
class CurvatureSample:
    """
    order (i, j) is the covariant derivative K_{lam^i lam-bar^j}; (0, 0) is
    the curvature itself. matrix is in the frame's own coordinates,
    orthonormal in the Cholesky orthonormal frame.
    """

    lam: complex
    order: Tuple[int, int]
    matrix: np.ndarray
    orthonormal: np.ndarray
    convention: str = "anti-holomorphic"

    def geometric(self):
        """The opposite sign convention, -d dbar log |s|^2 for rank one."""
        return -self.orthonormal


def _pair_kernel(i, j, x, y):
    """
    <K^{(i)}_a, K^{(j)}_b> with x = conj(a), y = b; elementwise on arrays.

    This is d^i/dx^i d^j/dy^j of 1/(1 - x y).
    """
    one = 1 - x * y
    total = 0
    for k in range(min(i, j) + 1):
        c = math.comb(i, k) * math.factorial(i + j - k) / math.factorial(j - k)
        total = total + c * x ** (j - k) * y ** (i - k) / one ** (i + j - k + 1)
    return math.factorial(j) * total


def _key(v):
    return (v.order, v.node.real, v.node.imag, v.lam.real, v.lam.imag)


def kernel_inner_product(u, v):
    """<K_{lam1} K^{(i)}_a, K_{lam2} K^{(j)}_b> in H^2 of the bidisk."""
    # Evaluate in one canonical order so that swapping the arguments
    # conjugates the result bit for bit.
    if _key(u) > _key(v):
        return kernel_inner_product(v, u).conjugate()
    u_lam, v_lam = complex(u.lam), complex(v.lam)
    z_part = 1 / (1 - u_lam.conjugate() * v_lam)
    w_part = _pair_kernel(u.order, v.order, complex(u.node).conjugate(), complex(v.node))
    return complex(z_part * w_part)


def kernel_inner_product_series(u, v, degree=SERIES_DEGREE):
    """The same inner product summed from Taylor coefficients up to degree."""
    s = np.arange(degree + 1)
    z_part = np.sum((np.conj(u.lam) * v.lam) ** s)
    i, j = u.order, v.order
    a, b = np.conj(u.node), v.node
    total = 0j
    for n in range(max(i, j), degree + 1):
        total += math.perm(n, i) * math.perm(n, j) * a ** (n - i) * b ** (n - j)
    return complex(z_part * total)


def _unpack(vectors):
    lam = np.array([v.lam for v in vectors], dtype=complex)
    node = np.array([v.node for v in vectors], dtype=complex)
    order = np.array([v.order for v in vectors], dtype=int)
    return lam, node, order


def vector_gram(left, right):
    """Matrix of <left[a], right[b]> over two lists of frame vectors."""
    lam_l, node_l, ord_l = _unpack(left)
    lam_r, node_r, ord_r = _unpack(right)
    out = np.empty((len(left), len(right)), dtype=complex)
    for i in np.unique(ord_l):
        rows = np.flatnonzero(ord_l == i)
        for j in np.unique(ord_r):
            cols = np.flatnonzero(ord_r == j)
            x = np.conj(node_l[rows]).reshape(-1, 1)
            y = node_r[cols].reshape(1, -1)
            out[np.ix_(rows, cols)] = _pair_kernel(int(i), int(j), x, y)
    return out / (1 - np.conj(lam_l).reshape(-1, 1) * lam_r.reshape(1, -1))


def cross_gram(frame_a, frame_b):
    """<s_i(frame_a), s_j(frame_b)> for the sections of two frames."""
    g = vector_gram(frame_a.vectors, frame_b.vectors)
    return frame_a.matrix @ g @ frame_b.matrix.conj().T


def stacked_cross_gram(left, right):
    """
    cross_gram for every pair from two lists of frames with a common
    layout, as an array indexed [s, t, i, j].
    """
    vl = [v for f in left for v in f.vectors]
    vr = [v for f in right for v in f.vectors]
    g = vector_gram(vl, vr)
    nl, nr = len(left[0].vectors), len(right[0].vectors)
    g = g.reshape(len(left), nl, len(right), nr)
    cl = np.stack([f.matrix for f in left])
    cr = np.stack([f.matrix for f in right])
    return np.einsum("sia,satb,tjb->stij", cl, g, cr.conj())


def gram(frame):
    if not frame.vectors:
        raise ValueError("cannot form the Gram matrix of an empty frame")
    g = cross_gram(frame, frame)
    return GramMatrix((g + g.conj().T) / 2, frame)


def kernel_frame(theta, lam, tol=TOL):
    """Canonical frame of Ker S*_{z-lam}: derivative towers at the fiber zeros in D."""
    lam = complex(lam)
    verdict = classify_point(theta, lam, tol)
    if verdict.kind is not VerdictKind.FREDHOLM:
        raise NotFredholmError(f"lambda = {lam} is {verdict.kind.value}, not Fredholm")
    roots = numerator_fiber_roots(theta, lam).inside(1.0)
    vectors = tuple(FrameVector(lam, r, j) for r, k in roots.roots for j in range(k))
    return KernelFrame(lam, vectors)


def _principal_power(lam, exponent):
    # numpy's log has its branch cut on the negative real axis
    return np.exp(exponent * np.log(complex(lam)))


def zm_wn_frame(m, n, lam):
    """
    Orthogonal frame e_j = (1/(n conj(r)^j)) sum_k zeta^{jk} K_{lam, r zeta^k}
    of the quotient by z^m - w^n, r = lam^{m/n}, zeta = e^{2 pi i/n}.

    Each e_j equals w^j / ((1 - conj(lam) z)(1 - conj(lam)^m w^n)), so the
    frame does not depend on the branch of lam^{m/n}.
    """
    lam = complex(lam)
    if lam == 0:
        raise NodeCollisionError("all nodes of the z^m - w^n frame coincide at lambda = 0")
    if abs(lam) >= 1:
        raise NotFredholmError(f"lambda = {lam} lies outside the open disk")
    r = _principal_power(lam, m / n)
    zeta = np.exp(2j * np.pi / n)
    vectors = tuple(FrameVector(lam, complex(r * zeta**k)) for k in range(n))
    jk = np.outer(np.arange(n), np.arange(n))
    coefficients = zeta**jk / (n * np.conj(r) ** np.arange(n).reshape(-1, 1))
    return KernelFrame(lam, vectors, coefficients)


class FrameField:
    """
    lam -> canonical frame near a base point, with nodes continued from the
    base nodes so that the frame stays anti-holomorphic.
    """

    def __init__(self, theta, lam0):
        self.theta = theta
        self.base = kernel_frame(theta, lam0)
        self.lam0 = self.base.lam
        self.base_nodes = self.base.nodes

    def roots(self, mu):
        return numerator_fiber_roots(self.theta, mu).roots

    def continued_nodes(self, mu):
        roots = self.roots(mu)
        base = np.array([z for z, _ in self.base_nodes])
        cur = np.array([z for z, _ in roots])
        cost = np.abs(base.reshape(-1, 1) - cur.reshape(1, -1))
        rows, cols = scipy.optimize.linear_sum_assignment(cost)
        if len(rows) < len(base):
            raise CoalescingPointError(f"frame nodes merge near lambda = {mu}")
        nodes = [None] * len(base)
        for i, j in zip(rows, cols):
            if roots[j][1] != self.base_nodes[i][1]:
                raise CoalescingPointError(
                    f"node multiplicity changes between {self.lam0} and {mu}"
                )
            nodes[i] = roots[j][0]
        return nodes

    def __call__(self, mu):
        mu = complex(mu)
        nodes = self.continued_nodes(mu)
        vectors = tuple(
            FrameVector(mu, z, j)
            for z, (_, k) in zip(nodes, self.base_nodes)
            for j in range(k)
        )
        return KernelFrame(mu, vectors, self.base.coefficients)

    def safe_radius(self, lam):
        """Radius of a circle around lam on which the continuation is analytic."""
        lam = complex(lam)
        radius = 0.25 * (1 - abs(lam))
        here = self.continued_nodes(lam)
        delta = 1e-4 * (1 - abs(lam))
        there = self.continued_nodes(lam + delta)
        all_roots = [z for z, _ in self.roots(lam)]
        for z0, z1 in zip(here, there):
            speed = abs(z1 - z0) / delta
            others = [abs(z0 - z) for z in all_roots if abs(z - z0) > 1e-9]
            gap = min(others + [1 - abs(z0)])
            if speed > 1e-12:
                radius = min(radius, 0.25 * gap / speed)
        return radius


class ZmWnField:
    """lam -> zm_wn_frame(m, n, lam)."""

    def __init__(self, m, n):
        self.m = m
        self.n = n

    def __call__(self, mu):
        return zm_wn_frame(self.m, self.n, mu)

    def safe_radius(self, lam):
        return 0.25 * min(abs(lam), 1 - abs(lam))


def _as_gram(value):
    if isinstance(value, KernelFrame):
        return gram(value).entries
    if isinstance(value, GramMatrix):
        return value.entries
    return np.asarray(value, dtype=complex)


def _check_invertible(g, lam):
    if not np.all(np.isfinite(g)) or np.linalg.cond(g) > SINGULAR_COND:
        raise SingularGramError(f"Gram matrix at lambda = {lam} is singular")


def _right_divide(a, g):
    """a g^-1."""
    return scipy.linalg.solve(g.T, a.T).T


def _stencil(field, lam, h):
    return {
        key: _as_gram(field(lam + off))
        for key, off in (("0", 0), ("x+", h), ("x-", -h), ("y+", 1j * h), ("y-", -1j * h))
    }


def _dbar(s, h):
    return ((s["x+"] - s["x-"]) + 1j * (s["y+"] - s["y-"])) / (4 * h)


def _d(s, h):
    return ((s["x+"] - s["x-"]) - 1j * (s["y+"] - s["y-"])) / (4 * h)


def connection_matrix(field, lam, h=H):
    """Theta = dbar(G) G^-1 by central differences in x and y."""
    lam = complex(lam)
    s = _stencil(field, lam, h)
    _check_invertible(s["0"], lam)
    return ConnectionSample(lam, _right_divide(_dbar(s, h), s["0"]))


def _difference_curvature(field, lam, h):
    s = _stencil(field, lam, h)
    g = s["0"]
    _check_invertible(g, lam)
    dbar_g, d_g = _dbar(s, h), _d(s, h)
    ddbar_g = (s["x+"] + s["x-"] + s["y+"] + s["y-"] - 4 * g) / (4 * h * h)
    theta = _right_divide(dbar_g, g)
    k = _right_divide(ddbar_g, g) - theta @ _right_divide(d_g, g)
    return g, theta, k


def _orthonormal(m, g):
    lower = scipy.linalg.cholesky(g, lower=True)
    return scipy.linalg.solve_triangular(lower, m @ lower, lower=True)


def _check_hermitian(k, g, lam):
    kg = k @ g
    scale = max(np.linalg.norm(kg), 1e-300)
    if np.linalg.norm(kg - kg.conj().T) > HERMITIAN_TOL * scale:
        raise CurvatureError(
            f"curvature at lambda = {lam} is not self-adjoint; reduce the step"
        )


def _difference_samples(field, lam, h, max_order):
    def curvature_at(mu, step):
        _, theta, k = _difference_curvature(field, mu, step)
        return k, theta

    # Each nesting level differences the level below it with a step ten
    # times larger, keeping rounding error from swamping the quotient.
    def derivative(fn, direction, level):
        step = h * 10**level

        def inner(mu):
            offsets = (("x+", step), ("x-", -step), ("y+", 1j * step), ("y-", -1j * step))
            plus = {key: fn(mu + off) for key, off in offsets}
            if direction == "d":
                return _d(plus, step)
            dbar = _dbar(plus, step)
            _, theta = curvature_at(mu, h)
            value = fn(mu)
            return dbar + value @ theta - theta @ value

        return inner

    g, _, k0 = _difference_curvature(field, lam, h)
    _check_hermitian(k0, g, lam)
    samples = [CurvatureSample(lam, (0, 0), k0, _orthonormal(k0, g))]
    for total in range(1, max_order + 1):
        for i in range(total, -1, -1):
            j = total - i
            fn = lambda mu: curvature_at(mu, h)[0]
            level = 1
            for _ in range(j):
                fn = derivative(fn, "dbar", level)
                level += 1
            for _ in range(i):
                fn = derivative(fn, "d", level)
                level += 1
            m = fn(lam)
            samples.append(CurvatureSample(lam, (i, j), m, _orthonormal(m, g)))
    return samples


class Jet:
    """
    Truncated Taylor expansion sum c[b, a] conj(delta)^b delta^a of a
    matrix-valued real-analytic function, so d^a dbar^b f = a! b! c[b, a].
    """

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=complex)

    @property
    def order(self):
        return self.c.shape[0] - 1

    def value(self):
        return self.c[0, 0]

    def __add__(self, other):
        return Jet(self.c + other.c)

    def __sub__(self, other):
        return Jet(self.c - other.c)

    def __matmul__(self, other):
        p = self.c.shape[0]
        out = np.zeros_like(self.c)
        for b in range(p):
            for a in range(p):
                acc = out[b, a]
                for b1 in range(b + 1):
                    for a1 in range(a + 1):
                        acc += self.c[b1, a1] @ other.c[b - b1, a - a1]
                out[b, a] = acc
        return Jet(out)

    def inverse(self):
        p = self.c.shape[0]
        out = np.zeros_like(self.c)
        inv0 = np.linalg.inv(self.c[0, 0])
        for b in range(p):
            for a in range(p):
                if b == 0 and a == 0:
                    out[0, 0] = inv0
                    continue
                acc = np.zeros_like(inv0)
                for b1 in range(b + 1):
                    for a1 in range(a + 1):
                        if b1 == 0 and a1 == 0:
                            continue
                        acc += self.c[b1, a1] @ out[b - b1, a - a1]
                out[b, a] = -inv0 @ acc
        return Jet(out)

    def d(self):
        """Derivative in lam; the top row of coefficients becomes unknown."""
        out = np.zeros_like(self.c)
        p = self.c.shape[0]
        for a in range(p - 1):
            out[:, a] = (a + 1) * self.c[:, a + 1]
        return Jet(out)

    def dbar(self):
        out = np.zeros_like(self.c)
        p = self.c.shape[0]
        for b in range(p - 1):
            out[b] = (b + 1) * self.c[b + 1]
        return Jet(out)


def gram_jet(field, lam, order, radius=None, samples=JET_SAMPLES):
    """
    Taylor jet of G(lam, conj lam) from Cauchy integrals of the
    sesqui-analytic extension <e_i(mu), e_j(nu)> over two circles.
    """
    lam = complex(lam)
    if radius is None:
        radius = min(JET_RADIUS, field.safe_radius(lam))
    if order >= samples // 2:
        raise ValueError(f"jet order {order} needs more than {samples} samples")
    omega = np.exp(2j * np.pi * np.arange(samples) / samples)
    left = [field(lam + radius * np.conj(o)) for o in omega]
    right = [field(lam + radius * o) for o in omega]
    values = stacked_cross_gram(left, right)
    coeffs = np.fft.fft2(values, axes=(0, 1)) / samples**2
    p = order + 1
    powers = radius ** np.add.outer(np.arange(p), np.arange(p))
    jet = coeffs[:p, :p] / powers[:, :, None, None]
    logger.debug("gram jet at %s: radius %.3g, order %d", lam, radius, order)
    return Jet(jet)


def curvature_jets(field, lam, max_order=MAX_ORDER, radius=None, samples=JET_SAMPLES):
    """
    Curvature and covariant derivatives K_{lam^i lam-bar^j}, i + j <= max_order,
    from the Gram jet. Covariant derivatives: d along lam, dbar(.) + [., Theta]
    along lam-bar.
    """
    lam = complex(lam)
    g_jet = gram_jet(field, lam, max_order + 2, radius, samples)
    g = g_jet.value()
    _check_invertible(g, lam)
    theta = g_jet.dbar() @ g_jet.inverse()
    k = theta.d()
    _check_hermitian(k.value(), g, lam)
    samples_out = [CurvatureSample(lam, (0, 0), k.value(), _orthonormal(k.value(), g))]
    for total in range(1, max_order + 1):
        for i in range(total, -1, -1):
            j = total - i
            cur = k
            for _ in range(j):
                cur = cur.dbar() + cur @ theta - theta @ cur
            for _ in range(i):
                cur = cur.d()
            m = cur.value()
            samples_out.append(CurvatureSample(lam, (i, j), m, _orthonormal(m, g)))
    return samples_out


def curvature_samples(field, lam, h=H, max_order=MAX_ORDER, method="difference"):
    """
    Curvature K = d(dbar(G) G^-1) and its covariant derivatives at lam.

    method="difference" uses finite differences with step h on a Gram field;
    method="cauchy" needs a frame field with safe_radius and is accurate
    enough for rank decisions.
    """
    lam = complex(lam)
    if method == "difference":
        return _difference_samples(field, lam, h, max_order)
    if method == "cauchy":
        return curvature_jets(field, lam, max_order)
    raise ValueError(f"unknown curvature method {method!r}")


def orthonormal_transform(g):
    """A with A G A^H = I; the rows of A give the orthonormal sections."""
    lower = scipy.linalg.cholesky(np.asarray(g), lower=True)
    return scipy.linalg.solve_triangular(lower, np.eye(len(g)), lower=True)


def bundle_report(theta, lam, h=H, max_order=MAX_ORDER):
    """Frame, metric, connection and curvature at one point."""
    field = FrameField(theta, lam)
    frame = field.base
    g = gram(frame).entries
    conn = connection_matrix(field, frame.lam, h)
    curv = curvature_samples(field, frame.lam, h, max_order, method="cauchy")
    return {
        "lambda": frame.lam,
        "nodes": [{"node": z, "multiplicity": k} for z, k in frame.nodes],
        "gram": g,
        "connection": conn.matrix,
        "convention": conn.convention,
        "orthonormal_transform": orthonormal_transform(g),
        "curvature": [
            {"order": list(c.order), "frame": c.matrix, "orthonormal": c.orthonormal}
            for c in curv
        ],
    }
