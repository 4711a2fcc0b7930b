"""
spectrum.py

Spectrum, essential spectrum and Fredholm index of the compressed shift S_z,
traced essential curves, and the decomposition of the disk into Fredholm
components.
"""

import enum
import logging
from dataclasses import dataclass, field
from functools import partial
from multiprocessing import Pool
from typing import List, Tuple

import numpy as np
import scipy.ndimage
import scipy.optimize

from .config import setting
from .errors import IndexUndefinedError, NonConstantIndexError, ZeroFiberError
from .inner import is_z_only, numerator_fiber_roots
from .poly import fiber_coefficients, fiber_poly, rowwise_roots, uni_roots
from .report import write_csv, write_pgm

logger = logging.getLogger(__name__)

TOL = setting("spectrum", "tol")
GRID_N = setting("spectrum", "grid_n")
RADIUS = setting("spectrum", "radius")
CURVE_STEPS = setting("spectrum", "curve_steps")
MAX_REFINEMENTS = setting("spectrum", "max_refinements")
THIN_CELLS = setting("spectrum", "thin_cells")

MIN_GRID_N = 101


class VerdictKind(enum.Enum):
    RESOLVENT = "resolvent"
    ESSENTIAL = "essential"
    FREDHOLM = "fredholm"


# Integer codes used for whole grids.
CODES = {VerdictKind.RESOLVENT: 0, VerdictKind.ESSENTIAL: 1, VerdictKind.FREDHOLM: 2}
KINDS = {v: k for k, v in CODES.items()}


@dataclass(frozen=True)
class SpectralVerdict:
    kind: VerdictKind
    index: int = 0

    def __post_init__(self):
        if self.kind is VerdictKind.FREDHOLM and self.index < 1:
            raise ValueError("a Fredholm spectrum point needs index >= 1")
        if self.kind is not VerdictKind.FREDHOLM and self.index != 0:
            raise ValueError(f"{self.kind.value} points carry index 0")


RESOLVENT = SpectralVerdict(VerdictKind.RESOLVENT)
ESSENTIAL = SpectralVerdict(VerdictKind.ESSENTIAL)


def _z_only_verdict(theta, lam, tol):
    # S_z is S_B tensor I: each zero of B in D is an eigenvalue of infinite
    # multiplicity, every other point, T included, is resolvent.
    roots = uni_roots(fiber_poly(theta.q, 0, "w"))
    for r in roots.values:
        if abs(r) < 1 + tol and abs(lam - r) <= tol:
            return ESSENTIAL
    return RESOLVENT


def classify_point(theta, lam, tol=TOL):
    lam = complex(lam)
    if is_z_only(theta):
        return _z_only_verdict(theta, lam, tol)
    if abs(abs(lam) - 1) <= tol:
        return ESSENTIAL
    if abs(lam) > 1:
        return RESOLVENT
    roots = numerator_fiber_roots(theta, lam)
    if any(abs(abs(r) - 1) < tol for r in roots.values):
        return ESSENTIAL
    m = roots.count_inside(1.0)
    if m == 0:
        return RESOLVENT
    return SpectralVerdict(VerdictKind.FREDHOLM, m)


def fredholm_index(theta, lam, tol=TOL):
    """dim Ker S*_{z-lam}, the number of fiber zeros in D."""
    verdict = classify_point(theta, lam, tol)
    if verdict.kind is VerdictKind.ESSENTIAL:
        raise IndexUndefinedError(f"index undefined at essential point {complex(lam)}")
    return verdict.index


def _classify_chunk(points, theta, tol):
    points = np.asarray(points, dtype=complex)
    codes = np.zeros(points.shape, dtype=np.int8)
    index = np.zeros(points.shape, dtype=np.int64)
    if is_z_only(theta):
        for i, lam in enumerate(points):
            codes[i] = CODES[_z_only_verdict(theta, lam, tol).kind]
        return codes, index
    modulus = np.abs(points)
    codes[np.abs(modulus - 1) <= tol] = CODES[VerdictKind.ESSENTIAL]
    inside = np.nonzero(modulus < 1 - tol)[0]
    rows = fiber_coefficients(theta.q, points[inside], "z")
    for i, roots in zip(inside, rowwise_roots(rows)):
        if roots is None:
            raise ZeroFiberError(
                f"numerator fiber at lambda = {points[i]} vanishes identically", points[i]
            )
        radii = np.abs(roots)
        if np.any(np.abs(radii - 1) < tol):
            codes[i] = CODES[VerdictKind.ESSENTIAL]
            continue
        m = int(np.count_nonzero(radii < 1))
        if m:
            codes[i] = CODES[VerdictKind.FREDHOLM]
            index[i] = m
    return codes, index


def classify_grid(theta, points, tol=TOL, threads=1):
    """
    Verdict codes and indices for a 2-D array of points, one row per task.
    """
    points = np.asarray(points, dtype=complex)
    rows = list(points)
    worker = partial(_classify_chunk, theta=theta, tol=tol)
    if threads > 1:
        with Pool(processes=threads) as p:
            results = p.map(worker, rows)
    else:
        results = [worker(row) for row in rows]
    codes = np.array([c for c, _ in results])
    index = np.array([i for _, i in results])
    return codes, index


@dataclass(frozen=True)
class Component:
    label: int
    kind: VerdictKind
    index: int
    representative: complex
    cells: int
    thin: bool


@dataclass
class FredholmRegionMap:
    """Cell verdicts on a square lattice and their connected components."""

    axis: np.ndarray
    codes: np.ndarray
    index: np.ndarray
    labels: np.ndarray
    components: List[Component] = field(default_factory=list)

    @property
    def points(self):
        x, y = np.meshgrid(self.axis, self.axis)
        return x + 1j * y

    def fredholm_components(self):
        """Fredholm components resolved by the lattice, thin ones excluded."""
        return [c for c in self.components if c.kind is VerdictKind.FREDHOLM and not c.thin]

    def alpha(self):
        return tuple(c.index for c in self.fredholm_components())


def _spot_checks(mask, count=3):
    # Cells at least two steps from the component boundary.
    depth = scipy.ndimage.distance_transform_cdt(mask, metric="taxicab")
    deep = np.argwhere(depth >= 3)
    if len(deep) == 0:
        return []
    picks = np.linspace(0, len(deep) - 1, count).round().astype(int)
    return [tuple(deep[i]) for i in sorted(set(picks))]


def _is_thin(cells):
    """Fewer than THIN_CELLS cells, or no cell with all four neighbours inside."""
    if int(cells.sum()) < THIN_CELLS:
        return True
    return scipy.ndimage.distance_transform_cdt(cells, metric="taxicab").max() < 2


def decompose_fredholm_regions(theta, R=RADIUS, grid_n=GRID_N, tol=TOL, threads=1):
    """
    Classify every lattice point of [-R, R]^2 and split the non-essential
    cells into 4-connected components of equal verdict.

    The unit circle separates components even where no lattice point lands
    on it. Slivers narrower than the lattice are flagged thin and left out
    of fredholm_components().
    """
    if grid_n < MIN_GRID_N:
        raise ValueError(f"region maps need grid_n >= {MIN_GRID_N}, got {grid_n}")
    axis = np.linspace(-R, R, grid_n)
    x, y = np.meshgrid(axis, axis)
    points = x + 1j * y
    codes, index = classify_grid(theta, points, tol, threads)
    labels = np.zeros(codes.shape, dtype=np.int64)
    # T is resolvent when theta only involves z
    inside = np.abs(points) < 1
    sides = [np.ones(codes.shape, dtype=bool)] if is_z_only(theta) else [inside, ~inside]
    pieces = []
    keys = sorted(
        {(int(c), int(i)) for c, i in zip(codes.ravel(), index.ravel())}
        - {(CODES[VerdictKind.ESSENTIAL], 0)}
    )
    for code, idx in keys:
        for side in sides:
            mask = (codes == code) & (index == idx) & side
            lab, count = scipy.ndimage.label(mask)
            for k in range(1, count + 1):
                cells = lab == k
                first = np.argmax(cells.ravel())
                pieces.append((first, code, idx, cells))
    pieces.sort(key=lambda piece: piece[0])

    components = []
    for label, (_, code, idx, cells) in enumerate(pieces, start=1):
        labels[cells] = label
        depth = scipy.ndimage.distance_transform_edt(cells)
        rep = np.unravel_index(np.argmax(depth), cells.shape)
        n = int(cells.sum())
        kind = KINDS[code]
        comp = Component(label, kind, idx, complex(points[rep]), n, _is_thin(cells))
        components.append(comp)
        if comp.thin:
            logger.info(
                "thin %s component near %s with %d cells", kind.value, comp.representative, n
            )
            continue
        for cell in [rep] + _spot_checks(cells):
            check = classify_point(theta, points[cell], tol)
            if CODES[check.kind] != code or check.index != idx:
                raise NonConstantIndexError(
                    f"component {label} has index {idx} but {points[cell]} "
                    f"classifies as {check.kind.value} with index {check.index}"
                )
    region_map = FredholmRegionMap(axis, codes, index, labels, components)
    logger.debug(
        "grid %d x %d: %d components, alpha = %s",
        grid_n,
        grid_n,
        len(components),
        list(region_map.alpha()),
    )
    return region_map


def _lattice(grid):
    if isinstance(grid, FredholmRegionMap):
        return grid.points
    axis = np.linspace(-RADIUS, RADIUS, int(grid))
    x, y = np.meshgrid(axis, axis)
    return x + 1j * y


def zero_projection_mask(poly, grid):
    """Cells lam in D where poly(lam, .) has a zero in D."""
    points = _lattice(grid)
    flat = points.ravel()
    mask = np.zeros(flat.shape, dtype=bool)
    inside = np.nonzero(np.abs(flat) < 1)[0]
    rows = fiber_coefficients(poly, flat[inside], "z")
    for i, roots in zip(inside, rowwise_roots(rows)):
        mask[i] = roots is None or bool(np.any(np.abs(roots) < 1))
    return mask.reshape(points.shape)


def factor_projection_connected(factor, grid=GRID_N):
    """
    Whether the projection of the factor's zero set in D^2 onto the first
    coordinate is 4-connected on the grid; an empty projection counts as
    connected.
    """
    _, count = scipy.ndimage.label(zero_projection_mask(factor, grid))
    return count <= 1


def cowen_douglas_verdict(theta, grid=GRID_N):
    """Connectedness per irreducible factor; S_z* is Cowen-Douglas iff all hold."""
    factors = theta.factors or ((theta.q, 1),)
    per_factor = [
        {"factor": f.to_json(), "exp": e, "connected": factor_projection_connected(f, grid)}
        for f, e in factors
    ]
    return {
        "declared_factors": bool(theta.factors),
        "factors": per_factor,
        "cowen_douglas": all(entry["connected"] for entry in per_factor),
    }


@dataclass
class Polyline:
    t: np.ndarray
    z: np.ndarray
    multiplicity: int
    uncertain: bool


@dataclass
class EssentialCurves:
    curves: List[Polyline]

    @property
    def branch_count(self):
        return len(self.curves)

    def interior(self, tol=TOL):
        """Curves with at least one point strictly inside D."""
        return [c for c in self.curves if np.any(np.abs(c.z) < 1 - tol)]


@dataclass
class _Branch:
    ts: List[float]
    zs: List[complex]
    multiplicity: int
    uncertain: bool = False


class _Tracer:
    """Follows the roots in z of q(z, e^{it}) as t increases."""

    def __init__(self, q, tol, max_refinements):
        self.q = q
        self.tol = tol
        self.max_refinements = max_refinements
        self.active: List[_Branch] = []
        self.finished: List[_Branch] = []

    def roots_at(self, t):
        fiber = fiber_poly(self.q, np.exp(1j * t), "w")
        if fiber.is_zero:
            raise ZeroFiberError(f"numerator vanishes on z-line at w = e^(i{t})", t)
        return uni_roots(fiber).roots

    def start(self, t):
        self.active = [_Branch([t], [r], k) for r, k in self.roots_at(t)]

    def _match(self, roots):
        prev = np.array([b.zs[-1] for b in self.active], dtype=complex)
        cur = np.array([r for r, _ in roots], dtype=complex)
        if len(prev) == 0 or len(cur) == 0:
            return [], False
        cost = np.abs(prev.reshape(-1, 1) - cur.reshape(1, -1))
        rows, cols = scipy.optimize.linear_sum_assignment(cost)
        ambiguous = False
        for i, j in zip(rows, cols):
            d = cost[i, j]
            others = np.concatenate(
                [np.delete(cost[i, :], j), np.delete(cost[:, j], i)]
            )
            if len(others) and np.min(others) - d < max(self.tol, d):
                ambiguous = True
        return list(zip(rows, cols)), ambiguous

    def advance(self, ta, tb, depth=0):
        roots = self.roots_at(tb)
        pairs, ambiguous = self._match(roots)
        if ambiguous and depth < self.max_refinements:
            mid = 0.5 * (ta + tb)
            self.advance(ta, mid, depth + 1)
            self.advance(mid, tb, depth + 1)
            return
        if ambiguous:
            logger.warning("ambiguous root matching near t = %.6f; branches flagged", tb)
        matched_prev = {i for i, _ in pairs}
        matched_cur = {j for _, j in pairs}
        survivors = []
        for i, j in pairs:
            branch = self.active[i]
            branch.ts.append(tb)
            branch.zs.append(roots[j][0])
            branch.multiplicity = max(branch.multiplicity, roots[j][1])
            branch.uncertain = branch.uncertain or ambiguous
            survivors.append((j, branch))
        for i, branch in enumerate(self.active):
            if i not in matched_prev:
                self.finished.append(branch)
        for j, (r, k) in enumerate(roots):
            if j not in matched_cur:
                survivors.append((j, _Branch([tb], [r], k)))
        survivors.sort(key=lambda jb: jb[0])
        self.active = [b for _, b in survivors]


def _clip_to_closed_disk(branch, tol):
    z = np.array(branch.zs, dtype=complex)
    t = np.array(branch.ts)
    keep = np.abs(z) <= 1 + tol
    pieces = []
    start = None
    for i, k in enumerate(list(keep) + [False]):
        if k and start is None:
            start = i
        elif not k and start is not None:
            pieces.append(Polyline(t[start:i], z[start:i], branch.multiplicity, branch.uncertain))
            start = None
    return pieces


def trace_essential_curves(theta, steps=CURVE_STEPS, tol=TOL, max_refinements=MAX_REFINEMENTS):
    """
    Branches z(t) of the zero set of q over the torus line w = e^{it},
    matched step to step by minimum-cost assignment and clipped to the
    closed disk.
    """
    if steps < 64:
        raise ValueError(f"curve tracing needs at least 64 steps, got {steps}")
    tracer = _Tracer(theta.q, tol, max_refinements)
    dt = 2 * np.pi / steps
    tracer.start(0.0)
    for i in range(steps - 1):
        tracer.advance(i * dt, (i + 1) * dt)
    branches = tracer.finished + tracer.active
    curves = [piece for b in branches for piece in _clip_to_closed_disk(b, tol)]
    curves.sort(key=lambda c: (c.t[0], c.z[0].real, c.z[0].imag))
    logger.debug("traced %d branches into %d curves", len(branches), len(curves))
    return EssentialCurves(curves)


# Greyscale used by the verdict map.
def pgm_level(code, index):
    if code == CODES[VerdictKind.RESOLVENT]:
        return 255
    if code == CODES[VerdictKind.ESSENTIAL]:
        return 0
    return int(min(200, max(1, 200 - 40 * index)))


def write_region_map(region_map, csv_path, pgm_path):
    rows = []
    points = region_map.points
    for r in range(points.shape[0]):
        for c in range(points.shape[1]):
            lam = points[r, c]
            kind = KINDS[int(region_map.codes[r, c])]
            rows.append((lam.real, lam.imag, kind.value, int(region_map.index[r, c])))
    write_csv(csv_path, ["re", "im", "verdict", "index"], rows)
    levels = np.vectorize(pgm_level)(region_map.codes, region_map.index)
    write_pgm(pgm_path, levels[::-1, :])


def write_curves(curves, csv_path):
    rows = []
    for b, curve in enumerate(curves.curves):
        for t, z in zip(curve.t, curve.z):
            rows.append((b, t, z.real, z.imag, curve.multiplicity, int(curve.uncertain)))
    write_csv(csv_path, ["branch", "t", "re", "im", "multiplicity", "uncertain"], rows)


def region_summary(region_map):
    return [
        {
            "label": c.label,
            "kind": c.kind.value,
            "index": c.index,
            "representative": c.representative,
            "cells": c.cells,
            "thin": c.thin,
        }
        for c in region_map.components
    ]
