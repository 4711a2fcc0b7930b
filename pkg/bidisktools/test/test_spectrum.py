import os.path

import numpy as np
import pytest

from ..catalog import annulus, blaschke_z, disconnected, disk_hole, nested_annuli
from ..errors import IndexUndefinedError
from ..poly import BiPoly
from ..spectrum import (
    CODES,
    ESSENTIAL,
    RESOLVENT,
    Component,
    FredholmRegionMap,
    SpectralVerdict,
    VerdictKind,
    _is_thin,
    classify_point,
    cowen_douglas_verdict,
    decompose_fredholm_regions,
    factor_projection_connected,
    fredholm_index,
    pgm_level,
    trace_essential_curves,
    write_curves,
    write_region_map,
)

RESOLVENT_CODE = CODES[VerdictKind.RESOLVENT]
FREDHOLM_CODE = CODES[VerdictKind.FREDHOLM]


def test_classify_annulus():
    theta = annulus(0.5)
    assert classify_point(theta, 0.3) == RESOLVENT
    assert classify_point(theta, 0.7j) == SpectralVerdict(VerdictKind.FREDHOLM, 1)
    assert classify_point(theta, -0.5) == ESSENTIAL
    assert classify_point(theta, 1.0) == ESSENTIAL
    assert classify_point(theta, 1.2) == RESOLVENT
    assert fredholm_index(theta, 0.7) == 1
    with pytest.raises(IndexUndefinedError):
        fredholm_index(theta, 0.5)


def test_classify_z_only():
    theta = blaschke_z((0.3,))
    assert classify_point(theta, 0.3) == ESSENTIAL
    assert classify_point(theta, 0.5) == RESOLVENT
    assert classify_point(theta, 1.0) == RESOLVENT


def test_verdict_invariants():
    with pytest.raises(ValueError):
        SpectralVerdict(VerdictKind.FREDHOLM, 0)
    with pytest.raises(ValueError):
        SpectralVerdict(VerdictKind.RESOLVENT, 2)


def test_annulus_map():
    region_map = decompose_fredholm_regions(annulus(0.5), 1.1, 301, 1e-6)
    modulus = np.abs(region_map.points)
    band = (modulus > 0.52) & (modulus < 0.98)
    assert np.all(region_map.codes[band] == FREDHOLM_CODE)
    assert np.all(region_map.index[band] == 1)
    assert np.all(region_map.codes[modulus < 0.48] == RESOLVENT_CODE)
    assert region_map.alpha() == (1,)


def test_disk_hole_map():
    region_map = decompose_fredholm_regions(disk_hole(0.5), 1.1, 301, 1e-6)
    points = region_map.points
    distance = np.abs(points - 2 / 3)
    hole = distance < 1 / 3 - 0.02
    assert np.all(region_map.codes[hole] == RESOLVENT_CODE)
    rest = (distance > 1 / 3 + 0.02) & (np.abs(points) < 0.98)
    assert np.all(region_map.codes[rest] == FREDHOLM_CODE)
    assert np.all(region_map.index[rest] == 1)
    assert region_map.alpha() == (1,)
    interior = [
        c
        for c in region_map.components
        if c.kind is VerdictKind.RESOLVENT and not c.thin and abs(c.representative) < 1
    ]
    assert len(interior) == 1
    assert abs(interior[0].representative - 2 / 3) < 1 / 3
    # the hole never shares a label with the resolvent set outside the disk
    outside = np.abs(points) > 1.02
    assert not np.any(region_map.labels[outside] == interior[0].label)


def strip(width, length=20):
    mask = np.zeros((width + 2, length + 2), dtype=bool)
    mask[1:-1, 1:-1] = True
    return mask


def test_thin_components():
    assert _is_thin(strip(1))
    assert _is_thin(strip(2))
    assert not _is_thin(strip(3))
    assert _is_thin(strip(1, 3))
    axis = np.linspace(-1, 1, 3)
    zeros = np.zeros((3, 3), dtype=int)
    components = [
        Component(1, VerdictKind.FREDHOLM, 1, 0.5j, 40, False),
        Component(2, VerdictKind.FREDHOLM, 2, 0.99, 12, True),
        Component(3, VerdictKind.RESOLVENT, 0, 0j, 30, False),
    ]
    region_map = FredholmRegionMap(axis, zeros, zeros, zeros, components)
    assert region_map.fredholm_components() == components[:1]
    assert region_map.alpha() == (1,)


def test_disk_hole_curve():
    curves = trace_essential_curves(disk_hole(0.5), 1024)
    assert curves.branch_count >= 1
    z = np.concatenate([c.z for c in curves.curves])
    assert np.max(np.abs(np.abs(z - 2 / 3) - 1 / 3)) < 1e-6


def test_annulus_curve():
    curves = trace_essential_curves(annulus(0.5), 256)
    assert curves.branch_count == 1
    assert np.allclose(np.abs(curves.curves[0].z), 0.5)
    assert len(curves.interior()) == 1
    with pytest.raises(ValueError):
        trace_essential_curves(annulus(0.5), 16)


def test_disconnected_components():
    theta = disconnected(0.1)
    circle = 0.25 * np.exp(2j * np.pi * np.arange(360) / 360)
    assert all(classify_point(theta, lam) == RESOLVENT for lam in circle)
    region_map = decompose_fredholm_regions(theta, 1.1, 301, 1e-6)
    assert region_map.alpha() == (1, 1)


def test_cowen_douglas():
    assert cowen_douglas_verdict(annulus(0.5), 101)["cowen_douglas"]
    verdict = cowen_douglas_verdict(disconnected(0.1), 201)
    assert not verdict["cowen_douglas"]
    assert not verdict["declared_factors"]


def test_factor_projection_connected():
    assert factor_projection_connected(annulus(0.5).q, 101)
    assert not factor_projection_connected(disconnected(0.1).q, 201)
    # w - 2 has no zeros in the bidisk
    assert factor_projection_connected(BiPoly.monomial(0, 1) - 2, 51)


def test_pgm_levels():
    assert pgm_level(RESOLVENT_CODE, 0) == 255
    assert pgm_level(CODES[VerdictKind.ESSENTIAL], 0) == 0
    assert pgm_level(FREDHOLM_CODE, 1) == 160
    assert pgm_level(FREDHOLM_CODE, 9) == 1


def test_region_map_files(tmpdir):
    region_map = decompose_fredholm_regions(annulus(0.5), 1.1, 101, 1e-6)
    csv_path = os.path.join(tmpdir, "map.csv")
    pgm_path = os.path.join(tmpdir, "map.pgm")
    write_region_map(region_map, csv_path, pgm_path)
    with open(csv_path) as f:
        lines = f.read().splitlines()
    assert lines[0] == "re,im,verdict,index"
    assert len(lines) == 1 + 101 * 101
    with open(pgm_path, "rb") as f:
        first = f.read()
    assert first.startswith(b"P5\n101 101\n255\n")
    assert len(first) == len(b"P5\n101 101\n255\n") + 101 * 101
    write_region_map(region_map, csv_path, pgm_path)
    with open(pgm_path, "rb") as f:
        assert f.read() == first


def test_curves_file(tmpdir):
    curves = trace_essential_curves(annulus(0.5), 64)
    path = os.path.join(tmpdir, "curves.csv")
    write_curves(curves, path)
    with open(path) as f:
        lines = f.read().splitlines()
    assert lines[0] == "branch,t,re,im,multiplicity,uncertain"
    assert len(lines) == 1 + 64


def test_nested_annuli_index():
    theta = nested_annuli((0.3, 0.6))
    assert fredholm_index(theta, 0.45) == 1
    assert fredholm_index(theta, -0.45j) == 1
    assert fredholm_index(theta, 0.8j) == 2
    assert fredholm_index(theta, -0.75 + 0.2j) == 2
    assert classify_point(theta, 0.2) == RESOLVENT
    region_map = decompose_fredholm_regions(theta, 1.1, 201, 1e-6)
    assert sorted(region_map.alpha()) == [1, 2]


def test_region_map_needs_resolution():
    with pytest.raises(ValueError):
        decompose_fredholm_regions(annulus(0.5), 1.1, 50, 1e-6)
