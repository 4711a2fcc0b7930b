import numpy as np
import pytest

from ..bundle import ZmWnField
from ..catalog import diagonal_power, disconnected, even_in_w, nested_annuli
from ..errors import InputFormatError, UnivariateFactorError
from ..inner import make_rational_inner
from ..poly import BiPoly
from ..reduce import (
    MatrixAlgebraBasis,
    RotationSubBundle,
    Verdict,
    _close,
    commutant_and_blocks,
    curvature_algebra,
    cross_component_orthogonal,
    degree2_criterion,
    max_cross_inner_product,
    rotation_orders,
    rotation_sub_bundles,
    sample_points,
    strict_reducibility,
)
from ..spectrum import decompose_fredholm_regions, fredholm_index

Z = BiPoly.monomial(1, 0)
W = BiPoly.monomial(0, 1)

# (alpha, beta) of (z - alpha w)(z - beta w) and whether S_z reduces
DEGREE2 = [
    (1, -1, True),
    (1, 1, False),
    (1, 2, False),
    (1, 0.5j, False),
    (0.5j, -0.5j, True),
]


def unit_basis(mats):
    return tuple(m / np.linalg.norm(m) for m in mats)


def matrix_units(n):
    out = []
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1
            out.append(e)
    return out


def test_degree2_criterion():
    for alpha, beta, reducible in DEGREE2:
        assert degree2_criterion(alpha, beta) == reducible
    with pytest.raises(InputFormatError):
        degree2_criterion(0, 1)


def test_blocks_of_full_matrix_algebra_with_multiplicity():
    basis = unit_basis(np.kron(np.eye(2), e) for e in matrix_units(2))
    alg = MatrixAlgebraBasis(0j, (), basis, 2, 3, 4)
    report = commutant_and_blocks(alg)
    assert report.blocks == [(2, 2)]
    assert report.commutant_dim == 4
    assert report.verdict is Verdict.REDUCIBLE


def test_blocks_of_direct_sum():
    mats = []
    for e in matrix_units(3):
        if e[0, 0] or (not e[0].any() and not e[:, 0].any()):
            mats.append(e)
    alg = MatrixAlgebraBasis(0j, (), unit_basis(mats), 2, 3, 3)
    report = commutant_and_blocks(alg)
    assert alg.dim == 5
    assert sorted(report.blocks) == [(1, 1), (2, 1)]
    assert report.commutant_dim == 2
    assert len(report.minimal_projections) == 2


def test_irreducible_algebra():
    alg = MatrixAlgebraBasis(0j, (), unit_basis(matrix_units(3)), 2, 3, 3)
    report = commutant_and_blocks(alg)
    assert report.blocks == [(3, 1)]
    assert report.verdict is Verdict.IRREDUCIBLE


def test_zm_wn_algebra():
    # z^2 - w^2: scalar curvature, commutant M_2
    alg = curvature_algebra(None, 0.4 + 0.1j, frame_field=ZmWnField(2, 2))
    assert alg.dim == 1
    report = commutant_and_blocks(alg)
    assert report.blocks == [(1, 2)]
    assert report.commutant_dim == 4
    # z - w: a line bundle
    alg = curvature_algebra(None, 0.4 + 0.1j, frame_field=ZmWnField(1, 1))
    assert commutant_and_blocks(alg).verdict is Verdict.IRREDUCIBLE


def test_rotation_orders():
    assert rotation_orders(even_in_w(0.1)) == [2]
    assert rotation_orders(disconnected(0.1)) == []
    with pytest.raises(ValueError):
        RotationSubBundle(disconnected(0.1), 2, (0,))


def test_rotation_sub_bundles_are_orthogonal():
    theta = even_in_w(0.1)
    even, odd = rotation_sub_bundles(theta, 2)
    # 0.09 and 0.11 lie in the small component, 0.7 and -0.7 in the large one
    first = [0.11, 0.7]
    second = [0.09, -0.7]
    assert max_cross_inner_product(even, odd, first, second) < 1e-8
    assert max_cross_inner_product(odd, even, first, second) < 1e-8
    assert max_cross_inner_product(even, even, first, second) > 1e-3
    assert even(0.11).rank == 1 and odd(0.7).rank == 1
    assert cross_component_orthogonal(even, odd, first, second)
    assert not cross_component_orthogonal(even, even, first, second)


def test_index_one_component_is_irreducible():
    theta = disconnected(0.1)
    region_map = decompose_fredholm_regions(theta, 1.1, 301, 1e-6)
    result = strict_reducibility(theta, region_map)
    assert result.verdict is Verdict.IRREDUCIBLE
    assert result.to_json()["verdict"] == "Irreducible"


def test_univariate_factor():
    theta = make_rational_inner((Z - 0.5) * (Z - W), mode="polynomial")
    region_map = decompose_fredholm_regions(theta, 1.1, 101, 1e-6)
    with pytest.raises(UnivariateFactorError):
        strict_reducibility(theta, region_map)


def test_degree2_pipeline():
    for alpha, beta, reducible in DEGREE2:
        theta = make_rational_inner((Z - alpha * W) * (Z - beta * W), mode="polynomial")
        region_map = decompose_fredholm_regions(theta, 1.1, 201, 1e-6)
        result = strict_reducibility(theta, region_map)
        expected = Verdict.REDUCIBLE if reducible else Verdict.IRREDUCIBLE
        assert result.verdict is expected, (alpha, beta, result.reason)


def test_degree2_random_pairs():
    rng = np.random.default_rng(7)
    for i in range(20):
        r = rng.uniform(0.4, 0.9)
        alpha = r * np.exp(2j * np.pi * rng.uniform())
        if i % 3 == 0:
            beta = -alpha
        elif i % 3 == 1:
            # same modulus, not opposite
            beta = alpha * np.exp(1j * np.pi * rng.uniform(0.3, 0.7))
        else:
            other = r + 0.2 if r < 0.65 else r - 0.2
            beta = other * np.exp(2j * np.pi * rng.uniform())
        theta = make_rational_inner((Z - alpha * W) * (Z - beta * W), mode="polynomial")
        region_map = decompose_fredholm_regions(theta, 1.1, 101, 1e-6)
        result = strict_reducibility(theta, region_map, seed=i)
        assert (result.verdict is Verdict.REDUCIBLE) == degree2_criterion(alpha, beta), (
            alpha,
            beta,
            result.reason,
        )


def test_diagonal_powers_are_irreducible():
    for n in (2, 3):
        theta = diagonal_power(n)
        region_map = decompose_fredholm_regions(theta, 1.1, 301, 1e-6)
        assert region_map.alpha() == (n,)
        result = strict_reducibility(theta, region_map)
        assert result.verdict is Verdict.IRREDUCIBLE, result.reason


def test_triple_node_algebra():
    alg = curvature_algebra(diagonal_power(3), 0.3)
    assert alg.size == 3
    assert commutant_and_blocks(alg).verdict is Verdict.IRREDUCIBLE


def test_rotation_splitting_across_components():
    theta = even_in_w(0.1)
    region_map = decompose_fredholm_regions(theta, 1.1, 301, 1e-6)
    assert region_map.alpha() == (2, 2)
    result = strict_reducibility(theta, region_map)
    assert result.verdict is Verdict.REDUCIBLE
    rng = np.random.default_rng(0)
    first, second = [
        sample_points(region_map, c, 25, rng, min_depth=2)
        for c in region_map.fredholm_components()
    ]
    even, odd = rotation_sub_bundles(theta, 2)
    assert cross_component_orthogonal(even, odd, first, second)
    assert cross_component_orthogonal(odd, even, first, second)
    assert cross_component_orthogonal(even, odd, second, first)


def test_nested_annuli_are_irreducible():
    theta = nested_annuli((0.3, 0.6))
    assert fredholm_index(theta, 0.45) == 1
    assert fredholm_index(theta, 0.8) == 2
    region_map = decompose_fredholm_regions(theta, 1.1, 201, 1e-6)
    result = strict_reducibility(theta, region_map)
    assert result.verdict is Verdict.IRREDUCIBLE


def test_close_respects_word_length():
    shift = np.diag(np.ones(3, dtype=complex), 1)
    # I, N, ..., N^length up to N^4 = 0
    assert len(_close([shift], 4, 1)) == 2
    assert len(_close([shift], 4, 2)) == 3
    assert len(_close([shift], 4, 3)) == 4
    assert len(_close([shift], 4, 6)) == 4
    assert len(_close([], 4, 3)) == 1
