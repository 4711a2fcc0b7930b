import numpy as np
import pytest

from ..bundle import (
    FrameField,
    FrameVector,
    ZmWnField,
    bundle_report,
    connection_matrix,
    curvature_samples,
    gram,
    kernel_frame,
    kernel_inner_product,
    kernel_inner_product_series,
    orthonormal_transform,
    vector_gram,
    zm_wn_frame,
)
from ..catalog import annulus, binomial, diagonal_power
from ..errors import NodeCollisionError, NotFredholmError

ZM_WN = [(1, 2), (2, 2), (2, 3)]


def random_points(rng, count, low, high):
    r = rng.uniform(low, high, count)
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, count))


def random_vector(rng):
    lam, node = random_points(rng, 2, 0.0, 0.7)
    return FrameVector(complex(lam), complex(node), int(rng.integers(0, 3)))


def test_frame_vector_checks():
    with pytest.raises(ValueError):
        FrameVector(0.5, 1.0)
    with pytest.raises(ValueError):
        FrameVector(1.0, 0.5)
    with pytest.raises(ValueError):
        FrameVector(0.5, 0.5, -1)


def test_kernel_inner_product_matches_series():
    rng = np.random.default_rng(0)
    for _ in range(500):
        u, v = random_vector(rng), random_vector(rng)
        exact = kernel_inner_product(u, v)
        series = kernel_inner_product_series(u, v, 200)
        assert abs(exact - series) <= 1e-10 * max(1.0, abs(exact))


def test_kernel_inner_product_hermitian():
    rng = np.random.default_rng(1)
    for _ in range(50):
        u, v = random_vector(rng), random_vector(rng)
        assert kernel_inner_product(u, v) == kernel_inner_product(v, u).conjugate()


def test_vector_gram_matches_pairwise():
    rng = np.random.default_rng(2)
    left = [random_vector(rng) for _ in range(5)]
    right = [random_vector(rng) for _ in range(4)]
    g = vector_gram(left, right)
    for a, u in enumerate(left):
        for b, v in enumerate(right):
            assert abs(g[a, b] - kernel_inner_product(u, v)) < 1e-12 * max(1.0, abs(g[a, b]))


def test_zm_wn_gram():
    rng = np.random.default_rng(3)
    for m, n in ZM_WN:
        for lam in random_points(rng, 100, 0.05, 0.9):
            x = abs(lam) ** 2
            expected = 1 / ((1 - x) * (1 - x**m))
            g = gram(zm_wn_frame(m, n, lam)).entries
            assert np.max(np.abs(g - expected * np.eye(n))) < 1e-10 * max(1.0, expected)


def test_zm_wn_connection():
    rng = np.random.default_rng(4)
    for m, n in ZM_WN:
        field = ZmWnField(m, n)
        for lam in random_points(rng, 100, 0.05, 0.9):
            x = abs(lam) ** 2
            expected = lam / (1 - x) + m * lam * x ** (m - 1) / (1 - x**m)
            theta = connection_matrix(field, lam, h=1e-5).matrix
            assert np.max(np.abs(theta - expected * np.eye(n))) < 1e-6


def test_zm_wn_frame_errors():
    with pytest.raises(NodeCollisionError):
        zm_wn_frame(2, 2, 0)
    with pytest.raises(NotFredholmError):
        zm_wn_frame(2, 2, 1.2)


def test_kernel_frame():
    theta = annulus(0.5)
    frame = kernel_frame(theta, 0.7)
    assert frame.rank == 1
    assert abs(frame.vectors[0].node - 0.5 / 0.7) < 1e-12
    with pytest.raises(NotFredholmError):
        kernel_frame(theta, 0.3)
    with pytest.raises(NotFredholmError):
        kernel_frame(theta, 0.5)


def test_kernel_frame_derivative_tower():
    assert kernel_frame(binomial(1, 1), 0.4).rank == 1
    # (z - w)^2: one double node at lam
    frame = kernel_frame(diagonal_power(2), 0.4)
    assert [v.order for v in frame.vectors] == [0, 1]
    assert frame.nodes[0][1] == 2


def test_orthonormal_transform():
    g = gram(FrameField(binomial(2, 3), 0.3 + 0.4j).base).entries
    a = orthonormal_transform(g)
    assert np.allclose(a @ g @ a.conj().T, np.eye(3), atol=1e-10)


def annulus_curvature(lam, t):
    x = abs(lam) ** 2
    return 1 / (1 - x) ** 2 + t**2 / (x - t**2) ** 2


def test_rank_one_curvature():
    theta = annulus(0.5)
    lam = 0.7
    field = FrameField(theta, lam)
    expected = annulus_curvature(lam, 0.5)
    cauchy = curvature_samples(field, lam, method="cauchy")
    assert cauchy[0].order == (0, 0)
    assert abs(cauchy[0].orthonormal[0, 0] - expected) < 1e-8 * expected
    assert abs(cauchy[0].geometric()[0, 0] + expected) < 1e-8 * expected
    difference = curvature_samples(field, lam, h=1e-4, max_order=0)
    assert abs(difference[0].orthonormal[0, 0] - expected) < 1e-5 * expected


def test_rank_one_covariant_derivatives():
    # z - w: K = 2/(1 - |lam|^2)^2
    lam = 0.3 + 0.2j
    x = abs(lam) ** 2
    samples = curvature_samples(FrameField(binomial(1, 1), lam), lam, method="cauchy")
    by_order = {s.order: s.orthonormal[0, 0] for s in samples}
    assert set(by_order) == {(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)}
    assert abs(by_order[(0, 0)] - 2 / (1 - x) ** 2) < 1e-8
    assert abs(by_order[(1, 0)] - 4 * np.conj(lam) / (1 - x) ** 3) < 1e-7
    assert abs(by_order[(0, 1)] - 4 * lam / (1 - x) ** 3) < 1e-7


def test_zm_wn_curvature_is_scalar():
    lam = 0.4 + 0.1j
    samples = curvature_samples(ZmWnField(2, 2), lam, method="cauchy")
    k = samples[0].orthonormal
    assert np.max(np.abs(k - k[0, 0] * np.eye(2))) < 1e-8 * abs(k[0, 0])


def test_bundle_report():
    report = bundle_report(annulus(0.5), 0.7)
    assert report["convention"] == "anti-holomorphic"
    assert len(report["nodes"]) == 1
    assert report["gram"].shape == (1, 1)
    assert [c["order"] for c in report["curvature"]][0] == [0, 0]


def test_double_node_curvature_is_not_scalar():
    lam = 0.3
    samples = curvature_samples(FrameField(diagonal_power(2), lam), lam, method="cauchy")
    k = samples[0].orthonormal
    assert k.shape == (2, 2)
    assert np.allclose(k, k.conj().T, atol=1e-8)
    scalar = np.trace(k) / 2 * np.eye(2)
    assert np.linalg.norm(k - scalar) > 1e-3 * np.linalg.norm(k)


def test_triple_node_curvature():
    lam = 0.3 + 0.1j
    samples = curvature_samples(FrameField(diagonal_power(3), lam), lam, method="cauchy")
    k = samples[0].orthonormal
    assert k.shape == (3, 3)
    assert np.allclose(k, k.conj().T, atol=1e-6 * np.linalg.norm(k))
