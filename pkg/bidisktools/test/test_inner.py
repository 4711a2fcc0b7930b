import numpy as np
import pytest

from ..errors import FactorMismatchError, InputFormatError, NotInnerError, ZeroPolynomialError
from ..inner import (
    MAX_EXPONENT,
    boundary_modulus_error,
    inner_from_json,
    is_z_only,
    make_rational_inner,
    numerator_fiber_roots,
    univariate_factor_roots,
    validate_stability,
)
from ..poly import BiPoly, reflect

Z = BiPoly.monomial(1, 0)
W = BiPoly.monomial(0, 1)

ANNULUS = {"p": {"coeffs": [[1, 0], [0, -0.5]]}}


def test_annulus_numerator():
    theta = make_rational_inner(1 - 0.5 * Z * W)
    assert theta.q.allclose(Z * W - 0.5)
    assert theta.mode == "inner"
    assert boundary_modulus_error(theta) < 1e-12


def test_monomial_prefix():
    theta = make_rational_inner(1 - 0.5 * Z * W, k=1, l=2)
    assert theta.q.allclose((Z * W - 0.5).shift(1, 2))
    assert boundary_modulus_error(theta) < 1e-12


def test_unstable_denominator():
    with pytest.raises(NotInnerError) as info:
        make_rational_inner(1 - 2 * Z)
    z, _ = info.value.witness
    assert abs(z) < 1


def test_torus_zero_is_only_a_candidate():
    report = validate_stability(1 - 0.5 * W - 0.5 * Z, grid_n=64)
    assert report.stable
    assert any(abs(z - 1) < 1e-6 and abs(w - 1) < 1e-6 for z, w in report.torus_zero_candidates)


def test_zero_denominator():
    with pytest.raises(ZeroPolynomialError):
        make_rational_inner(BiPoly(0))


def test_factor_check():
    theta = make_rational_inner(1 - 0.5 * Z * W, factors=[(Z * W - 0.5, 1)])
    assert len(theta.factors) == 1
    with pytest.raises(FactorMismatchError):
        make_rational_inner(1 - 0.5 * Z * W, factors=[(Z * W - 0.4, 1)])
    with pytest.raises(FactorMismatchError):
        make_rational_inner(1 - 0.5 * Z * W, factors=[(2 * Z * W - 1, 1)])


def test_polynomial_mode():
    theta = make_rational_inner(Z**2 - W**2, mode="polynomial")
    assert theta.p.allclose(1)
    assert theta.q.allclose(Z**2 - W**2)
    assert theta.to_json()["p"] == theta.q.to_json()
    # Non-unimodular constants are fine for a submodule generator.
    make_rational_inner(2 * (Z - W), mode="polynomial", factors=[(Z - W, 1)])


def test_numerator_fiber_roots():
    theta = make_rational_inner(1 - 0.5 * Z * W)
    roots = numerator_fiber_roots(theta, 0.7)
    assert np.allclose(roots.values, [0.5 / 0.7])


def test_univariate_factor_roots():
    theta = make_rational_inner((Z - 0.5) * (Z - W), mode="polynomial")
    roots = univariate_factor_roots(theta, "z")
    assert roots.multiplicities == [1]
    assert abs(roots.values[0] - 0.5) < 1e-9
    assert len(univariate_factor_roots(theta, "w")) == 0
    assert len(univariate_factor_roots(make_rational_inner(1 - 0.5 * Z * W), "z")) == 0


def test_is_z_only():
    assert is_z_only(make_rational_inner(1 - 0.3 * Z))
    assert not is_z_only(make_rational_inner(1 - 0.5 * Z * W))


def test_from_json():
    theta = inner_from_json(ANNULUS)
    assert theta.q.allclose(Z * W - 0.5)
    again = inner_from_json(theta.to_json())
    assert again.q.allclose(theta.q)


def test_from_json_rejects():
    with pytest.raises(InputFormatError):
        inner_from_json([1, 2])
    with pytest.raises(InputFormatError):
        inner_from_json({})
    with pytest.raises(InputFormatError):
        inner_from_json(dict(ANNULUS, extra=1))
    with pytest.raises(InputFormatError):
        inner_from_json(dict(ANNULUS, k=-1))
    with pytest.raises(InputFormatError):
        inner_from_json(dict(ANNULUS, k=1.5))
    with pytest.raises(InputFormatError):
        inner_from_json(dict(ANNULUS, mode="rational"))
    with pytest.raises(InputFormatError):
        inner_from_json(dict(ANNULUS, factors=[{"poly": ANNULUS["p"], "exp": 0}]))
    with pytest.raises(InputFormatError):
        inner_from_json(dict(ANNULUS, factors=[{"poly": ANNULUS["p"], "exp": True}]))
    with pytest.raises(InputFormatError):
        inner_from_json(dict(ANNULUS, k=1000000000))
    with pytest.raises(InputFormatError):
        inner_from_json({"p": {"coeffs": [[1, 0], [0, float("nan")]]}})
    with pytest.raises(InputFormatError):
        inner_from_json({"p": {"coeffs": [[1, 0], [0, [1e308, float("inf")]]]}})


def test_exponent_bound():
    theta = make_rational_inner(1 - 0.5 * Z * W, k=MAX_EXPONENT)
    assert theta.q.deg_z == MAX_EXPONENT + 1
    with pytest.raises(InputFormatError):
        make_rational_inner(1 - 0.5 * Z * W, l=MAX_EXPONENT + 1)


def test_numerator_is_reflected_denominator():
    p = 1 - 0.3 * Z - 0.2j * W + 0.1 * Z * W
    theta = make_rational_inner(p, k=2, l=1)
    assert theta.q.allclose(reflect(p, 1, 1).shift(2, 1))
    assert reflect(theta.q, theta.q.deg_z, theta.q.deg_w).allclose(p)
    z, w = 0.4 + 0.1j, -0.3j
    expected = z**3 * w**2 * np.conj(p(1 / np.conj(z), 1 / np.conj(w)))
    assert abs(theta.q(z, w) - expected) < 1e-12
    assert boundary_modulus_error(theta) < 1e-12
