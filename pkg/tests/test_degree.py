from fractions import Fraction

import numpy as np
import pytest

from conftest import fixture_map
from sphereimm.degree import (DegreeConfig, build_H, degree_on_sphere, local_degree_at_origin,
                              nonorigin_zeros)
from sphereimm.errors import DimensionError, ZeroOnSphereError
from sphereimm.polycore import Polynomial, PolynomialMap, variables

METHODS = ("preimage_count", "kronecker_integral")


def winding(k: int) -> PolynomialMap:
    x, y = variables(2)
    re, im = Polynomial.constant(1, 2), Polynomial.zero(2)
    for _ in range(k):
        re, im = re * x - im * y, re * y + im * x
    return PolynomialMap(2, (re, im))


def identity(m):
    return PolynomialMap(m, tuple(variables(m)))


def antipodal(m):
    return PolynomialMap(m, tuple(-v for v in variables(m)))


def test_build_H_shape_and_components():
    A = build_H(fixture_map(), Fraction(1, 10), 2)
    assert A.H.domain_dim == 6 and A.H.codomain_dim == 6
    x = variables(6)
    assert A.H.components[0] == sum((v * v for v in x[:3]), Polynomial.zero(6)) \
        - sum((v * v for v in x[3:]), Polynomial.zero(6))


def test_build_H_rejects_bad_parameters():
    with pytest.raises(ValueError):
        build_H(fixture_map(), 0, 2)
    with pytest.raises(ValueError):
        build_H(fixture_map(), 0.1, 3)
    with pytest.raises(DimensionError):
        x, y = variables(2)
        build_H(PolynomialMap(2, (x, y)), 0.1, 2)


def test_negative_t_second_component_positive():
    F2 = build_H(fixture_map(), -0.1, 2).H.compiled
    pts = np.random.default_rng(0).normal(size=(2000, 6))
    assert np.all(F2.values(pts)[:, 1] > 0)


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("H,expected", [
    (identity(2), 1), (identity(3), 1), (antipodal(2), 1), (antipodal(3), -1),
    (antipodal(4), 1), (winding(2), 2), (winding(3), 3),
    (PolynomialMap(2, (variables(2)[0] ** 2 - variables(2)[1] ** 2,
                       2 * variables(2)[0] * variables(2)[1])), 2),
])
def test_known_degrees(H, expected, method):
    assert degree_on_sphere(H, 1.0, method).value == expected


def test_sign_flip_negates_degree():
    w = winding(3)
    flipped = PolynomialMap(2, (w.components[0], -w.components[1]))
    for m in METHODS:
        assert degree_on_sphere(flipped, 0.5, m).value == -3


def test_scale_invariance_of_radius():
    for r in (1e-3, 1.0, 10.0):
        assert degree_on_sphere(winding(4), r, "kronecker_integral").value == 4


def test_zero_on_sphere_detected():
    x, y = variables(2)
    H = PolynomialMap(2, (x * x + y * y - 1, y))
    with pytest.raises(ZeroOnSphereError):
        degree_on_sphere(H, 1.0, "preimage_count")


def test_regular_value_independence():
    vals = set()
    zs = []
    for seed in range(5):
        res = degree_on_sphere(winding(3), 1.0, "preimage_count", DegreeConfig(seed=seed))
        vals.add(res.value)
        zs.append(tuple(res.evidence["regular_value"]))
    assert vals == {3}
    assert len(set(zs)) == 5


def test_preimages_of_winding_map():
    res = degree_on_sphere(winding(4), 1.0, "preimage_count")
    assert len(res.evidence["preimages"]) == 4
    assert all(p["sign"] == 1 for p in res.evidence["preimages"])


def test_local_degree_of_identity():
    res = local_degree_at_origin(identity(3))
    assert res.value == 1
    assert len(res.evidence["history"]) >= 2


@pytest.mark.parametrize("alpha", [2, 4])
def test_nonorigin_zero_norms_match_oracle(oracles, alpha):
    t = Fraction(1, 10)
    A = build_H(fixture_map(), t, alpha)
    zeros = nonorigin_zeros(A, 2 * A.natural_radius)
    expected = oracles["aux_zero_norms"][f"{alpha}:1/10"]
    assert len(zeros) == 2
    np.testing.assert_allclose(np.linalg.norm(zeros, axis=1), expected, rtol=1e-9)


def test_aux_degree_alpha2_plus_and_minus():
    assert local_degree_at_origin(build_H(fixture_map(), 0.1, 2)).value == -2
    assert local_degree_at_origin(build_H(fixture_map(), -0.1, 2)).value == 0
