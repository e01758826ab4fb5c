from fractions import Fraction

import numpy as np
import pytest

from conftest import fixture_map, map_from_terms
from sphereimm.polycore import Polynomial, PolynomialMap, variables
from sphereimm.selfint import (SelfIntConfig, SelfIntersectionPair, _triple_points,
                               classify_pair, find_self_intersections,
                               intersection_number_via_pairs, pairing_matrix,
                               radius_stability_check, tangent_basis)

x, y, z = variables(3)


@pytest.mark.parametrize("p", [(0, 0, 1.0), (0, 0, -2.0), (1.0, 2.0, -0.5), (-3.0, 0.1, 0.2)])
def test_tangent_basis_orthonormal_and_oriented(p):
    V = tangent_basis(p)
    assert V.shape == (2, 3)
    np.testing.assert_allclose(V @ V.T, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(V @ np.asarray(p), 0, atol=1e-14)
    assert np.linalg.det(np.vstack([p, V])) > 0


def test_tangent_basis_at_poles_matches_explicit_bases():
    np.testing.assert_allclose(tangent_basis((0, 0, 0.3)), [[1, 0, 0], [0, 1, 0]])
    np.testing.assert_allclose(tangent_basis((0, 0, -0.3)), [[1, 0, 0], [0, -1, 0]])


def test_tangent_basis_rejects_origin():
    with pytest.raises(ValueError):
        tangent_basis((0, 0, 0))


@pytest.mark.parametrize("r", [1.0, 0.1, 0.01])
def test_fixture_pair_determinant(oracles, r):
    assert oracles["fixture_pair_det"] == "-4*r**2"
    M = pairing_matrix(fixture_map(), (0, 0, r), (0, 0, -r))
    assert np.linalg.det(M) == pytest.approx(-4 * r * r, rel=1e-12)
    regular, sign, cond = classify_pair(fixture_map(), (0, 0, r), (0, 0, -r))
    assert regular and sign == -1 and cond > 0


@pytest.mark.parametrize("s,sign", [(2, -1), (Fraction(1, 2), -1), (-1, 1), (-3, 1)])
def test_scaled_sign(s, sign):
    g = PolynomialMap(3, (x * Fraction(s), y, x * z, y * z))
    assert classify_pair(g, (0, 0, 0.5), (0, 0, -0.5))[1] == sign


def test_fixture_single_pair():
    rep = find_self_intersections(fixture_map(), 1.0)
    assert rep.complete and len(rep.pairs) == 1
    pr = rep.pairs[0]
    np.testing.assert_allclose(pr.p, [0, 0, -1], atol=1e-8)
    np.testing.assert_allclose(pr.q, [0, 0, 1], atol=1e-8)
    assert pr.residual < 1e-12


def test_linear_embedding_has_no_pairs():
    rep = intersection_number_via_pairs(PolynomialMap(3, (x, y, z, Polynomial.zero(3))), 0.5)
    assert rep.pairs == [] and rep.intersection_number == 0


@pytest.mark.parametrize("s,expected", [(1, -1), (2, -1), (-3, 1), (-1, 1)])
def test_pair_route_values(s, expected):
    g = PolynomialMap(3, (x * s, y, x * z, y * z))
    assert intersection_number_via_pairs(g, 0.1).intersection_number == expected


def test_rotated_fixture_pairs(oracles):
    for rot in oracles["rotated_fixture"][:2]:
        g = map_from_terms(rot["components"])
        rep = find_self_intersections(g, 1.0)
        assert len(rep.pairs) == 1
        found = {tuple(np.round(rep.pairs[0].p, 8)), tuple(np.round(rep.pairs[0].q, 8))}
        expected = {tuple(np.round(v, 8)) for v in rot["pair"]}
        assert found == expected


def test_radius_stability():
    stable, vals = radius_stability_check(fixture_map(), [1.0, 0.1, 0.01])
    assert stable and vals == [-1, -1, -1]
    stable, vals = radius_stability_check(PolynomialMap(3, (x, y, z, Polynomial.zero(3))),
                                          [1.0, 0.1])
    assert stable and vals == [0, 0]


def test_order_and_basis_invariance():
    g = fixture_map()
    p, q = np.array([0, 0, 0.2]), np.array([0, 0, -0.2])
    assert classify_pair(g, p, q)[1] == classify_pair(g, q, p)[1]
    rng = np.random.default_rng(0)
    for _ in range(10):
        B = rng.normal(size=(2, 2))
        if np.linalg.det(B) < 0:
            B[0] = -B[0]
        C = rng.normal(size=(2, 2))
        if np.linalg.det(C) < 0:
            C[1] = -C[1]
        bp, bq = B @ tangent_basis(p), C @ tangent_basis(q)
        assert classify_pair(g, p, q, bases=(bp, bq))[1] == -1


def test_curve_of_pairs_is_flagged_incomplete():
    # (x, y, z) and (x, y, -z) always collide: the pairs are not isolated
    rep = intersection_number_via_pairs(PolynomialMap(3, (x, y, x * x, y * y)), 0.1,
                                        SelfIntConfig(doublings=1))
    assert not rep.complete and rep.intersection_number is None


def test_triple_point_detection():
    # (x + iy)^3 takes one value at three equatorial points 120 degrees apart
    g = PolynomialMap(3, (x ** 3 - 3 * x * y * y, 3 * x * x * y - y ** 3, z, z * z))
    pts = [np.array([np.cos(a), np.sin(a), 0.0]) for a in (0, 2 * np.pi / 3, 4 * np.pi / 3)]
    pairs = [SelfIntersectionPair(pts[i], pts[j], 0.0, True, 1, 1.0, 1.0)
             for i, j in ((0, 1), (0, 2), (1, 2))]
    triples = _triple_points(g, pairs, SelfIntConfig())
    assert len(triples) == 1 and len(triples[0]["points"]) == 3
    assert _triple_points(g, pairs[:1], SelfIntConfig()) == []
