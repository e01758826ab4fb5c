"""Acceptance gate.

One test per criterion, each tagged with ``criterion``; the terminal summary
prints a PASS/FAIL line per criterion. Tolerances and runtime budgets are
fixed here and must not be loosened to make a run pass.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``.
"""
import json
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import fixture_map, map_from_terms, poly_from_terms
from sphereimm.cli import run
from sphereimm.degree import DegreeConfig, build_H, degree_on_sphere, local_degree_at_origin
from sphereimm.family import ScanConfig, fit_sign_representation, scaled_family, scan
from sphereimm.immersion import check_family_member, check_immersion_small_spheres
from sphereimm.polycore import (Polynomial, PolynomialMap, augmented_map, diagonal, jacobian,
                                minors, telescoping_decomposition, variables, w_minors)
from sphereimm.selfint import (classify_pair, intersection_number_via_pairs, tangent_basis)

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

RADII = (1.0, 0.1, 0.01)
POINT_TOL = 1e-8
DET_RTOL = 1e-6
BUDGET = {"C1": 30.0, "C2": 120.0, "C3": 120.0, "C4": 60.0, "C5": 60.0, "C6": 60.0}

FIXTURE_DOC = {
    "format_version": "1",
    "vars": ["x", "y", "z"],
    "components": [[{"coef": "1", "exps": [1, 0, 0]}], [{"coef": "1", "exps": [0, 1, 0]}],
                   [{"coef": "1", "exps": [1, 0, 1]}], [{"coef": "1", "exps": [0, 1, 1]}]],
}


def _power_map(m: int, sign: int) -> PolynomialMap:
    return PolynomialMap(m, tuple(v * sign for v in variables(m)))


def _winding(k: int) -> PolynomialMap:
    x, y = variables(2)
    re, im = Polynomial.constant(1, 2), Polynomial.zero(2)
    for _ in range(k):
        re, im = re * x - im * y, re * y + im * x
    return PolynomialMap(2, (re, im))


@pytest.mark.criterion("C1 fixture intersection number by both routes")
def test_c1_fixture_both_routes(tmp_path):
    src = tmp_path / "fixture.json"
    src.write_text(json.dumps(FIXTURE_DOC))
    out = tmp_path / "report.json"
    t0 = time.perf_counter()
    code = run(["intersection", str(src), "--method", "both",
                "--radius", ",".join(str(r) for r in RADII), "--out", str(out)])
    elapsed = time.perf_counter() - t0
    res = json.loads(out.read_text())["result"]
    assert code == 0
    assert res["pairs"] == -1 and res["degree"] == -1 and res["agreement"] is True
    assert [rep["radius"] for rep in res["pairs_reports"]] == list(RADII)
    for rep in res["pairs_reports"]:
        r = rep["radius"]
        assert rep["intersection_number"] == -1
        assert len(rep["pairs"]) == 1
        pr = rep["pairs"][0]
        got = sorted([pr["p"], pr["q"]], key=lambda v: v[2])
        np.testing.assert_allclose(got[0], [0, 0, -r], rtol=0, atol=POINT_TOL)
        np.testing.assert_allclose(got[1], [0, 0, r], rtol=0, atol=POINT_TOL)
        assert abs(pr["determinant"] - (-4 * r * r)) <= DET_RTOL * 4 * r * r
    assert elapsed < BUDGET["C1"], f"{elapsed:.1f}s"


@pytest.mark.criterion("C2 scaled family table, sign fit and mod-2 check")
def test_c2_scaled_family():
    grid = [Fraction(v) for v in (-2, -1, Fraction(-1, 2), Fraction(1, 2), 1, 2)]
    t0 = time.perf_counter()
    rep = scan(scaled_family(fixture_map(), 1, [grid]), ScanConfig())
    fit = fit_sign_representation(rep, 3)
    elapsed = time.perf_counter() - t0
    assert rep.table() == [1, 1, 1, -1, -1, -1]
    assert all(v.cross_validated for v in rep.values)
    assert fit is not None and fit.h.degree == 1
    for s in grid:
        assert fit.c * (1 if fit.h.evaluate([s]) > 0 else -1) == -(1 if s > 0 else -1)
    assert rep.mod2_generic is True and rep.exceptional == []
    assert elapsed < BUDGET["C2"], f"{elapsed:.1f}s"


@pytest.mark.criterion("C3 auxiliary-map local degrees")
def test_c3_auxiliary_degrees():
    t0 = time.perf_counter()
    failures = []
    for alpha in (2, 4):
        for t in (Fraction(1, 10), Fraction(1, 100), Fraction(1, 1000)):
            for sign, expected in ((1, -2), (-1, 0)):
                res = local_degree_at_origin(build_H(fixture_map(), sign * t, alpha))
                final = res.evidence["history"][-1]["values"]
                ok = (res.value == expected
                      and final == {"preimage_count": expected, "kronecker_integral": expected})
                if not ok:
                    failures.append((alpha, sign * t, res.value, final))
    elapsed = time.perf_counter() - t0
    assert not failures, failures
    assert elapsed < BUDGET["C3"], f"{elapsed:.1f}s"


@pytest.mark.criterion("C4 degree engine suite")
def test_c4_degree_engine():
    x, y = variables(2)
    cases = [(_power_map(3, 1), 1)]
    cases += [(_power_map(m, -1), (-1) ** m) for m in (2, 3, 4, 6)]
    cases += [(PolynomialMap(2, (x * x - y * y, 2 * x * y)), 2)]
    cases += [(_winding(k), k) for k in (1, 2, 3, 4)]
    t0 = time.perf_counter()
    failures = []
    for H, expected in cases:
        got = [degree_on_sphere(H, 1.0, m).value
               for m in ("preimage_count", "kronecker_integral")]
        if got != [expected, expected]:
            failures.append((H.domain_dim, expected, got))
    elapsed = time.perf_counter() - t0
    assert not failures, failures
    assert elapsed < BUDGET["C4"], f"{elapsed:.1f}s"


def _telescoping_residual_zero(g: PolynomialMap, h) -> bool:
    n = g.domain_dim
    v = variables(2 * n)
    xs, ys = v[:n], v[n:]
    for i, comp in enumerate(g.components):
        lhs = sum((h[i, j] * (xs[j] - ys[j]) for j in range(n)), Polynomial.zero(2 * n))
        if not (lhs - comp.embed(2 * n, range(n)) + comp.embed(2 * n, range(n, 2 * n))).is_zero():
            return False
    return True


@pytest.mark.criterion("C5 exact telescoping and minor identities")
def test_c5_exact_identities(oracles):
    maps = [(map_from_terms(e["components"]), e) for e in oracles["random_maps"]]
    maps.append((fixture_map(), None))
    assert len(maps) == 21
    t0 = time.perf_counter()
    for g, entry in maps:
        n = g.domain_dim
        h = telescoping_decomposition(g)
        assert _telescoping_residual_zero(g, h)
        J = jacobian(g)
        assert all(diagonal(h[i, j]) == J[i, j]
                   for i in range(g.codomain_dim) for j in range(n))
        aug_minors = minors(jacobian(augmented_map(g)), n)
        w_diag = [diagonal(w) for w in w_minors(telescoping_decomposition(augmented_map(g)))]
        assert w_diag == aug_minors
        if entry is not None:
            assert aug_minors == [poly_from_terms(t) for t in entry["aug_minors"]]
        else:
            assert aug_minors == [poly_from_terms(t) for t in oracles["fixture_aug_minors"]]
    elapsed = time.perf_counter() - t0
    assert elapsed < BUDGET["C5"], f"{elapsed:.1f}s"


@pytest.mark.criterion("C6 immersion certifier verdicts")
def test_c6_immersion_verdicts():
    x, y, z = variables(3)
    t0 = time.perf_counter()
    assert check_immersion_small_spheres(fixture_map()).verdict == "pass"
    assert check_immersion_small_spheres(PolynomialMap(3, (x, y, z, Polynomial.zero(3)))
                                         ).verdict == "pass"
    fold = check_immersion_small_spheres(PolynomialMap(3, (x, y, x * x, y * y)))
    assert fold.verdict == "fail"
    r = float(np.linalg.norm(fold.witness))
    assert abs(fold.witness[2]) < 1e-3 * r
    assert check_family_member(scaled_family(fixture_map(), 1).g, [0]).verdict == "fail"
    elapsed = time.perf_counter() - t0
    assert elapsed < BUDGET["C6"], f"{elapsed:.1f}s"


def _random_oriented(rng, n):
    B = rng.normal(size=(n, n))
    if np.linalg.det(B) < 0:
        B[0] = -B[0]
    return B


@pytest.mark.criterion("C7 invariance properties")
def test_c7_properties(oracles):
    g = fixture_map()
    rng = np.random.default_rng(20261015)
    # pair order and basis choice
    for r in RADII:
        p, q = np.array([0, 0, r]), np.array([0, 0, -r])
        base = classify_pair(g, p, q)[1]
        assert base == -1 and classify_pair(g, q, p)[1] == base
        for _ in range(10):
            bp = _random_oriented(rng, 2) @ tangent_basis(p)
            bq = _random_oriented(rng, 2) @ tangent_basis(q)
            assert classify_pair(g, p, q, bases=(bp, bq))[1] == base
            assert classify_pair(g, q, p, bases=(bq, bp))[1] == base
    # rotations of the domain
    rots = oracles["rotated_fixture"]
    assert len(rots) == 5
    for rot in rots:
        assert intersection_number_via_pairs(map_from_terms(rot["components"]), 0.1
                                             ).intersection_number == -1
    # regular values
    x, y = variables(2)
    engine = [(_winding(3), 3), (_power_map(3, -1), -1),
              (PolynomialMap(2, (x * x - y * y, 2 * x * y)), 2)]
    for H, expected in engine:
        zs = set()
        for seed in range(5):
            res = degree_on_sphere(H, 1.0, "preimage_count", DegreeConfig(seed=seed))
            assert res.value == expected
            zs.add(tuple(res.evidence["regular_value"]))
        assert len(zs) == 5
    A = build_H(g, Fraction(1, 10), 2)
    r = 0.5 * A.natural_radius
    zs = set()
    for seed in range(5):
        res = degree_on_sphere(A, r, "preimage_count", DegreeConfig(seed=seed))
        assert res.value == -2
        zs.add(tuple(res.evidence["regular_value"]))
    assert len(zs) == 5


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
