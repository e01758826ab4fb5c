import numpy as np
import pytest

from conftest import fixture_map
from sphereimm.errors import DimensionError
from sphereimm.immersion import (ImmersionConfig, augmented_jacobian,
                                 check_family_member, check_immersion_small_spheres,
                                 immersion_minors)
from sphereimm.family import scaled_family
from sphereimm.polycore import Polynomial, PolynomialMap, variables

x, y, z = variables(3)


def test_augmented_jacobian_rows():
    A = augmented_jacobian(fixture_map())
    assert A.rows == 5
    assert A.row(4) == (2 * x, 2 * y, 2 * z)


def test_fixture_passes():
    cert = check_immersion_small_spheres(fixture_map())
    assert cert.verdict == "pass"
    assert cert.r0_estimate == pytest.approx(0.1)
    assert all(s > 1e-6 for s in cert.min_minor_norm_profile)


def test_linear_embedding_passes():
    cert = check_immersion_small_spheres(PolynomialMap(3, (x, y, z, Polynomial.zero(3))))
    assert cert.passed


def test_fold_map_fails_on_equator():
    cert = check_immersion_small_spheres(PolynomialMap(3, (x, y, x * x, y * y)))
    assert cert.verdict == "fail"
    r = cert.radii_checked[-1]
    assert abs(cert.witness[2]) < 1e-3 * r
    assert np.linalg.norm(cert.witness) == pytest.approx(r)


def test_s0_fails_at_oracle_zero(oracles):
    g0 = check_family_member(scaled_family(fixture_map(), 1).g, [0])
    assert g0.verdict == "fail"
    w = g0.witness / np.linalg.norm(g0.witness)
    zeros = np.array(oracles["s0_minor_zeros_unit_sphere"])
    assert np.min(np.linalg.norm(zeros - w, axis=1)) < 1e-3
    # the north pole is not a rank-drop point
    assert any(v != "0" for v in oracles["s0_minors_at_north_pole"])


@pytest.mark.parametrize("s", [2, -1, 0.5])
def test_nonzero_s_passes(s):
    assert check_family_member(scaled_family(fixture_map(), 1).g, [s]).passed


def test_minor_count_and_scale_invariance():
    assert len(immersion_minors(fixture_map())) == 10
    a = check_immersion_small_spheres(fixture_map())
    b = check_immersion_small_spheres(PolynomialMap(3, tuple(c * 1000 for c in fixture_map())))
    np.testing.assert_allclose(a.min_minor_norm_profile, b.min_minor_norm_profile, rtol=1e-6)


def test_deterministic():
    cfg = ImmersionConfig(seed=5)
    a = check_immersion_small_spheres(fixture_map(), cfg).to_dict()
    b = check_immersion_small_spheres(fixture_map(), cfg).to_dict()
    assert a == b


def test_shape_errors():
    with pytest.raises(DimensionError):
        check_immersion_small_spheres(PolynomialMap(3, (x, y, z)))
    w = variables(4)
    with pytest.raises(DimensionError):
        # n = 3 is odd
        check_immersion_small_spheres(PolynomialMap(4, tuple(w) + tuple(w[:2])))
