"""Intersection numbers of polynomial immersions of small spheres.

For ``g: R^{n+1} -> R^{2n}`` (``n`` even) whose restriction to every small
sphere about the origin is an immersion, the package computes the signed
self-intersection count of ``g|S^n(r)`` in two independent ways:

* geometrically, by finding and orienting self-intersection pairs
  (:mod:`sphereimm.selfint`);
* topologically, from local degrees of an auxiliary map
  (:mod:`sphereimm.degree`).

Exact polynomial algebra lives in :mod:`sphereimm.polycore`; batch float
evaluation is provided by a compiled extension with a NumPy fallback
(:mod:`sphereimm.kernels`).
"""

__version__ = "0.1.0"

from .errors import (ClusterAmbiguityError, DimensionError, NoStabilizationError,  # noqa: E402
                     ParseError, QuadratureError, SphereImmError, ZeroOnSphereError)
from .polycore import Polynomial, PolynomialMap, PolyMatrix, variables  # noqa: E402
from .immersion import (ImmersionCertificate, ImmersionConfig,  # noqa: E402
                        check_immersion_small_spheres)
from .degree import (DegreeConfig, DegreeResult, build_H, degree_on_sphere,  # noqa: E402
                     intersection_number_via_degree, local_degree_at_origin)
from .selfint import (IntersectionReport, SelfIntersectionPair,  # noqa: E402
                      classify_pair, find_self_intersections, intersection_number_via_pairs,
                      tangent_basis)
from .family import (FamilyReport, FamilySpec, check_mod2_generic,  # noqa: E402
                     fit_sign_representation, scaled_family, scan)
from .io import emit_map, parse_map  # noqa: E402

__all__ = [
    "ClusterAmbiguityError", "DimensionError", "NoStabilizationError", "ParseError",
    "QuadratureError", "SphereImmError", "ZeroOnSphereError",
    "Polynomial", "PolynomialMap", "PolyMatrix", "variables",
    "ImmersionCertificate", "ImmersionConfig", "check_immersion_small_spheres",
    "DegreeConfig", "DegreeResult", "build_H", "degree_on_sphere",
    "intersection_number_via_degree", "local_degree_at_origin",
    "IntersectionReport", "SelfIntersectionPair", "classify_pair",
    "find_self_intersections", "intersection_number_via_pairs", "tangent_basis",
    "FamilyReport", "FamilySpec", "check_mod2_generic", "fit_sign_representation",
    "scaled_family", "scan", "emit_map", "parse_map",
]
