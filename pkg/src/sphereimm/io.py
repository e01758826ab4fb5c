"""JSON map documents.

A document looks like::

    {
      "format_version": "1",
      "vars": ["x", "y", "z"],
      "lambda_vars": ["s"],
      "components": [
        [{"coef": "1", "exps": [1, 0, 0, 1]}],
        ...
      ]
    }

``lambda_vars`` is optional; when present and non-empty the document
describes a family and every ``exps`` vector covers ``vars`` followed by
``lambda_vars``.  Coefficients are exact rationals written as strings.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .errors import ParseError
from .family import FamilySpec
from .polycore import Polynomial, PolynomialMap

FORMAT_VERSION = "1"
_FIELDS = {"format_version", "vars", "lambda_vars", "components"}
_TERM_FIELDS = {"coef", "exps"}


def _rational(text, where: str) -> Fraction:
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise ParseError(f"coefficient must be a rational string like \"p/q\", got {text!r}",
                         where)
    try:
        return Fraction(text)
    except ZeroDivisionError:
        raise ParseError(f"zero denominator in {text!r}", where) from None
    except ValueError:
        raise ParseError(f"malformed rational {text!r}", where) from None


def _names(doc: dict, key: str, required: bool) -> list[str]:
    if key not in doc:
        if required:
            raise ParseError("missing field", key)
        return []
    names = doc[key]
    if not isinstance(names, list) or not all(isinstance(v, str) and v for v in names):
        raise ParseError("expected a list of non-empty strings", key)
    if len(set(names)) != len(names):
        raise ParseError("duplicate variable names", key)
    return names


def parse_document(text: str) -> tuple[PolynomialMap, list[str], list[str]]:
    """Parse to ``(map, vars, lambda_vars)``; the map has ``len(vars) + len(lambda_vars)`` variables."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", "document")
    unknown = sorted(set(doc) - _FIELDS)
    if unknown:
        raise ParseError(f"unknown field(s) {unknown}", "document")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}", "format_version")
    xs = _names(doc, "vars", True)
    ls = _names(doc, "lambda_vars", False)
    if not xs:
        raise ParseError("at least one variable is required", "vars")
    if set(xs) & set(ls):
        raise ParseError("a name is used as both a variable and a parameter", "lambda_vars")
    comps = doc.get("components")
    if not isinstance(comps, list) or not comps:
        raise ParseError("expected a non-empty list of components", "components")
    nv = len(xs) + len(ls)
    polys = []
    for i, comp in enumerate(comps):
        where = f"components[{i}]"
        if not isinstance(comp, list):
            raise ParseError("a component is a list of terms", where)
        terms: dict[tuple, Fraction] = {}
        for j, term in enumerate(comp):
            tw = f"{where}[{j}]"
            if not isinstance(term, dict):
                raise ParseError("a term is an object with coef and exps", tw)
            extra = sorted(set(term) - _TERM_FIELDS)
            if extra:
                raise ParseError(f"unknown field(s) {extra}", tw)
            if "coef" not in term or "exps" not in term:
                raise ParseError("term needs both coef and exps", tw)
            c = _rational(term["coef"], f"{tw}.coef")
            e = term["exps"]
            if not isinstance(e, list) or not all(isinstance(v, int) and not isinstance(v, bool)
                                                  and v >= 0 for v in e):
                raise ParseError("exps must be a list of non-negative integers", f"{tw}.exps")
            if len(e) != nv:
                raise ParseError(f"exps has length {len(e)}, expected {nv}", f"{tw}.exps")
            terms[tuple(e)] = terms.get(tuple(e), Fraction(0)) + c
        polys.append(Polynomial(nv, terms))
    return PolynomialMap(nv, tuple(polys)), xs, ls


def parse_map(text: str) -> PolynomialMap | FamilySpec:
    """Parse a map document; documents with ``lambda_vars`` become a :class:`FamilySpec`."""
    g, xs, ls = parse_document(text)
    if not ls:
        return g
    n = len(xs) - 1
    try:
        return FamilySpec(n, len(ls), g, (), tuple(ls))
    except ValueError as exc:
        raise ParseError(str(exc), "components") from None


def map_to_document(g: PolynomialMap, vars_=None, lambda_vars=()) -> dict:
    lambda_vars = list(lambda_vars)
    nx = g.domain_dim - len(lambda_vars)
    vars_ = list(vars_) if vars_ is not None else _default_names(nx)
    comps = []
    for c in g.components:
        terms = sorted(c.terms.items(), reverse=True)
        comps.append([{"coef": str(v), "exps": list(e)} for e, v in terms])
    doc = {"format_version": FORMAT_VERSION, "vars": vars_}
    if lambda_vars:
        doc["lambda_vars"] = lambda_vars
    doc["components"] = comps
    return doc


def emit_map(obj, vars_=None, lambda_vars=None) -> str:
    """Serialise a map or family to document text (inverse of :func:`parse_map`)."""
    if isinstance(obj, FamilySpec):
        lam = list(lambda_vars or obj.lambda_names or _default_names(obj.p, "l"))
        doc = map_to_document(obj.g, vars_, lam)
    else:
        doc = map_to_document(obj, vars_, lambda_vars or ())
    return json.dumps(doc, indent=2) + "\n"


def _default_names(k: int, stem: str = "x") -> list[str]:
    if stem == "x" and k <= 3:
        return ["x", "y", "z"][:k]
    return [f"{stem}{i + 1}" for i in range(k)]
