"""Exact sparse multivariate polynomials over the rationals.

Polynomials are immutable maps from exponent tuples to nonzero
:class:`fractions.Fraction` coefficients.  On top of them sit polynomial
maps, polynomial matrices, Jacobians, minors and the telescoping difference
decomposition ``g_i(x) - g_i(y) = sum_j h_ij(x, y) (x_j - y_j)``.
"""

from __future__ import annotations

import functools
import itertools
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DimensionError

Exponent = tuple[int, ...]


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, numbers.Rational)):
        return Fraction(c)
    if isinstance(c, float):
        # exact binary value of the float
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    return Fraction(c)


class Polynomial:
    """Sparse polynomial in ``num_vars`` variables with rational coefficients."""

    __slots__ = ("num_vars", "terms", "_hash")

    def __init__(self, num_vars: int, terms: Mapping[Exponent, object] | Iterable | None = None):
        if num_vars < 0:
            raise DimensionError("num_vars must be non-negative")
        self.num_vars = num_vars
        clean: dict[Exponent, Fraction] = {}
        if terms:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for exps, c in items:
                exps = tuple(int(e) for e in exps)
                if len(exps) != num_vars:
                    raise DimensionError(
                        f"exponent {exps} has length {len(exps)}, expected {num_vars}")
                if any(e < 0 for e in exps):
                    raise ValueError(f"negative exponent in {exps}")
                c = _as_fraction(c)
                if c:
                    c = clean.get(exps, 0) + c
                    if c:
                        clean[exps] = c
                    else:
                        clean.pop(exps, None)
        self.terms = clean
        self._hash = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, num_vars: int) -> "Polynomial":
        return cls(num_vars)

    @classmethod
    def constant(cls, c, num_vars: int) -> "Polynomial":
        return cls(num_vars, {(0,) * num_vars: c})

    @classmethod
    def variable(cls, index: int, num_vars: int) -> "Polynomial":
        if not 0 <= index < num_vars:
            raise DimensionError(f"variable index {index} out of range for {num_vars} vars")
        e = [0] * num_vars
        e[index] = 1
        return cls(num_vars, {tuple(e): 1})

    @classmethod
    def _raw(cls, num_vars: int, terms: dict[Exponent, Fraction]) -> "Polynomial":
        # caller guarantees nonzero Fraction coefficients and valid exponents
        p = cls.__new__(cls)
        p.num_vars = num_vars
        p.terms = terms
        p._hash = None
        return p

    # -- basic properties -------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    @property
    def order(self) -> int:
        """Lowest total degree of a term; ``-1`` for the zero polynomial."""
        return min((sum(e) for e in self.terms), default=-1)

    def coefficient(self, exps: Exponent) -> Fraction:
        return self.terms.get(tuple(exps), Fraction(0))

    def coefficient_scale(self) -> Fraction:
        """Largest absolute coefficient (0 for the zero polynomial)."""
        return max((abs(c) for c in self.terms.values()), default=Fraction(0))

    def homogeneous_part(self, deg: int) -> "Polynomial":
        return Polynomial._raw(self.num_vars,
                               {e: c for e, c in self.terms.items() if sum(e) == deg})

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.num_vars != self.num_vars:
                raise DimensionError(
                    f"mixing polynomials in {self.num_vars} and {other.num_vars} variables")
            return other
        if isinstance(other, (numbers.Rational, float, str)):
            return Polynomial.constant(other, self.num_vars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Polynomial._raw(self.num_vars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.num_vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (numbers.Rational, float, str)) and not isinstance(other, Polynomial):
            c = _as_fraction(other)
            if not c:
                return Polynomial.zero(self.num_vars)
            return Polynomial._raw(self.num_vars, {e: v * c for e, v in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Polynomial._raw(self.num_vars, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            return self.exact_div(other)
        c = _as_fraction(other)
        if not c:
            raise ZeroDivisionError("polynomial division by zero")
        return self * (1 / c)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Polynomial.constant(1, self.num_vars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.num_vars == other.num_vars and self.terms == other.terms
        if isinstance(other, (numbers.Rational, float)):
            return self.terms == Polynomial.constant(other, self.num_vars).terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num_vars, frozenset(self.terms.items())))
        return self._hash

    # -- calculus and substitution ---------------------------------------
    def diff(self, j: int) -> "Polynomial":
        if not 0 <= j < self.num_vars:
            raise DimensionError(f"variable index {j} out of range")
        out = {}
        for e, c in self.terms.items():
            if e[j]:
                ne = e[:j] + (e[j] - 1,) + e[j + 1:]
                out[ne] = c * e[j]
        return Polynomial._raw(self.num_vars, out)

    def evaluate(self, point: Sequence):
        """Evaluate at ``point``.

        Rational (int/Fraction) input gives an exact Fraction.  If any
        coordinate is a float the value is computed exactly from the binary
        values of the inputs and rounded once, so the result is correctly
        rounded.
        """
        if len(point) != self.num_vars:
            raise DimensionError(
                f"point has {len(point)} coordinates, polynomial has {self.num_vars} vars")
        floating = any(isinstance(v, float) for v in point)
        pt = [_as_fraction(v) for v in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            term = c
            for v, k in zip(pt, e):
                if k:
                    term *= v ** k
            total += term
        return float(total) if floating else total

    __call__ = evaluate

    def embed(self, num_vars: int, positions: Sequence[int]) -> "Polynomial":
        """Rename variable ``i`` to ``positions[i]`` in a ring of ``num_vars`` variables."""
        if len(positions) != self.num_vars:
            raise DimensionError("positions must list one target per variable")
        out = {}
        for e, c in self.terms.items():
            ne = [0] * num_vars
            for k, p in zip(e, positions):
                ne[p] += k
            ne = tuple(ne)
            out[ne] = out.get(ne, 0) + c
        return Polynomial(num_vars, out)

    def compose(self, subs: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute ``subs[i]`` for variable ``i``; all ``subs`` share a ring."""
        if len(subs) != self.num_vars:
            raise DimensionError("need one substitution per variable")
        if not subs:
            raise DimensionError("cannot compose a 0-variable polynomial")
        nv = subs[0].num_vars
        for s in subs:
            if s.num_vars != nv:
                raise DimensionError("substitutions live in different rings")
        cache: dict[tuple[int, int], Polynomial] = {}

        def power(i, k):
            key = (i, k)
            if key not in cache:
                cache[key] = subs[i] ** k
            return cache[key]

        total: dict[Exponent, Fraction] = {}
        for e, c in self.terms.items():
            term = Polynomial.constant(c, nv)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            for te, tc in term.terms.items():
                s = total.get(te, 0) + tc
                if s:
                    total[te] = s
                else:
                    total.pop(te, None)
        return Polynomial._raw(nv, total)

    def specialize(self, values: Mapping[int, object]) -> "Polynomial":
        """Fix the variables in ``values`` to rational constants and drop them."""
        keep = [i for i in range(self.num_vars) if i not in values]
        vals = {i: _as_fraction(v) for i, v in values.items()}
        out: dict[Exponent, Fraction] = {}
        for e, c in self.terms.items():
            for i, v in vals.items():
                if e[i]:
                    c = c * v ** e[i]
            if not c:
                continue
            ne = tuple(e[i] for i in keep)
            s = out.get(ne, 0) + c
            if s:
                out[ne] = s
            else:
                out.pop(ne, None)
        return Polynomial._raw(len(keep), out)

    def exact_div(self, divisor: "Polynomial") -> "Polynomial":
        """Exact quotient ``self / divisor``; raises ``ValueError`` on a remainder.

        Multivariate long division with respect to the lexicographic order.
        When the division is exact, every leading term of the running
        remainder is divisible by the leading term of the divisor.
        """
        divisor = self._coerce(divisor)
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        lead_e = max(divisor.terms)
        lead_c = divisor.terms[lead_e]
        rem = dict(self.terms)
        quot: dict[Exponent, Fraction] = {}
        while rem:
            e = max(rem)
            c = rem[e]
            if any(a < b for a, b in zip(e, lead_e)):
                raise ValueError("polynomial division is not exact")
            qe = tuple(a - b for a, b in zip(e, lead_e))
            qc = c / lead_c
            quot[qe] = quot.get(qe, 0) + qc
            for de, dc in divisor.terms.items():
                te = tuple(a + b for a, b in zip(qe, de))
                s = rem.get(te, 0) - qc * dc
                if s:
                    rem[te] = s
                else:
                    rem.pop(te, None)
        return Polynomial(self.num_vars, quot)

    # -- display ----------------------------------------------------------
    def to_string(self, names: Sequence[str] | None = None) -> str:
        if not self.terms:
            return "0"
        names = names or [f"x{i + 1}" for i in range(self.num_vars)]
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"Polynomial({self.to_string()})"


def variables(num_vars: int) -> list[Polynomial]:
    """The coordinate functions ``x_1, ..., x_num_vars``."""
    return [Polynomial.variable(i, num_vars) for i in range(num_vars)]


@dataclass(frozen=True, eq=True)
class PolynomialMap:
    """A polynomial map ``R^domain_dim -> R^len(components)``."""

    domain_dim: int
    components: tuple[Polynomial, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if self.domain_dim <= 0:
            raise DimensionError("domain_dim must be positive")
        for i, c in enumerate(comps):
            if c.num_vars != self.domain_dim:
                raise DimensionError(
                    f"component {i} has {c.num_vars} vars, map has domain_dim {self.domain_dim}")

    @classmethod
    def from_polys(cls, polys: Sequence[Polynomial]) -> "PolynomialMap":
        if not polys:
            raise DimensionError("a map needs at least one component")
        return cls(polys[0].num_vars, tuple(polys))

    @property
    def codomain_dim(self) -> int:
        return len(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __call__(self, point):
        return eval_map(self, point)

    def compose(self, subs: Sequence[Polynomial]) -> "PolynomialMap":
        return PolynomialMap.from_polys([c.compose(subs) for c in self.components])

    def compose_linear(self, matrix) -> "PolynomialMap":
        """Precompose with the linear map ``x -> A x`` (``A`` rational, square)."""
        n = self.domain_dim
        xs = variables(n)
        subs = []
        for i in range(n):
            row = matrix[i]
            p = Polynomial.zero(n)
            for j in range(n):
                if row[j]:
                    p = p + xs[j] * _as_fraction(row[j])
            subs.append(p)
        return self.compose(subs)

    def specialize(self, values: Mapping[int, object]) -> "PolynomialMap":
        return PolynomialMap.from_polys([c.specialize(values) for c in self.components])

    def scale_component(self, index: int, factor) -> "PolynomialMap":
        comps = list(self.components)
        comps[index] = comps[index] * _as_fraction(factor)
        return PolynomialMap(self.domain_dim, tuple(comps))

    @functools.cached_property
    def compiled(self):
        """Floating-point evaluator (see :mod:`sphereimm.kernels`)."""
        from .kernels import CompiledMap
        return CompiledMap.from_map(self)


@dataclass(frozen=True, eq=True)
class PolyMatrix:
    """Row-major matrix of polynomials sharing one ring."""

    rows: int
    cols: int
    entries: tuple[Polynomial, ...]

    def __post_init__(self):
        ents = tuple(self.entries)
        object.__setattr__(self, "entries", ents)
        if self.rows <= 0 or self.cols <= 0:
            raise DimensionError("matrix dimensions must be positive")
        if len(ents) != self.rows * self.cols:
            raise DimensionError(
                f"{len(ents)} entries for a {self.rows}x{self.cols} matrix")
        nv = {e.num_vars for e in ents}
        if len(nv) > 1:
            raise DimensionError("matrix entries live in different rings")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Polynomial]]) -> "PolyMatrix":
        r = len(rows)
        c = len(rows[0]) if r else 0
        if any(len(row) != c for row in rows):
            raise DimensionError("ragged rows")
        return cls(r, c, tuple(e for row in rows for e in row))

    @property
    def num_vars(self) -> int:
        return self.entries[0].num_vars

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i) -> tuple[Polynomial, ...]:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def to_rows(self) -> list[list[Polynomial]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "PolyMatrix":
        return PolyMatrix(len(rows), len(cols),
                          tuple(self[i, j] for i in rows for j in cols))

    def map_entries(self, fn) -> "PolyMatrix":
        return PolyMatrix(self.rows, self.cols, tuple(fn(e) for e in self.entries))

    def evaluate(self, point) -> list[list]:
        return [[e.evaluate(point) for e in self.row(i)] for i in range(self.rows)]

    def det(self) -> Polynomial:
        return determinant(self.to_rows())


# -- evaluation / differentiation -------------------------------------------

def eval_map(m: PolynomialMap, point: Sequence) -> list:
    """Evaluate every component of ``m`` at ``point`` (exact or correctly rounded)."""
    if len(point) != m.domain_dim:
        raise DimensionError(
            f"point has {len(point)} coordinates, map expects {m.domain_dim}")
    return [c.evaluate(point) for c in m.components]


def jacobian(m: PolynomialMap) -> PolyMatrix:
    """Matrix of partial derivatives, entry ``(i, j) = d m_i / d x_j``."""
    return PolyMatrix(m.codomain_dim, m.domain_dim,
                      tuple(c.diff(j) for c in m.components for j in range(m.domain_dim)))


# -- determinants -------------------------------------------------------------

def _cofactor_det(a: list[list[Polynomial]]) -> Polynomial:
    n = len(a)
    if n == 1:
        return a[0][0]
    if n == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    nv = a[0][0].num_vars
    total = Polynomial.zero(nv)
    for j in range(n):
        if a[0][j].is_zero():
            continue
        sub = [row[:j] + row[j + 1:] for row in a[1:]]
        term = a[0][j] * _cofactor_det(sub)
        total = total + term if j % 2 == 0 else total - term
    return total


def _bareiss_det(a: list[list[Polynomial]]) -> Polynomial:
    m = [list(row) for row in a]
    n = len(m)
    nv = m[0][0].num_vars
    sign = 1
    prev = Polynomial.constant(1, nv)
    for k in range(n - 1):
        if m[k][k].is_zero():
            swap = next((i for i in range(k + 1, n) if not m[i][k].is_zero()), None)
            if swap is None:
                return Polynomial.zero(nv)
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * m[k][k] - m[i][k] * m[k][j]
                m[i][j] = num.exact_div(prev)
        prev = m[k][k]
    d = m[n - 1][n - 1]
    return d if sign > 0 else -d


def determinant(rows: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Exact determinant: cofactor expansion up to 4x4, fraction-free Bareiss above."""
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise DimensionError("determinant needs a non-empty square matrix")
    rows = [list(r) for r in rows]
    if n <= 4:
        return _cofactor_det(rows)
    return _bareiss_det(rows)


def minors(a: PolyMatrix, k: int) -> list[Polynomial]:
    """All ``k x k`` minors, ordered lexicographically by (row set, column set)."""
    if not 1 <= k <= min(a.rows, a.cols):
        raise DimensionError(f"minor size {k} out of range for {a.rows}x{a.cols} matrix")
    out = []
    for rs in itertools.combinations(range(a.rows), k):
        for cs in itertools.combinations(range(a.cols), k):
            out.append(a.submatrix(rs, cs).det())
    return out


# -- telescoping decomposition -------------------------------------------------

def telescoping_decomposition(g: PolynomialMap) -> PolyMatrix:
    """Difference quotients ``h_ij(x, y)`` with ``g_i(x)-g_i(y) = sum_j h_ij (x_j-y_j)``.

    ``h_ij`` is the divided difference in the ``j``-th slot of
    ``g_i(y_1..y_{j-1}, ., x_{j+1}..x_n)``.  The result lives in ``2n``
    variables ordered ``(x_1..x_n, y_1..y_n)``; on the diagonal ``x = y``
    it reduces to the Jacobian.
    """
    n = g.domain_dim
    nv = 2 * n
    big = variables(nv)
    xs, ys = big[:n], big[n:]
    entries = []
    for comp in g.components:
        for j in range(n):
            left = comp.compose(ys[:j] + xs[j:])
            right = comp.compose(ys[:j + 1] + xs[j + 1:])
            entries.append((left - right).exact_div(xs[j] - ys[j]))
    return PolyMatrix(g.codomain_dim, n, tuple(entries))


def w_minors(h: PolyMatrix) -> list[Polynomial]:
    """Maximal minors of the ``(2n+1) x (n+1)`` difference-quotient matrix.

    One determinant per row subset of size ``n+1``, in lexicographic order.
    """
    cols = h.cols
    if h.rows != 2 * (cols - 1) + 1:
        raise DimensionError(
            f"expected a (2n+1)x(n+1) matrix, got {h.rows}x{h.cols}")
    return [h.submatrix(rs, range(cols)).det()
            for rs in itertools.combinations(range(h.rows), cols)]


def sum_of_squares(num_vars: int) -> Polynomial:
    """``omega(x) = x_1^2 + ... + x_n^2``."""
    return sum((v * v for v in variables(num_vars)), Polynomial.zero(num_vars))


def augmented_map(g: PolynomialMap) -> PolynomialMap:
    """``(g_1, ..., g_k, omega)``: the map whose Jacobian tests immersion on spheres."""
    return PolynomialMap(g.domain_dim, g.components + (sum_of_squares(g.domain_dim),))


def diagonal(p: Polynomial) -> Polynomial:
    """Restrict a polynomial in ``(x, y)`` to the diagonal ``y = x``."""
    if p.num_vars % 2:
        raise DimensionError("diagonal restriction needs an even number of variables")
    n = p.num_vars // 2
    return p.embed(n, list(range(n)) * 2)
