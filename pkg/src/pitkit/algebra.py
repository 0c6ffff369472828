"""Exact arithmetic over a prime field.

Scalars are canonical residues in [0, p).  Matrices are immutable tuples of
row tuples.  Multivariate polynomials are sparse maps from dense exponent
tuples (length n, one entry per variable) to nonzero scalar or matrix
coefficients.  Everything here is pure and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iter_product
from typing import Iterator, Mapping, Sequence

from .errors import CapabilityError, StructuralError

Monomial = tuple[int, ...]
Matrix = tuple[tuple[int, ...], ...]

DEFAULT_MODULUS = 10007

DET_WIDTH_LIMIT = 4
DET_TERM_CEILING = 10**6


def is_prime(m: int) -> bool:
    if m < 2:
        return False
    if m < 4:
        return True
    if m % 2 == 0:
        return False
    f = 3
    while f * f <= m:
        if m % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class Field:
    """The prime field GF(p).  Requires p prime and p > 2."""

    p: int

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise StructuralError(f"modulus {self.p} is not prime")
        if self.p <= 2:
            raise StructuralError(f"modulus {self.p} too small; need p > 2")

    def normalize(self, a: int) -> int:
        return a % self.p

    def inv(self, a: int) -> int:
        """Inverse of a nonzero residue by the extended Euclidean algorithm."""
        a %= self.p
        if a == 0:
            raise StructuralError("0 has no inverse")
        r0, r1 = self.p, a
        s0, s1 = 0, 1
        while r1:
            q = r0 // r1
            r0, r1 = r1, r0 - q * r1
            s0, s1 = s1, s0 - q * s1
        return s0 % self.p


# ---------------------------------------------------------------------------
# monomials


def mono_zero(n: int) -> Monomial:
    return (0,) * n


def mono_mul(e1: Monomial, e2: Monomial) -> Monomial:
    return tuple(a + b for a, b in zip(e1, e2))


def mono_support(e: Monomial) -> tuple[int, ...]:
    return tuple(i for i, v in enumerate(e) if v)


def mono_support_size(e: Monomial) -> int:
    return sum(1 for v in e if v)


def monomials_up_to(n: int, delta: int, max_support: int | None = None) -> Iterator[Monomial]:
    """All exponent vectors with individual degree <= delta, optionally with
    bounded support size.  Enumeration order is deterministic."""
    if max_support is None or max_support >= n:
        yield from iter_product(range(delta + 1), repeat=n)
        return
    from itertools import combinations

    yield mono_zero(n)
    for size in range(1, max_support + 1):
        for supp in combinations(range(n), size):
            for exps in iter_product(range(1, delta + 1), repeat=size):
                e = [0] * n
                for i, v in zip(supp, exps):
                    e[i] = v
                yield tuple(e)


# ---------------------------------------------------------------------------
# matrices (tuples of row tuples, residues)


def mat_zero(w: int) -> Matrix:
    return tuple((0,) * w for _ in range(w))


def mat_identity(w: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(w)) for i in range(w))


def mat_normalize(rows: Sequence[Sequence[int]], field: Field) -> Matrix:
    return tuple(tuple(field.normalize(v) for v in row) for row in rows)


def mat_add(a: Matrix, b: Matrix, field: Field) -> Matrix:
    p = field.p
    return tuple(tuple((x + y) % p for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(a: Matrix, c: int, field: Field) -> Matrix:
    p = field.p
    c %= p
    return tuple(tuple((x * c) % p for x in row) for row in a)


def mat_mul(a: Matrix, b: Matrix, field: Field) -> Matrix:
    """Matrix product, skipping zero entries (lane matrices are very sparse)."""
    p = field.p
    w = len(a)
    out = [[0] * w for _ in range(w)]
    for i in range(w):
        row = a[i]
        acc = out[i]
        for k in range(w):
            aik = row[k]
            if aik:
                brow = b[k]
                for j in range(w):
                    bkj = brow[j]
                    if bkj:
                        acc[j] = (acc[j] + aik * bkj) % p
    return tuple(tuple(r) for r in out)


def mat_is_zero(a: Matrix) -> bool:
    return all(all(v == 0 for v in row) for row in a)


def mat_flatten(a: Matrix) -> tuple[int, ...]:
    return tuple(v for row in a for v in row)


def mat_det(a: Matrix, field: Field) -> int:
    """Numeric determinant by Gaussian elimination over GF(p)."""
    p = field.p
    w = len(a)
    m = [list(row) for row in a]
    det = 1
    for col in range(w):
        pivot = next((r for r in range(col, w) if m[r][col]), None)
        if pivot is None:
            return 0
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = (-det) % p
        inv = field.inv(m[col][col])
        det = (det * m[col][col]) % p
        for r in range(col + 1, w):
            if m[r][col]:
                factor = (m[r][col] * inv) % p
                m[r] = [(x - factor * y) % p for x, y in zip(m[r], m[col])]
    return det


# ---------------------------------------------------------------------------
# row spans and rank


class RowSpan:
    """Incremental row space over GF(p), kept in reduced echelon form."""

    def __init__(self, field: Field):
        self.field = field
        self.rows: dict[int, tuple[int, ...]] = {}

    def _reduce(self, vec: Sequence[int]) -> list[int]:
        p = self.field.p
        v = [x % p for x in vec]
        for pivot, row in self.rows.items():
            c = v[pivot]
            if c:
                v = [(x - c * y) % p for x, y in zip(v, row)]
        return v

    def contains(self, vec: Sequence[int]) -> bool:
        return not any(self._reduce(vec))

    def add(self, vec: Sequence[int]) -> bool:
        """Add vec to the span.  Returns True iff it was independent."""
        v = self._reduce(vec)
        pivot = next((i for i, x in enumerate(v) if x), None)
        if pivot is None:
            return False
        inv = self.field.inv(v[pivot])
        p = self.field.p
        self.rows[pivot] = tuple((x * inv) % p for x in v)
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)


def rank_over_field(vectors: Sequence[Sequence[int]], field: Field) -> int:
    """Dimension of the span of the given vectors over GF(p).

    Deterministic, permutation-invariant; an empty list has rank 0.
    """
    if not vectors:
        return 0
    k = len(vectors[0])
    for v in vectors:
        if len(v) != k:
            raise StructuralError(
                f"ragged input: expected vectors of length {k}, got {len(v)}"
            )
    span = RowSpan(field)
    for v in vectors:
        span.add(v)
    return span.rank


# ---------------------------------------------------------------------------
# sparse scalar polynomials


def _canonical_terms(
    terms: Mapping[Monomial, int], n: int, field: Field
) -> dict[Monomial, int]:
    out: dict[Monomial, int] = {}
    for e, c in terms.items():
        if len(e) != n:
            raise StructuralError(f"exponent {e} has length {len(e)}, ambient is {n}")
        if any(v < 0 for v in e):
            raise StructuralError(f"negative exponent in {e}")
        c = field.normalize(c)
        if c:
            out[tuple(e)] = c
    return out


@dataclass(frozen=True)
class ScalarPoly:
    """Sparse polynomial in n variables with GF(p) coefficients.

    No zero coefficients are stored; treat instances as immutable.
    """

    field: Field
    n: int
    terms: dict

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", _canonical_terms(self.terms, self.n, self.field))

    # constructors ---------------------------------------------------------
    @classmethod
    def zero(cls, field: Field, n: int) -> "ScalarPoly":
        return cls(field, n, {})

    @classmethod
    def const(cls, field: Field, n: int, value: int) -> "ScalarPoly":
        return cls(field, n, {mono_zero(n): value})

    @classmethod
    def variable(cls, field: Field, n: int, index: int) -> "ScalarPoly":
        if not 0 <= index < n:
            raise StructuralError(f"variable index {index} out of range for n={n}")
        e = [0] * n
        e[index] = 1
        return cls(field, n, {tuple(e): 1})

    # queries --------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def sparsity(self) -> int:
        return len(self.terms)

    def individual_degree(self) -> int:
        return max((max(e) for e in self.terms), default=0)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def max_support(self) -> int:
        return max((mono_support_size(e) for e in self.terms), default=0)

    def support_vars(self) -> frozenset[int]:
        out: set[int] = set()
        for e in self.terms:
            out.update(mono_support(e))
        return frozenset(out)

    def coeff(self, e: Monomial) -> int:
        return self.terms.get(tuple(e), 0)

    # arithmetic -----------------------------------------------------------
    def _check_compatible(self, other: "ScalarPoly") -> None:
        if self.field != other.field or self.n != other.n:
            raise StructuralError("polynomial field/ambient mismatch")

    def __add__(self, other: "ScalarPoly") -> "ScalarPoly":
        self._check_compatible(other)
        out = dict(self.terms)
        p = self.field.p
        for e, c in other.terms.items():
            s = (out.get(e, 0) + c) % p
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return ScalarPoly(self.field, self.n, out)

    def __neg__(self) -> "ScalarPoly":
        p = self.field.p
        return ScalarPoly(self.field, self.n, {e: (-c) % p for e, c in self.terms.items()})

    def __sub__(self, other: "ScalarPoly") -> "ScalarPoly":
        return self + (-other)

    def __mul__(self, other: "ScalarPoly") -> "ScalarPoly":
        self._check_compatible(other)
        p = self.field.p
        out: dict[Monomial, int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = mono_mul(e1, e2)
                s = (out.get(e, 0) + c1 * c2) % p
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return ScalarPoly(self.field, self.n, out)

    def scale(self, c: int) -> "ScalarPoly":
        c = self.field.normalize(c)
        if c == 0:
            return ScalarPoly.zero(self.field, self.n)
        p = self.field.p
        return ScalarPoly(self.field, self.n, {e: (v * c) % p for e, v in self.terms.items()})

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ScalarPoly)
            and self.field == other.field
            and self.n == other.n
            and self.terms == other.terms
        )

    def eval_at(self, point: Sequence[int]) -> int:
        """Exact evaluation by per-term power products."""
        if len(point) != self.n:
            raise StructuralError(f"point length {len(point)} != ambient {self.n}")
        p = self.field.p
        pt = [v % p for v in point]
        total = 0
        for e, c in self.terms.items():
            v = c
            for i, exp in enumerate(e):
                if exp:
                    v = (v * pow(pt[i], exp, p)) % p
            total = (total + v) % p
        return total

    def shift(self, offsets: Sequence[int]) -> "ScalarPoly":
        """Substitute x_i -> x_i + offsets[i] for every variable."""
        if len(offsets) != self.n:
            raise StructuralError("offset length mismatch")
        p = self.field.p
        offs = [v % p for v in offsets]
        out: dict[Monomial, int] = {}
        for e, c in self.terms.items():
            expansions: list[list[tuple[int, int]]] = []
            for i, exp in enumerate(e):
                if exp == 0:
                    expansions.append([(0, 1)])
                elif offs[i] == 0:
                    expansions.append([(exp, 1)])
                else:
                    opts = []
                    for f in range(exp + 1):
                        coef = (math.comb(exp, f) * pow(offs[i], exp - f, p)) % p
                        opts.append((f, coef))
                    expansions.append(opts)
            for combo in iter_product(*expansions):
                new_e = tuple(f for f, _ in combo)
                coef = c
                for _, w in combo:
                    coef = (coef * w) % p
                if coef:
                    s = (out.get(new_e, 0) + coef) % p
                    if s:
                        out[new_e] = s
                    else:
                        out.pop(new_e, None)
        return ScalarPoly(self.field, self.n, out)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"ScalarPoly(n={self.n}, terms={len(self.terms)})"


# ---------------------------------------------------------------------------
# matrix-coefficient polynomials


def _canonical_mat_terms(
    terms: Mapping[Monomial, Matrix], n: int, w: int, field: Field
) -> dict[Monomial, Matrix]:
    out: dict[Monomial, Matrix] = {}
    for e, m in terms.items():
        if len(e) != n:
            raise StructuralError(f"exponent {e} has length {len(e)}, ambient is {n}")
        if len(m) != w or any(len(row) != w for row in m):
            raise StructuralError(f"coefficient of {e} is not {w}x{w}")
        mm = mat_normalize(m, field)
        if not mat_is_zero(mm):
            out[tuple(e)] = mm
    return out


@dataclass(frozen=True)
class MatPoly:
    """Sparse polynomial in n variables with w-by-w matrix coefficients."""

    field: Field
    n: int
    w: int
    terms: dict

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "terms", _canonical_mat_terms(self.terms, self.n, self.w, self.field)
        )

    @classmethod
    def zero(cls, field: Field, n: int, w: int) -> "MatPoly":
        return cls(field, n, w, {})

    @classmethod
    def constant(cls, field: Field, n: int, matrix: Sequence[Sequence[int]]) -> "MatPoly":
        return cls(field, n, len(matrix), {mono_zero(n): tuple(tuple(r) for r in matrix)})

    @classmethod
    def identity(cls, field: Field, n: int, w: int) -> "MatPoly":
        return cls.constant(field, n, mat_identity(w))

    @classmethod
    def from_entries(cls, grid: Sequence[Sequence[ScalarPoly]]) -> "MatPoly":
        """Assemble from a square grid of scalar polynomials."""
        w = len(grid)
        if any(len(row) != w for row in grid):
            raise StructuralError("entry grid is not square")
        field = grid[0][0].field
        n = grid[0][0].n
        terms: dict[Monomial, list[list[int]]] = {}
        for i, row in enumerate(grid):
            for j, poly in enumerate(row):
                if poly.field != field or poly.n != n:
                    raise StructuralError("entry grid mixes fields or ambients")
                for e, c in poly.terms.items():
                    m = terms.setdefault(e, [[0] * w for _ in range(w)])
                    m[i][j] = c
        return cls(field, n, w, {e: tuple(tuple(r) for r in m) for e, m in terms.items()})

    # queries --------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def sparsity(self) -> int:
        return len(self.terms)

    def individual_degree(self) -> int:
        return max((max(e) for e in self.terms), default=0)

    def max_support(self) -> int:
        return max((mono_support_size(e) for e in self.terms), default=0)

    def support_vars(self) -> frozenset[int]:
        out: set[int] = set()
        for e in self.terms:
            out.update(mono_support(e))
        return frozenset(out)

    def coeff(self, e: Monomial) -> Matrix:
        return self.terms.get(tuple(e), mat_zero(self.w))

    def constant_term(self) -> Matrix:
        return self.coeff(mono_zero(self.n))

    def entry(self, i: int, j: int) -> ScalarPoly:
        terms = {e: m[i][j] for e, m in self.terms.items() if m[i][j]}
        return ScalarPoly(self.field, self.n, terms)

    def entry_grid(self) -> list[list[ScalarPoly]]:
        return [[self.entry(i, j) for j in range(self.w)] for i in range(self.w)]

    # arithmetic -----------------------------------------------------------
    def _check_compatible(self, other: "MatPoly") -> None:
        if self.field != other.field:
            raise StructuralError("modulus mismatch between matrix polynomials")
        if self.w != other.w:
            raise StructuralError(f"width mismatch: {self.w} vs {other.w}")
        if self.n != other.n:
            raise StructuralError("ambient variable count mismatch")

    def __add__(self, other: "MatPoly") -> "MatPoly":
        self._check_compatible(other)
        out = dict(self.terms)
        for e, m in other.terms.items():
            if e in out:
                s = mat_add(out[e], m, self.field)
                if mat_is_zero(s):
                    del out[e]
                else:
                    out[e] = s
            else:
                out[e] = m
        return MatPoly(self.field, self.n, self.w, out)

    def __mul__(self, other: "MatPoly") -> "MatPoly":
        self._check_compatible(other)
        out: dict[Monomial, Matrix] = {}
        for e1, m1 in self.terms.items():
            for e2, m2 in other.terms.items():
                e = mono_mul(e1, e2)
                prod = mat_mul(m1, m2, self.field)
                if e in out:
                    s = mat_add(out[e], prod, self.field)
                    if mat_is_zero(s):
                        del out[e]
                    else:
                        out[e] = s
                elif not mat_is_zero(prod):
                    out[e] = prod
        return MatPoly(self.field, self.n, self.w, out)

    def __neg__(self) -> "MatPoly":
        return self.scale(-1)

    def __sub__(self, other: "MatPoly") -> "MatPoly":
        return self + (-other)

    def scale(self, c: int) -> "MatPoly":
        c = self.field.normalize(c)
        if c == 0:
            return MatPoly.zero(self.field, self.n, self.w)
        return MatPoly(
            self.field, self.n, self.w,
            {e: mat_scale(m, c, self.field) for e, m in self.terms.items()},
        )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, MatPoly)
            and self.field == other.field
            and self.n == other.n
            and self.w == other.w
            and self.terms == other.terms
        )

    def eval_at(self, point: Sequence[int]) -> Matrix:
        if len(point) != self.n:
            raise StructuralError(f"point length {len(point)} != ambient {self.n}")
        p = self.field.p
        pt = [v % p for v in point]
        acc = [[0] * self.w for _ in range(self.w)]
        for e, m in self.terms.items():
            v = 1
            for i, exp in enumerate(e):
                if exp:
                    v = (v * pow(pt[i], exp, p)) % p
            if v:
                for i in range(self.w):
                    for j in range(self.w):
                        if m[i][j]:
                            acc[i][j] = (acc[i][j] + v * m[i][j]) % p
        return tuple(tuple(r) for r in acc)

    def shift(self, offsets: Sequence[int]) -> "MatPoly":
        """Substitute x_i -> x_i + offsets[i] entrywise."""
        grid = [
            [self.entry(i, j).shift(offsets) for j in range(self.w)]
            for i in range(self.w)
        ]
        return MatPoly.from_entries(grid)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"MatPoly(n={self.n}, w={self.w}, terms={len(self.terms)})"


def poly_mul(a: MatPoly, b: MatPoly) -> MatPoly:
    """Product of matrix polynomials; coefficient of x^e is the convolution
    sum of matrix products over e1 + e2 = e."""
    return a * b


def eval_poly(f: ScalarPoly | MatPoly, point: Sequence[int]):
    """Evaluate a scalar or matrix polynomial at a point."""
    return f.eval_at(point)


# ---------------------------------------------------------------------------
# symbolic determinant


def det_poly(
    grid: Sequence[Sequence[ScalarPoly]],
    width_limit: int = DET_WIDTH_LIMIT,
    term_ceiling: int = DET_TERM_CEILING,
) -> ScalarPoly:
    """Symbolic determinant of a square grid of scalar polynomials.

    Uses cofactor expansion, so the width is capped (default 4).  When the
    grid comes from a matrix polynomial with s monomials, the result's
    monomials are products of w of them, so its sparsity is at most s^w.
    """
    w = len(grid)
    if w == 0:
        raise StructuralError("empty grid")
    if any(len(row) != w for row in grid):
        raise StructuralError("grid is not square")
    if w > width_limit:
        raise CapabilityError(
            f"determinant width {w} exceeds the configured limit {width_limit}"
        )
    field = grid[0][0].field
    n = grid[0][0].n
    for row in grid:
        for entry in row:
            if entry.field != field or entry.n != n:
                raise StructuralError("grid mixes fields or ambients")

    def rec(rows: list[int], cols: list[int]) -> ScalarPoly:
        if len(rows) == 1:
            return grid[rows[0]][cols[0]]
        acc = ScalarPoly.zero(field, n)
        r = rows[0]
        rest = rows[1:]
        for k, c in enumerate(cols):
            entry = grid[r][c]
            if entry.is_zero():
                continue
            minor = rec(rest, cols[:k] + cols[k + 1:])
            term = entry * minor
            if k % 2:
                term = -term
            acc = acc + term
            if acc.sparsity > term_ceiling:
                raise CapabilityError(
                    f"determinant expansion exceeded {term_ceiling} terms"
                )
        return acc

    idx = list(range(w))
    return rec(idx, idx)


# ---------------------------------------------------------------------------
# univariate polynomials


@dataclass(frozen=True)
class UniPoly:
    """Univariate polynomial in a formal variable t, stored sparsely as
    sorted (exponent, coefficient) pairs with nonzero coefficients."""

    field: Field
    terms: tuple

    def __post_init__(self) -> None:
        clean = tuple(
            sorted((int(e), self.field.normalize(c)) for e, c in self.terms if self.field.normalize(c))
        )
        object.__setattr__(self, "terms", clean)

    @classmethod
    def zero(cls, field: Field) -> "UniPoly":
        return cls(field, ())

    @classmethod
    def from_dict(cls, field: Field, terms: Mapping[int, int]) -> "UniPoly":
        return cls(field, tuple(terms.items()))

    @classmethod
    def from_coefficients(cls, field: Field, coeffs: Sequence[int]) -> "UniPoly":
        """From an ascending dense coefficient list (trailing zeros trimmed)."""
        return cls(field, tuple((i, c) for i, c in enumerate(coeffs)))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return self.terms[-1][0] if self.terms else 0

    def coeff(self, e: int) -> int:
        for exp, c in self.terms:
            if exp == e:
                return c
        return 0

    def lowest_term(self) -> tuple[int, int] | None:
        """(exponent, coefficient) of the lowest-degree surviving term."""
        return self.terms[0] if self.terms else None

    def coefficient_list(self, limit: int = 10**6) -> list[int]:
        """Dense ascending coefficients; guarded against huge degrees."""
        if self.is_zero():
            return []
        d = self.degree()
        if d + 1 > limit:
            raise CapabilityError(f"degree {d} too large for a dense list")
        out = [0] * (d + 1)
        for e, c in self.terms:
            out[e] = c
        return out

    def eval_at(self, t: int) -> int:
        p = self.field.p
        t %= p
        return sum(c * pow(t, e, p) for e, c in self.terms) % p

    def __add__(self, other: "UniPoly") -> "UniPoly":
        if self.field != other.field:
            raise StructuralError("modulus mismatch")
        acc = dict(self.terms)
        p = self.field.p
        for e, c in other.terms:
            s = (acc.get(e, 0) + c) % p
            if s:
                acc[e] = s
            else:
                acc.pop(e, None)
        return UniPoly.from_dict(self.field, acc)


def uni_interpolate(xs: Sequence[int], ys: Sequence[int], field: Field) -> UniPoly:
    """Newton interpolation through (xs[i], ys[i]) with distinct nodes."""
    if len(xs) != len(ys):
        raise StructuralError("node/value length mismatch")
    if len(set(x % field.p for x in xs)) != len(xs):
        raise StructuralError("interpolation nodes must be distinct")
    p = field.p
    m = len(xs)
    xs = [x % p for x in xs]
    coef = [y % p for y in ys]
    for j in range(1, m):
        for i in range(m - 1, j - 1, -1):
            denom = (xs[i] - xs[i - j]) % p
            coef[i] = ((coef[i] - coef[i - 1]) * field.inv(denom)) % p
    # expand Newton form to the power basis
    dense = [0] * m
    for i in range(m - 1, -1, -1):
        # dense <- dense * (t - xs[i]) + coef[i]
        shifted = [0] + dense[:-1]
        dense = [(s - xs[i] * d) % p for s, d in zip(shifted, dense)]
        dense[0] = (dense[0] + coef[i]) % p
    return UniPoly.from_coefficients(field, dense)
