"""The read-once oblivious branching-program model.

An instance is a layered product of matrix polynomials over pairwise
disjoint variable blocks, contracted on both sides by boundary vectors of
scalar polynomials (constant vectors being the degree-0 special case).  The
scalar polynomial computed is left^T (prod layers) right.

`expand` is the brute-force oracle used throughout the test suites; its term
ceiling keeps oracle use deliberate.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

from .algebra import (
    Field,
    MatPoly,
    Monomial,
    ScalarPoly,
    UniPoly,
    mono_zero,
    uni_interpolate,
)
from .errors import CapabilityError, ModulusTooSmallError, StructuralError
from .kron import WeightFn

EXPAND_CEILING = 10**6
SYMBOLIC_SUBSTITUTE_CEILING = 10**5


@dataclass(frozen=True)
class PointSet:
    """Evaluation points plus a provenance record (generator and parameters).

    Duplicates are permitted; the exact-size count formulas of the
    generators are part of their contracts.
    """

    n: int
    points: tuple
    provenance: dict = dc_field(default_factory=dict)

    def __post_init__(self) -> None:
        pts = tuple(tuple(v for v in pt) for pt in self.points)
        for pt in pts:
            if len(pt) != self.n:
                raise StructuralError(f"point {pt} has length {len(pt)}, ambient is {self.n}")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


@dataclass(frozen=True)
class Roabp:
    """Width-w layered matrix product over ordered disjoint variable blocks.

    `left_block`/`right_block` are the (possibly empty) boundary blocks; the
    boundary vectors are scalar polynomials supported only on them.
    """

    field: Field
    n: int
    width: int
    blocks: tuple
    layers: tuple
    left_boundary: tuple
    right_boundary: tuple
    left_block: tuple = ()
    right_block: tuple = ()

    def __post_init__(self) -> None:
        blocks = tuple(tuple(b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "left_block", tuple(self.left_block))
        object.__setattr__(self, "right_block", tuple(self.right_block))
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "left_boundary", tuple(self.left_boundary))
        object.__setattr__(self, "right_boundary", tuple(self.right_boundary))
        if len(self.layers) != len(blocks):
            raise StructuralError("one layer per block required")
        seen: dict[int, int] = {}
        for idx, blk in enumerate([self.left_block, *blocks, self.right_block]):
            for v in blk:
                if not 0 <= v < self.n:
                    raise StructuralError(f"variable {v} out of range")
                if v in seen:
                    raise StructuralError(
                        f"blocks not disjoint: variable {v} in blocks {seen[v]} and {idx}"
                    )
                seen[v] = idx
        for i, (blk, layer) in enumerate(zip(blocks, self.layers)):
            if layer.field != self.field or layer.n != self.n or layer.w != self.width:
                raise StructuralError(f"layer {i} has mismatched field/ambient/width")
            if not layer.support_vars() <= set(blk):
                raise StructuralError(f"layer {i} uses variables outside its block")
        if len(self.left_boundary) != self.width or len(self.right_boundary) != self.width:
            raise StructuralError("boundary vectors must have length w")
        for side, blk, vec in (
            ("left", self.left_block, self.left_boundary),
            ("right", self.right_block, self.right_boundary),
        ):
            for poly in vec:
                if poly.field != self.field or poly.n != self.n:
                    raise StructuralError(f"{side} boundary entry mismatched")
                if not poly.support_vars() <= set(blk):
                    raise StructuralError(f"{side} boundary uses variables outside its block")

    # ------------------------------------------------------------------
    @classmethod
    def with_constant_boundaries(
        cls,
        field: Field,
        n: int,
        blocks: Sequence[Sequence[int]],
        layers: Sequence[MatPoly],
        left: Sequence[int],
        right: Sequence[int],
    ) -> "Roabp":
        lb = tuple(ScalarPoly.const(field, n, v) for v in left)
        rb = tuple(ScalarPoly.const(field, n, v) for v in right)
        return cls(field, n, len(left), tuple(blocks), tuple(layers), lb, rb)

    # derived parameters -------------------------------------------------
    @property
    def d(self) -> int:
        return len(self.layers)

    @property
    def delta(self) -> int:
        degs = [layer.individual_degree() for layer in self.layers]
        degs += [p.individual_degree() for p in self.left_boundary]
        degs += [p.individual_degree() for p in self.right_boundary]
        return max(degs, default=0)

    @property
    def layer_sparsity(self) -> int:
        sps = [layer.sparsity for layer in self.layers]
        sps.append(sum(1 for _ in self._boundary_monomials(self.left_boundary)))
        sps.append(sum(1 for _ in self._boundary_monomials(self.right_boundary)))
        return max(sps, default=0)

    @property
    def layer_support(self) -> int:
        mus = [layer.max_support() for layer in self.layers]
        mus += [p.max_support() for p in self.left_boundary]
        mus += [p.max_support() for p in self.right_boundary]
        return max(mus, default=0)

    @staticmethod
    def _boundary_monomials(vec: Sequence[ScalarPoly]):
        monos: set[Monomial] = set()
        for poly in vec:
            monos.update(poly.terms)
        return monos

    def all_blocks(self) -> list[tuple[int, ...]]:
        """Boundary and interior blocks in layer order (left first)."""
        return [self.left_block, *self.blocks, self.right_block]

    def has_constant_boundaries(self) -> bool:
        return all(
            set(p.terms) <= {mono_zero(self.n)}
            for p in (*self.left_boundary, *self.right_boundary)
        )

    def boundary_vectors(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if not self.has_constant_boundaries():
            raise StructuralError("boundaries are not constant vectors")
        zero = mono_zero(self.n)
        return (
            tuple(p.coeff(zero) for p in self.left_boundary),
            tuple(p.coeff(zero) for p in self.right_boundary),
        )

    def permuted(self, order: Sequence[int]) -> "Roabp":
        """The instance with its interior blocks re-ordered (a different
        polynomial in general; used by order-obliviousness tests)."""
        if sorted(order) != list(range(self.d)):
            raise StructuralError("order must permute the interior layers")
        return Roabp(
            self.field,
            self.n,
            self.width,
            tuple(self.blocks[i] for i in order),
            tuple(self.layers[i] for i in order),
            self.left_boundary,
            self.right_boundary,
            self.left_block,
            self.right_block,
        )

    def shift(self, offsets: Sequence[int]) -> "Roabp":
        """Substitute x_i -> x_i + offsets[i] in every layer and boundary."""
        return Roabp(
            self.field,
            self.n,
            self.width,
            self.blocks,
            tuple(layer.shift(offsets) for layer in self.layers),
            tuple(p.shift(offsets) for p in self.left_boundary),
            tuple(p.shift(offsets) for p in self.right_boundary),
            self.left_block,
            self.right_block,
        )

    # evaluation -----------------------------------------------------------
    def evaluate(self, point: Sequence[int]) -> int:
        """left(point)^T (prod layers(point)) right(point)."""
        if len(point) != self.n:
            raise StructuralError(f"point length {len(point)} != ambient {self.n}")
        p = self.field.p
        vec = [poly.eval_at(point) for poly in self.left_boundary]
        for layer in self.layers:
            mat = layer.eval_at(point)
            vec = [
                sum(vec[i] * mat[i][j] for i in range(self.width) if vec[i]) % p
                for j in range(self.width)
            ]
        right = [poly.eval_at(point) for poly in self.right_boundary]
        return sum(a * b for a, b in zip(vec, right)) % p

    def expansion_estimate(self) -> int:
        est = 1
        for layer in self.layers:
            est *= layer.sparsity
        est *= max(1, len(self._boundary_monomials(self.left_boundary)))
        est *= max(1, len(self._boundary_monomials(self.right_boundary)))
        return est

    def expand(self, ceiling: int = EXPAND_CEILING) -> tuple[MatPoly, ScalarPoly]:
        """Brute-force oracle: the expanded matrix product and the
        boundary-contracted scalar polynomial."""
        est = self.expansion_estimate()
        if est > ceiling:
            raise CapabilityError(
                f"expansion estimate {est} exceeds the ceiling {ceiling}"
            )
        if self.width == 0:
            return MatPoly.zero(self.field, self.n, 0), ScalarPoly.zero(self.field, self.n)
        matrix_part = MatPoly.identity(self.field, self.n, self.width)
        for layer in self.layers:
            matrix_part = matrix_part * layer
        scalar_part = ScalarPoly.zero(self.field, self.n)
        for i in range(self.width):
            li = self.left_boundary[i]
            if li.is_zero():
                continue
            for j in range(self.width):
                rj = self.right_boundary[j]
                if rj.is_zero():
                    continue
                entry = matrix_part.entry(i, j)
                if not entry.is_zero():
                    scalar_part = scalar_part + li * entry * rj
        return matrix_part, scalar_part

    def weighted_substitute(
        self,
        wfn: WeightFn,
        symbolic_ceiling: int = SYMBOLIC_SUBSTITUTE_CEILING,
        expand_ceiling: int = EXPAND_CEILING,
    ) -> UniPoly:
        """The univariate image of the computed polynomial under
        x_i -> t^(w(x_i)).

        Uses direct symbolic substitution when the instance is cheap to
        expand; otherwise interpolates from 1 + n*delta*max_weight distinct
        field points, which requires the modulus to exceed that degree.
        """
        if wfn.n != self.n:
            raise StructuralError("weight function ambient mismatch")
        if self.expansion_estimate() <= symbolic_ceiling:
            _, scalar = self.expand(expand_ceiling)
            acc: dict[int, int] = {}
            p = self.field.p
            for e, c in scalar.terms.items():
                t_exp = wfn.monomial_weight(e)
                s = (acc.get(t_exp, 0) + c) % p
                if s:
                    acc[t_exp] = s
                else:
                    acc.pop(t_exp, None)
            return UniPoly.from_dict(self.field, acc)
        degree = self.n * self.delta * wfn.max_weight
        if self.field.p <= degree:
            raise ModulusTooSmallError(
                f"interpolation needs {degree + 1} distinct points, "
                f"modulus {self.field.p} is too small"
            )
        p = self.field.p
        xs = list(range(degree + 1))
        ys = [
            self.evaluate([pow(t, wfn.of(v), p) for v in range(self.n)])
            for t in xs
        ]
        return uni_interpolate(xs, ys, self.field)


def evaluate(r: Roabp, point: Sequence[int]) -> int:
    return r.evaluate(point)


def expand(r: Roabp, ceiling: int = EXPAND_CEILING) -> tuple[MatPoly, ScalarPoly]:
    return r.expand(ceiling)


def weighted_substitute(r: Roabp, wfn: WeightFn) -> UniPoly:
    return r.weighted_substitute(wfn)
