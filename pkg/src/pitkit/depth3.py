"""Multilinear depth-3 circuits, partition distance, and the reductions.

Each product gate of a multilinear depth-3 circuit induces a partition of
the variables (one color per linear form, absent variables padded as
singleton colors).  The distance of an ordered partition sequence measures
how far it is from a refinement chain: colors group into friendly
neighborhoods, the minimal color sets whose variable unions are exactly
partitioned by all upper partitions, and the distance is the largest
neighborhood size.  Distance-1 restrictions drive both the ROABP reduction
and the base-set decomposition behind the sum-of-set-multilinear test.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .algebra import Field, MatPoly, Monomial, ScalarPoly, mono_zero
from .errors import (
    CapabilityError,
    InternalInconsistencyError,
    PreconditionError,
    StructuralError,
)
from .roabp import Roabp

ORDER_SEARCH_LIMIT = 6
SWEEP_CEILING = 10**7


# ---------------------------------------------------------------------------
# circuits


@dataclass(frozen=True)
class LinearForm:
    """b0 + sum of b_r x_r, stored sparsely (residues, nonzero only)."""

    constant: int
    coeffs: dict

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "coeffs", {int(v): int(c) for v, c in self.coeffs.items() if int(c)}
        )

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.coeffs)

    def eval_at(self, point: Sequence[int], field: Field) -> int:
        total = self.constant
        for v, c in self.coeffs.items():
            total += c * point[v]
        return total % field.p

    def to_scalar_poly(self, field: Field, n: int) -> ScalarPoly:
        terms: dict[Monomial, int] = {mono_zero(n): self.constant}
        for v, c in self.coeffs.items():
            e = [0] * n
            e[v] = 1
            terms[tuple(e)] = c
        return ScalarPoly(field, n, terms)


@dataclass(frozen=True)
class Gate:
    scale: int
    forms: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "forms", tuple(self.forms))


@dataclass(frozen=True)
class Depth3Circuit:
    """Sum of product gates of linear forms; forms inside a gate must use
    pairwise disjoint variables (multilinearity)."""

    field: Field
    n: int
    gates: tuple

    def __post_init__(self) -> None:
        gates = []
        for g_idx, gate in enumerate(self.gates):
            seen: set[int] = set()
            for form in gate.forms:
                for v in form.support:
                    if not 0 <= v < self.n:
                        raise StructuralError(f"variable {v} out of range in gate {g_idx}")
                    if v in seen:
                        raise StructuralError(
                            f"gate {g_idx} is not multilinear: variable {v} repeats"
                        )
                    seen.add(v)
            gates.append(
                Gate(
                    self.field.normalize(gate.scale),
                    tuple(
                        LinearForm(
                            self.field.normalize(f.constant),
                            {v: self.field.normalize(c) for v, c in f.coeffs.items()},
                        )
                        for f in gate.forms
                    ),
                )
            )
        object.__setattr__(self, "gates", tuple(gates))

    @property
    def k(self) -> int:
        return len(self.gates)

    def gate_partition(self, i: int) -> "Partition":
        """The partition induced by gate i; variables the gate omits become
        singleton colors so every partition covers [n]."""
        colors = [f.support for f in self.gates[i].forms if f.support]
        covered = set().union(*colors) if colors else set()
        colors += [frozenset([v]) for v in range(self.n) if v not in covered]
        return Partition(frozenset(range(self.n)), tuple(colors))

    def distinct_partitions(self) -> list["Partition"]:
        seen: dict[frozenset, Partition] = {}
        for i in range(self.k):
            part = self.gate_partition(i)
            seen.setdefault(part.canonical_key(), part)
        return list(seen.values())

    def eval_at(self, point: Sequence[int]) -> int:
        if len(point) != self.n:
            raise StructuralError(f"point length {len(point)} != ambient {self.n}")
        p = self.field.p
        pt = [v % p for v in point]
        total = 0
        for gate in self.gates:
            val = gate.scale
            for form in gate.forms:
                val = (val * form.eval_at(pt, self.field)) % p
                if val == 0:
                    break
            total = (total + val) % p
        return total

    def expand(self) -> ScalarPoly:
        acc = ScalarPoly.zero(self.field, self.n)
        for gate in self.gates:
            prod = ScalarPoly.const(self.field, self.n, gate.scale)
            for form in gate.forms:
                prod = prod * form.to_scalar_poly(self.field, self.n)
            acc = acc + prod
        return acc

    def restrict(self, base_set: Iterable[int], outside: Sequence[int]) -> "Depth3Circuit":
        """The circuit with variables outside base_set fixed to the given
        point (their linear-form contributions fold into the constants)."""
        base = set(base_set)
        p = self.field.p
        gates = []
        for gate in self.gates:
            forms = []
            for f in gate.forms:
                const = f.constant
                coeffs = {}
                for v, c in f.coeffs.items():
                    if v in base:
                        coeffs[v] = c
                    else:
                        const = (const + c * outside[v]) % p
                forms.append(LinearForm(const, coeffs))
            gates.append(Gate(gate.scale, tuple(forms)))
        return Depth3Circuit(self.field, self.n, tuple(gates))


# ---------------------------------------------------------------------------
# partitions and distance


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty colors exactly covering a ground set."""

    ground: frozenset
    colors: tuple

    def __post_init__(self) -> None:
        colors = tuple(
            sorted((frozenset(c) for c in self.colors), key=lambda c: min(c))
        )
        object.__setattr__(self, "ground", frozenset(self.ground))
        object.__setattr__(self, "colors", colors)
        seen: set[int] = set()
        for c in colors:
            if not c:
                raise StructuralError("empty color")
            if c & seen:
                raise StructuralError("colors overlap")
            seen |= c
        if seen != self.ground:
            raise StructuralError("colors do not cover the ground set")

    @classmethod
    def of_lists(cls, colors: Sequence[Iterable[int]]) -> "Partition":
        cs = [frozenset(c) for c in colors]
        ground = frozenset().union(*cs) if cs else frozenset()
        return cls(ground, tuple(cs))

    def canonical_key(self) -> frozenset:
        return frozenset(self.colors)

    def color_of(self, v: int) -> frozenset:
        for c in self.colors:
            if v in c:
                return c
        raise StructuralError(f"variable {v} not in ground set")

    def restrict(self, base: Iterable[int]) -> "Partition":
        base = frozenset(base)
        if not base <= self.ground:
            raise StructuralError("base set not contained in the ground set")
        colors = tuple(c & base for c in self.colors if c & base)
        return Partition(base, colors)


class _DSU:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def friendly_neighborhoods(seq: Sequence[Partition], j: int) -> list[list[frozenset]]:
    """Equivalence classes of the colors of seq[j] under reachability through
    the colors of the upper partitions seq[0..j-1].

    Two colors of seq[j] fall in one class when some chain of upper colors
    sharing variables connects them; each class's variable union is then
    exactly a union of colors in every upper partition (asserted).
    """
    if not 0 <= j < len(seq):
        raise StructuralError(f"index {j} out of range")
    ground = seq[j].ground
    for part in seq[: j + 1]:
        if part.ground != ground:
            raise StructuralError("partitions have inconsistent ground sets")
    colors = seq[j].colors
    var_to_color = {v: idx for idx, c in enumerate(colors) for v in c}
    dsu = _DSU(len(colors))
    for upper in seq[:j]:
        for x_color in upper.colors:
            touched = {var_to_color[v] for v in x_color}
            first = min(touched)
            for t in touched:
                dsu.union(first, t)
    classes: dict[int, list[frozenset]] = {}
    for idx in range(len(colors)):
        classes.setdefault(dsu.find(idx), []).append(colors[idx])
    out = [classes[root] for root in sorted(classes)]
    for klass in out:
        union = frozenset().union(*klass)
        for upper in seq[:j]:
            for c in upper.colors:
                if c & union and not c <= union:
                    raise InternalInconsistencyError(
                        "neighborhood union is not exactly partitioned above"
                    )
    return out


def compute_distance(seq: Sequence[Partition]) -> int:
    """Largest friendly-neighborhood size over the non-top partitions; a
    single partition has distance 1."""
    if not seq:
        raise StructuralError("empty partition sequence")
    dist = 1
    for j in range(1, len(seq)):
        for klass in friendly_neighborhoods(seq, j):
            dist = max(dist, len(klass))
    return dist


def minimal_distance_order(partitions: Sequence[Partition]) -> tuple[tuple[int, ...], int]:
    """Try every ordering (k <= 6) and return (order, distance) minimizing
    the distance; ties break lexicographically."""
    k = len(partitions)
    if k > ORDER_SEARCH_LIMIT:
        raise PreconditionError(
            f"{k} partitions exceed the k <= {ORDER_SEARCH_LIMIT} search limit; "
            "supply an explicit order"
        )
    best: tuple[tuple[int, ...], int] | None = None
    for perm in itertools.permutations(range(k)):
        d = compute_distance([partitions[i] for i in perm])
        if best is None or d < best[1]:
            best = (perm, d)
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# reductions to ROABP


def sparse_to_roabp(f: ScalarPoly, order: Sequence[int]) -> Roabp:
    """A width-sp(f) ROABP for a multilinear polynomial, in any variable
    order: one lane per monomial, edge labels x_v or 1."""
    if f.individual_degree() > 1:
        raise PreconditionError("polynomial is not multilinear")
    order = list(order)
    if not f.support_vars() <= set(order):
        raise StructuralError("order does not cover the polynomial's variables")
    monos = sorted(f.terms)
    width = len(monos)
    field, n = f.field, f.n
    if width == 0:
        return Roabp.with_constant_boundaries(
            field, n, [(v,) for v in order],
            [MatPoly.zero(field, n, 0) for _ in order], (), (),
        )
    layers = []
    for v in order:
        diag0 = [[0] * width for _ in range(width)]
        diag1 = [[0] * width for _ in range(width)]
        for idx, m in enumerate(monos):
            if m[v]:
                diag1[idx][idx] = 1
            else:
                diag0[idx][idx] = 1
        e = [0] * n
        e[v] = 1
        terms = {}
        if any(any(r) for r in diag0):
            terms[mono_zero(n)] = tuple(tuple(r) for r in diag0)
        if any(any(r) for r in diag1):
            terms[tuple(e)] = tuple(tuple(r) for r in diag1)
        layers.append(MatPoly(field, n, width, terms))
    left = tuple(f.terms[m] for m in monos)
    right = (1,) * width
    return Roabp.with_constant_boundaries(field, n, [(v,) for v in order], layers, left, right)


def _neighborhood_partitions(seq: Sequence[Partition]) -> list[Partition]:
    """P'_i: the union of colors in each friendly neighborhood of seq[i]."""
    out = []
    for i in range(len(seq)):
        classes = friendly_neighborhoods(seq, i)
        out.append(
            Partition(seq[i].ground, tuple(frozenset().union(*k) for k in classes))
        )
    return out


def _respecting_order(coarse_to_fine: Sequence[Partition]) -> list[int]:
    """A total variable order respecting every partition in the sequence
    (coarsest first, each refined by the next); arbitrary choices are fixed
    by smallest variable index."""
    parts = list(coarse_to_fine)
    blocks: list[frozenset] = sorted(parts[0].colors, key=min)
    for part in parts[1:]:
        new_blocks: list[frozenset] = []
        for blk in blocks:
            inner = sorted((c for c in part.colors if c <= blk), key=min)
            if frozenset().union(*inner) != blk:
                raise InternalInconsistencyError("refinement property violated")
            new_blocks.extend(inner)
        blocks = new_blocks
    order: list[int] = []
    for blk in blocks:
        order.extend(sorted(blk))
    return order


def _gate_lane(
    circuit: Depth3Circuit,
    gate: Gate,
    neighborhoods: list[list[frozenset]],
    order: list[int],
) -> tuple[int, dict[int, tuple]]:
    """Per-variable transfer matrices for one gate's lane.

    Every neighborhood's forms are multiplied out into a sparse multilinear
    segment polynomial; the lane walks the segments in order, entering each
    one through a carry channel (state 0), fanning out to one state per
    monomial, and funnelling back to the carry at the segment's last
    variable.
    """
    field, n = circuit.field, circuit.n
    position = {v: i for i, v in enumerate(order)}
    form_by_color = {f.support: f for f in gate.forms if f.support}
    segments = []
    for klass in neighborhoods:
        union = sorted(frozenset().union(*klass))
        poly = ScalarPoly.const(field, n, 1)
        for color in klass:
            form = form_by_color.get(color)
            if form is not None:
                poly = poly * form.to_scalar_poly(field, n)
        positions = sorted(position[v] for v in union)
        if positions != list(range(positions[0], positions[0] + len(positions))):
            raise InternalInconsistencyError("neighborhood is not an order interval")
        segments.append((positions[0], positions[-1], poly))
    # constant forms scale the lane at its first segment entry
    const_scale = 1
    for f in gate.forms:
        if not f.support:
            const_scale = (const_scale * f.constant) % field.p
    width = max(1, max(s[2].sparsity for s in segments))
    matrices: dict[int, tuple] = {}
    segments.sort()
    first_segment_start = segments[0][0]
    for start, end, poly in segments:
        monos = sorted(poly.terms)
        for pos in range(start, end + 1):
            v = order[pos]
            const_m = [[0] * width for _ in range(width)]
            var_m = [[0] * width for _ in range(width)]
            if start == end:
                uni = poly
                for e, c in uni.terms.items():
                    if c and e[v]:
                        var_m[0][0] = (var_m[0][0] + c) % field.p
                    elif c:
                        const_m[0][0] = (const_m[0][0] + c) % field.p
            else:
                for idx, m in enumerate(monos):
                    target = var_m if m[v] else const_m
                    if pos == start:
                        target[0][idx] = poly.terms[m]
                    elif pos == end:
                        target[idx][0] = 1
                    else:
                        target[idx][idx] = 1
            if pos == first_segment_start and const_scale != 1:
                const_m = [[(x * const_scale) % field.p for x in row] for row in const_m]
                var_m = [[(x * const_scale) % field.p for x in row] for row in var_m]
            matrices[pos] = (
                tuple(tuple(r) for r in const_m),
                tuple(tuple(r) for r in var_m),
            )
    return width, matrices


def circuit_to_roabp(
    c: Depth3Circuit,
    gate_order: Sequence[int] | None = None,
    expected_distance: int | None = None,
) -> Roabp:
    """Reduce a multilinear depth-3 circuit to an ROABP over single-variable
    blocks in a total order respecting every neighborhood partition.

    The width is at most the sum over gates of the largest neighborhood
    product sparsity.  With distance delta, neighborhood products multiply
    at most delta linear forms.
    """
    if c.k == 0:
        raise PreconditionError("circuit has no gates")
    if gate_order is None:
        parts = [c.gate_partition(i) for i in range(c.k)]
        gate_order, _ = minimal_distance_order(parts)
    gate_order = list(gate_order)
    if sorted(gate_order) != list(range(c.k)):
        raise PreconditionError("gate order must permute the gates")
    seq = [c.gate_partition(i) for i in gate_order]
    if expected_distance is not None:
        achieved = compute_distance(seq)
        if achieved > expected_distance:
            raise PreconditionError(
                f"gate order achieves distance {achieved} > {expected_distance}"
            )
    primed = _neighborhood_partitions(seq)
    order = _respecting_order(list(reversed(primed)))
    lanes = []
    for pos_in_seq, g_idx in enumerate(gate_order):
        neighborhoods = friendly_neighborhoods(seq, pos_in_seq)
        lanes.append(_gate_lane(c, c.gates[g_idx], neighborhoods, order))
    field, n = c.field, c.n
    total_width = sum(w for w, _ in lanes)
    offsets = []
    acc = 0
    for w, _ in lanes:
        offsets.append(acc)
        acc += w
    layers = []
    for pos, v in enumerate(order):
        const_m = [[0] * total_width for _ in range(total_width)]
        var_m = [[0] * total_width for _ in range(total_width)]
        for (w, mats), off in zip(lanes, offsets):
            cm, vm = mats[pos]
            for i in range(w):
                for j in range(w):
                    if cm[i][j]:
                        const_m[off + i][off + j] = cm[i][j]
                    if vm[i][j]:
                        var_m[off + i][off + j] = vm[i][j]
        e = [0] * n
        e[v] = 1
        terms = {}
        if any(any(r) for r in const_m):
            terms[mono_zero(n)] = tuple(tuple(r) for r in const_m)
        if any(any(r) for r in var_m):
            terms[tuple(e)] = tuple(tuple(r) for r in var_m)
        layers.append(MatPoly(field, n, total_width, terms))
    left = [0] * total_width
    right = [0] * total_width
    for (w, _), off, g_idx in zip(lanes, offsets, gate_order):
        left[off] = c.gates[g_idx].scale
        right[off] = 1
    return Roabp.with_constant_boundaries(
        field, n, [(v,) for v in order], layers, tuple(left), tuple(right)
    )


# ---------------------------------------------------------------------------
# base-set decomposition


@dataclass(frozen=True)
class BaseSetCertificate:
    base_set: frozenset
    order: tuple  # permutation of the original partition indices
    distance: int


@dataclass(frozen=True)
class BaseSetDecomposition:
    """Disjoint base sets with per-set distance-1 orderings of the input
    partitions, and the proven cap on the number of sets."""

    n: int
    partition_count: int
    certificates: tuple

    @property
    def m(self) -> int:
        return len(self.certificates)

    @property
    def base_sets(self) -> list[frozenset]:
        return [c.base_set for c in self.certificates]

    @property
    def epsilon(self) -> float:
        return 1.0 / 2 ** (self.partition_count - 1)

    @property
    def cap(self) -> float:
        c = self.partition_count
        return 2 ** (c - 1) * self.n ** (1 - 1.0 / 2 ** (c - 1))

    def within_cap(self) -> bool:
        if self.partition_count == 1:
            return self.m == 1
        return self.m < self.cap


def _decompose(partitions: Sequence[Partition], indices: list[int], ground: frozenset):
    """Recursive split: big colors of the first partition become base sets
    refined by the rest (first partition ordered last); small colors
    contribute transversals (first partition ordered first)."""
    if len(indices) == 1:
        return [(ground, (indices[0],))]
    head = partitions[indices[0]].restrict(ground)
    size = len(ground)
    big = [c for c in head.colors if len(c) * len(c) >= size]
    small = [c for c in head.colors if len(c) * len(c) < size]
    out = []
    for color in sorted(big, key=min):
        for base, perm in _decompose(partitions, indices[1:], color):
            out.append((base, perm + (indices[0],)))
    if small:
        small_sorted = [sorted(c) for c in sorted(small, key=min)]
        depth = max(len(c) for c in small_sorted)
        for a in range(depth):
            transversal = frozenset(c[a] for c in small_sorted if len(c) > a)
            for base, perm in _decompose(partitions, indices[1:], transversal):
                out.append((base, (indices[0],) + perm))
    return out


def decompose_base_sets(partitions: Sequence[Partition]) -> BaseSetDecomposition:
    """Split the ground set into base sets on which the partitions admit a
    distance-1 ordering; at most 2^(c-1) * n^(1-1/2^(c-1)) sets for c >= 2
    partitions (exactly one trivial set for c = 1)."""
    if not partitions:
        raise StructuralError("need at least one partition")
    ground = partitions[0].ground
    for part in partitions:
        if part.ground != ground:
            raise StructuralError("partitions have inconsistent ground sets")
    raw = _decompose(list(partitions), list(range(len(partitions))), ground)
    certificates = []
    for base, perm in raw:
        seq = [partitions[i].restrict(base) for i in perm]
        dist = compute_distance(seq)
        if dist != 1:
            raise InternalInconsistencyError(
                f"certificate for base set {sorted(base)} has distance {dist}"
            )
        certificates.append(BaseSetCertificate(base, perm, dist))
    decomp = BaseSetDecomposition(
        n=len(ground),
        partition_count=len(partitions),
        certificates=tuple(certificates),
    )
    covered: set[int] = set()
    for cert in certificates:
        if cert.base_set & covered:
            raise InternalInconsistencyError("base sets overlap")
        covered |= cert.base_set
    if covered != ground:
        raise InternalInconsistencyError("base sets do not cover the ground set")
    if not decomp.within_cap():
        raise InternalInconsistencyError(
            f"{decomp.m} base sets exceed the cap {decomp.cap}"
        )
    return decomp


# ---------------------------------------------------------------------------
# whitebox test for sums of set-multilinear circuits


def base_set_hitting_points(base: Sequence[int], field: Field) -> list[dict]:
    """Substitution points hitting any nonzero multilinear polynomial over
    the given variables: x_v -> t^(2^j) for the j-th variable, t sweeping
    2^|base| values, so distinct monomials get distinct t-degrees."""
    base = sorted(base)
    count = 2 ** len(base)
    if field.p < count:
        raise CapabilityError(
            f"modulus {field.p} too small for {count} Kronecker points"
        )
    p = field.p
    points = []
    for t in range(count):
        points.append({v: pow(t, 2**j, p) for j, v in enumerate(base)})
    return points


def sum_sml_whitebox_test(
    c: Depth3Circuit, sweep_ceiling: int = SWEEP_CEILING
) -> tuple[str, tuple | None]:
    """Whitebox zero test for a multilinear depth-3 circuit whose gates
    induce few distinct partitions.

    Decomposes the variables into base sets with distance-1 certificates,
    builds one hitting set per base set that covers every restriction of
    the circuit to that base set (outside variables fixed arbitrarily), and
    sweeps the cartesian product in hybrid order with early exit.  Returns
    ("nonzero", witness) or ("zero", None).
    """
    if c.k == 0:
        return "zero", None
    distinct = c.distinct_partitions()
    decomp = decompose_base_sets(distinct)
    per_set = [
        base_set_hitting_points(sorted(cert.base_set), c.field)
        for cert in decomp.certificates
    ]
    total = math.prod(len(ps) for ps in per_set)
    if total > sweep_ceiling:
        raise CapabilityError(
            f"hybrid sweep of {total} evaluations exceeds the ceiling {sweep_ceiling}"
        )
    for combo in itertools.product(*per_set):
        point = [0] * c.n
        for assignment in combo:
            for v, val in assignment.items():
                point[v] = val
        if c.eval_at(point):
            return "nonzero", tuple(point)
    return "zero", None
