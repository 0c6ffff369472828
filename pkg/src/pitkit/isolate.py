"""Basis-isolating weight assignments and the ROABP hitting-set generator.

A weight function isolates a basis for a matrix-coefficient polynomial D
when some set S of basis monomials gets pairwise-distinct weights and every
other coefficient lies in the span of strictly lighter S-coefficients.
Under such an assignment the substitution x_i -> t^(w(x_i)) keeps
left^T D right nonzero, so sweeping t over enough field values hits it.

The constructor builds the assignment in ceil(log2 d)+1 rounds: separate the
monomials inside every factor, keep a greedy minimum-weight basis of each
factor's coefficients, pair adjacent factors (odd counts pass through, which
is multiplication by the identity of the algebra), and repeat.  The rounds
are combined positionally with a base B exceeding any achievable monomial
weight, so earlier rounds take precedence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iter_product
from typing import Iterator, Sequence

from .algebra import (
    Field,
    MatPoly,
    Matrix,
    Monomial,
    RowSpan,
    mat_flatten,
    mono_mul,
    mat_mul,
)
from .errors import (
    CapabilityError,
    InternalInconsistencyError,
    ModulusTooSmallError,
    PreconditionError,
    StructuralError,
)
from .kron import (
    DEFAULT_CUTOFF_CONSTANT,
    PairSet,
    WeightFn,
    prime_cutoff,
    separating_weights,
    weights_mod_prime,
    iter_primes,
)
from .roabp import EXPAND_CEILING, PointSet, Roabp


@dataclass(frozen=True)
class LayeredWeight:
    """The multi-round combined assignment w0..w_R with base B.

    combined(x) = sum_r rounds[r](x) * B^(R-r), so round weights never
    interfere and the combined order is lexicographic on round tuples.
    """

    rounds: tuple
    base: int
    combined: WeightFn

    @classmethod
    def build(cls, rounds: Sequence[WeightFn], n: int, delta: int) -> "LayeredWeight":
        max_single = max(w.max_weight for w in rounds)
        base = max(2, 1 + n * delta * max_single)
        count = len(rounds)
        combined = WeightFn(
            tuple(
                sum(rounds[r].of(v) * base ** (count - 1 - r) for r in range(count))
                for v in range(n)
            )
        )
        return cls(tuple(rounds), base, combined)

    def round_tuple(self, e: Monomial) -> tuple[int, ...]:
        return tuple(w.monomial_weight(e) for w in self.rounds)


@dataclass
class RoundBlock:
    """One factor's items at one round: (monomial, coefficient) pairs plus
    the indices the greedy pass kept."""

    items: list
    kept: list


@dataclass
class RoundRecord:
    index: int
    weight_fn: WeightFn
    blocks: list


@dataclass
class IsolationTrace:
    """Per-round records plus the final isolated monomial set."""

    rounds: list
    isolated: list  # (monomial, coefficient, combined weight)


def _flatten_coeff(coeff) -> tuple[int, ...]:
    if isinstance(coeff, int):
        return (coeff,)
    if coeff and isinstance(coeff[0], (tuple, list)):
        return mat_flatten(coeff)
    return tuple(coeff)


def greedy_basis(
    items: Sequence[tuple], field: Field
) -> list[int]:
    """Scan (weight, monomial, coefficient) items in ascending weight and
    keep each one whose coefficient is independent of the kept span.

    Weights must be pairwise distinct (a duplicate signals a failed
    separator upstream); any totally ordered key works.  Coefficients may be
    matrices, flat vectors, or bare scalars; zero coefficients are never
    kept.  Returns kept indices in scan order.
    """
    keys = [it[0] for it in items]
    if len(set(keys)) != len(keys):
        raise PreconditionError("duplicate weights in greedy basis input")
    order = sorted(range(len(items)), key=lambda i: items[i][0])
    span = RowSpan(field)
    kept: list[int] = []
    for i in order:
        if span.add(_flatten_coeff(items[i][2])):
            kept.append(i)
    return kept


def _intra_block_pairs(
    blocks: Sequence[Sequence[tuple]], n: int, delta: int
) -> PairSet | None:
    pairs = []
    for block in blocks:
        monos = [m for m, _ in block]
        for i in range(len(monos)):
            for j in range(i + 1, len(monos)):
                if monos[i] != monos[j]:
                    pairs.append((monos[i], monos[j]))
    if not pairs:
        return None
    return PairSet(n, delta, tuple(pairs))


def construct_isolating_weights(
    factors: Sequence[MatPoly],
    c0: int = DEFAULT_CUTOFF_CONSTANT,
    self_check: bool = True,
    expand_ceiling: int = EXPAND_CEILING,
) -> tuple[LayeredWeight, IsolationTrace]:
    """Whitebox construction of a basis-isolating weight assignment for the
    product of variable-disjoint matrix-polynomial factors."""
    if not factors:
        raise PreconditionError("need at least one factor")
    field = factors[0].field
    n = factors[0].n
    w = factors[0].w
    used: set[int] = set()
    for f in factors:
        if f.field != field or f.n != n or f.w != w:
            raise StructuralError("factors must share field, ambient, and width")
        vs = f.support_vars()
        if vs & used:
            raise PreconditionError("factors are not variable-disjoint")
        used |= vs
    delta = max((f.individual_degree() for f in factors), default=0)

    # blocks of (monomial, coefficient) pairs, in layer order
    blocks: list[list[tuple[Monomial, Matrix]]] = [
        sorted(f.terms.items()) for f in factors
    ]
    rounds: list[WeightFn] = []
    records: list[RoundRecord] = []

    def run_round(current: list[list[tuple[Monomial, Matrix]]]) -> list[list[tuple[Monomial, Matrix]]]:
        pair_set = _intra_block_pairs(current, n, delta)
        if pair_set is None:
            # nothing to separate: the first candidate prime keeps the
            # constructed assignment inside the blackbox family
            wfn = weights_mod_prime(n, delta, 2)
        else:
            wfn = separating_weights(n, delta, pair_set, c0).verified
        rounds.append(wfn)
        record = RoundRecord(index=len(rounds) - 1, weight_fn=wfn, blocks=[])
        survivors: list[list[tuple[Monomial, Matrix]]] = []
        for block in current:
            keyed = [
                (tuple(r.monomial_weight(m) for r in rounds), m, coeff)
                for m, coeff in block
            ]
            kept = greedy_basis(keyed, field)
            record.blocks.append(RoundBlock(items=list(block), kept=kept))
            survivors.append([block[i] for i in kept])
        records.append(record)
        return survivors

    blocks = run_round(blocks)
    while len(blocks) > 1:
        paired: list[list[tuple[Monomial, Matrix]]] = []
        for j in range(0, len(blocks), 2):
            if j + 1 < len(blocks):
                left, right = blocks[j], blocks[j + 1]
                merged: dict[Monomial, Matrix] = {}
                for m1, c1 in left:
                    for m2, c2 in right:
                        merged[mono_mul(m1, m2)] = mat_mul(c1, c2, field)
                paired.append(sorted(merged.items()))
            else:
                # odd count: the last block passes through, i.e. it is
                # paired with the identity element of the algebra
                paired.append(blocks[j])
        blocks = run_round(paired)

    layered = LayeredWeight.build(rounds, n, delta)
    final = blocks[0]
    isolated = [
        (m, coeff, layered.combined.monomial_weight(m)) for m, coeff in final
    ]
    if len(isolated) > w * w:
        raise InternalInconsistencyError(
            f"isolated set has {len(isolated)} > w^2 = {w * w} monomials"
        )
    weights = [wt for _, _, wt in isolated]
    if len(set(weights)) != len(weights):
        raise InternalInconsistencyError("isolated monomials got equal combined weights")
    trace = IsolationTrace(rounds=records, isolated=isolated)

    if self_check:
        est = 1
        for f in factors:
            est *= max(1, f.sparsity)
        if est <= expand_ceiling:
            product = factors[0]
            for f in factors[1:]:
                product = product * f
            if not is_basis_isolating(layered.combined, product):
                raise InternalInconsistencyError(
                    "constructed assignment failed the isolation self-check"
                )
    return layered, trace


def is_basis_isolating(wfn: WeightFn, poly: MatPoly) -> bool:
    """Decide whether a weight function is basis isolating for poly.

    Scans weight classes in ascending order keeping a span of all strictly
    lighter coefficients.  A monomial outside that span must belong to the
    isolated set; two such monomials in one class would need equal weights,
    which the definition forbids, so the check rejects.  Zero coefficients
    are trivially spanned and never isolated.
    """
    if wfn.n != poly.n:
        raise StructuralError("weight function ambient mismatch")
    by_weight: dict[int, list[Monomial]] = {}
    for e in poly.terms:
        by_weight.setdefault(wfn.monomial_weight(e), []).append(e)
    span = RowSpan(poly.field)
    for weight in sorted(by_weight):
        klass = by_weight[weight]
        fresh = [
            e for e in klass if not span.contains(mat_flatten(poly.coeff(e)))
        ]
        if len(fresh) > 1:
            return False
        for e in klass:
            span.add(mat_flatten(poly.coeff(e)))
    return True


def enumerate_candidate_weights(
    n: int,
    d: int,
    s: int,
    w: int,
    delta: int,
    c0: int = DEFAULT_CUTOFF_CONSTANT,
) -> Iterator[WeightFn]:
    """Blackbox candidate family: the cartesian product of per-round prime
    candidate lists, each combined positionally with its base B.

    Round 0 is sized for d*s^2 intra-factor pairs; later rounds for d*w^8
    pairs (paired survivor blocks have at most w^4 monomials each).  The
    whitebox-constructed assignment always appears among the members.
    """
    if min(n, d, s, w) < 1 or delta < 0:
        raise StructuralError("parameters must be positive (delta nonnegative)")
    round_count = 1 + (math.ceil(math.log2(d)) if d > 1 else 0)
    pair_bounds = [d * s * s] + [d * w**8] * (round_count - 1)
    prime_lists: list[list[int]] = []
    for bound in pair_bounds:
        cutoff = prime_cutoff(n, bound, delta, c0)
        primes = []
        for p in iter_primes():
            if p > cutoff:
                break
            primes.append(p)
        prime_lists.append(primes)
    for combo in iter_product(*prime_lists):
        rounds = [weights_mod_prime(n, delta, p) for p in combo]
        yield LayeredWeight.build(rounds, n, delta).combined


# ---------------------------------------------------------------------------
# hitting set


def _embedded_factors(r: Roabp) -> list[MatPoly]:
    """Interior layers, with non-constant boundary vectors embedded as a
    first-row / first-column factor so the computed polynomial is the (0,0)
    entry of the extended product."""
    factors = list(r.layers)
    if r.has_constant_boundaries():
        return factors
    w = r.width
    left_terms: dict[Monomial, list[list[int]]] = {}
    for j, poly in enumerate(r.left_boundary):
        for e, c in poly.terms.items():
            m = left_terms.setdefault(e, [[0] * w for _ in range(w)])
            m[0][j] = c
    right_terms: dict[Monomial, list[list[int]]] = {}
    for i, poly in enumerate(r.right_boundary):
        for e, c in poly.terms.items():
            m = right_terms.setdefault(e, [[0] * w for _ in range(w)])
            m[i][0] = c
    left = MatPoly(r.field, r.n, w, {e: tuple(tuple(row) for row in m) for e, m in left_terms.items()})
    right = MatPoly(r.field, r.n, w, {e: tuple(tuple(row) for row in m) for e, m in right_terms.items()})
    return [left, *factors, right]


def _points_for_weights(r: Roabp, wfn: WeightFn, label: str, extra: dict) -> PointSet:
    degree = r.n * r.delta * wfn.max_weight
    count = degree + 1
    if count + 1 > r.field.p:
        raise ModulusTooSmallError(
            f"hitting set needs {count} distinct nonzero t values, "
            f"modulus {r.field.p} is too small"
        )
    p = r.field.p
    points = []
    for t in range(1, count + 1):
        points.append(tuple(pow(t, wfn.of(v), p) for v in range(r.n)))
    provenance = {
        "generator": "roabp_hitting_set",
        "mode": label,
        "n": r.n,
        "d": r.d,
        "w": r.width,
        "delta": r.delta,
        "s": r.layer_sparsity,
        "t_count": count,
        "max_weight": wfn.max_weight,
        **extra,
    }
    return PointSet(r.n, tuple(points), provenance)


def _small_verified_separator(
    r: Roabp, factors: list[MatPoly], c0: int, expand_ceiling: int
) -> tuple[WeightFn, int]:
    """A weight function separating every pair of monomials of the expanded
    product (hence basis isolating), found at the smallest workable prime.

    Weight assignments that give distinct weights to all monomials are
    always basis isolating; this keeps hitting sets inside small fields
    when the round-combined assignment's weights would overflow them.
    """
    product = factors[0]
    for f in factors[1:]:
        product = product * f
        if product.sparsity > expand_ceiling:
            raise CapabilityError(
                "instance too large to derive a field-sized separator"
            )
    monos = sorted(product.terms)
    delta = max(r.delta, product.individual_degree())
    if len(monos) < 2:
        return WeightFn.constant(r.n, 1), 0
    pair_set = PairSet.from_monomials(r.n, delta, monos)
    search = separating_weights(r.n, delta, pair_set, c0)
    return search.verified, search.verified_prime


def roabp_hitting_set(
    r: Roabp,
    mode: str = "whitebox",
    c0: int = DEFAULT_CUTOFF_CONSTANT,
    expand_ceiling: int = EXPAND_CEILING,
) -> PointSet:
    """Hitting set for the polynomial computed by the instance.

    Whitebox mode constructs the basis-isolating assignment from the
    factors and emits (t^w(x_1), ..., t^w(x_n)) for 1 + n*delta*max_weight
    distinct nonzero t values.  When the combined assignment needs more
    points than the field has, it falls back to the smallest verified
    all-monomial separator, which is basis isolating outright.

    Blackbox mode emits the same point family for every enumerated
    candidate assignment, using only the instance's declared parameters.
    """
    if mode == "whitebox":
        factors = _embedded_factors(r)
        layered, _ = construct_isolating_weights(
            factors, c0=c0, self_check=False, expand_ceiling=expand_ceiling
        )
        degree = r.n * r.delta * layered.combined.max_weight
        if degree + 2 <= r.field.p:
            return _points_for_weights(
                r, layered.combined, "whitebox", {"assignment": "round-combined"}
            )
        small, prime = _small_verified_separator(r, factors, c0, expand_ceiling)
        return _points_for_weights(
            r,
            small,
            "whitebox",
            {"assignment": "verified-separator", "separator_prime": prime},
        )
    if mode == "blackbox":
        s = max(1, r.layer_sparsity)
        all_points: list[tuple[int, ...]] = []
        per_assignment: list[int] = []
        for wfn in enumerate_candidate_weights(r.n, max(1, r.d), s, r.width, r.delta, c0):
            ps = _points_for_weights(r, wfn, "blackbox", {})
            per_assignment.append(len(ps))
            all_points.extend(ps.points)
        provenance = {
            "generator": "roabp_hitting_set",
            "mode": "blackbox",
            "n": r.n,
            "d": r.d,
            "w": r.width,
            "delta": r.delta,
            "s": s,
            "assignments": len(per_assignment),
            "per_assignment": per_assignment,
        }
        return PointSet(r.n, tuple(all_points), provenance)
    raise StructuralError(f"unknown mode {mode!r}")
