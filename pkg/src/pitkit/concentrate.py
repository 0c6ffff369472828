"""Support concentration for invertible-factor and width-2 ROABPs.

A matrix polynomial is l-concentrated when the coefficients of its
monomials with support below l already span the whole coefficient space;
block-support concentration counts contributing layers instead of
variables.  Products of invertible-constant-term layers concentrate at
block-support w^2 (w^2+2 with boundary vectors), and a sparse shift makes
every layer support-concentrated, giving hitting sets from low-support
grids.  Width-2 instances with singular layers factor into invertible
pieces, which a Lagrange curve through the invertible hitting set covers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .algebra import (
    Field,
    MatPoly,
    Monomial,
    ScalarPoly,
    det_poly,
    mat_det,
    mat_flatten,
    monomials_up_to,
    mono_support_size,
    rank_over_field,
)
from .errors import (
    InternalInconsistencyError,
    ModulusTooSmallError,
    PreconditionError,
    StructuralError,
)
from .kron import (
    DEFAULT_CUTOFF_CONSTANT,
    PairSet,
    WeightFn,
    iter_primes,
    prime_cutoff,
    separating_weights,
    weights_mod_prime,
)
from .roabp import EXPAND_CEILING, PointSet, Roabp


def support_parameter(w: int, s: int, mu: int | None) -> int:
    """l = 1 + 2 min(ceil(log2(w^2 s)), mu); mu=None means unbounded."""
    log_term = math.ceil(math.log2(w * w * s)) if w * w * s > 1 else 0
    if mu is None:
        return 1 + 2 * log_term
    return 1 + 2 * min(log_term, mu)


def block_support(e: Monomial, blocks: Sequence[Sequence[int]]) -> frozenset[int]:
    """Indices of the blocks contributing a nonzero exponent to e."""
    out = set()
    for idx, blk in enumerate(blocks):
        if any(e[v] for v in blk):
            out.add(idx)
    return frozenset(out)


def _coeff_vectors(poly: MatPoly | ScalarPoly) -> dict[Monomial, tuple[int, ...]]:
    if isinstance(poly, MatPoly):
        return {e: mat_flatten(m) for e, m in poly.terms.items()}
    return {e: (c,) for e, c in poly.terms.items()}


def concentration_rank(
    poly: MatPoly | ScalarPoly,
    bound: int,
    mode: str = "support",
    blocks: Sequence[Sequence[int]] | None = None,
) -> tuple[int, int]:
    """(rank of the coefficients below the bound, rank of all coefficients).

    "support" mode counts a monomial's variables; "block" mode counts the
    blocks it touches and requires the block structure.  Concentration at
    the bound holds iff the two ranks agree.
    """
    if mode not in ("support", "block"):
        raise StructuralError(f"unknown mode {mode!r}")
    if mode == "block" and blocks is None:
        raise StructuralError("block mode requires a block structure")
    vectors = _coeff_vectors(poly)
    low = []
    for e, vec in vectors.items():
        measure = (
            mono_support_size(e)
            if mode == "support"
            else len(block_support(e, blocks))
        )
        if measure < bound:
            low.append(vec)
    field = poly.field
    full_rank = rank_over_field(list(vectors.values()), field) if vectors else 0
    low_rank = rank_over_field(low, field) if low else 0
    return low_rank, full_rank


@dataclass(frozen=True)
class ShiftMap:
    """x_i -> x_i + t^(a_i): per-variable exponents plus the separating
    prime that produced them."""

    exponents: tuple
    prime: int

    def __post_init__(self) -> None:
        exps = tuple(int(a) for a in self.exponents)
        if any(a < 1 for a in exps):
            raise StructuralError("shift exponents must be positive")
        object.__setattr__(self, "exponents", exps)

    def offsets_at(self, t0: int, field: Field) -> tuple[int, ...]:
        p = field.p
        t0 %= p
        return tuple(pow(t0, a, p) for a in self.exponents)


def _interior_dets(r: Roabp) -> list[ScalarPoly]:
    dets = []
    for i, layer in enumerate(r.layers):
        det = det_poly(layer.entry_grid())
        if det.is_zero():
            raise PreconditionError(
                f"layer {i} is symbolically singular; "
                "use factorize_width2 for width-2 instances"
            )
        dets.append(det)
    return dets


def _shift_pair_set(r: Roabp, dets: Sequence[ScalarPoly], ell: int) -> tuple[PairSet | None, int]:
    """Monomial pairs a concentrating map must separate: all pairs inside
    each layer determinant, plus all pairs of low-support bounded-degree
    monomials."""
    monos: set[Monomial] = set()
    pairs: list[tuple[Monomial, Monomial]] = []
    delta = r.delta
    for det in dets:
        ms = sorted(det.terms)
        delta = max(delta, det.individual_degree())
        for i in range(len(ms)):
            for j in range(i + 1, len(ms)):
                pairs.append((ms[i], ms[j]))
    low = sorted(monomials_up_to(r.n, r.delta, max_support=min(ell, r.n)))
    for i in range(len(low)):
        for j in range(i + 1, len(low)):
            pairs.append((low[i], low[j]))
    if not pairs:
        return None, delta
    return PairSet(r.n, delta, tuple(pairs)), delta


def find_concentrating_shift(
    r: Roabp,
    c0: int = DEFAULT_CUTOFF_CONSTANT,
    expand_ceiling: int = EXPAND_CEILING,
) -> tuple[ShiftMap, int]:
    """A verified concentrating shift for an invertible-factor instance.

    Enumerates prime-derived monomial maps separating every layer
    determinant's monomials and all low-support monomials, picks t0 with
    every shifted constant term invertible, and keeps the first (map, t0)
    whose shifted, specialized polynomial verifies l(w^2+2)-support
    concentration.
    """
    dets = _interior_dets(r)
    w = r.width
    ell = support_parameter(w, max(1, r.layer_sparsity), r.layer_support)
    target = ell * (w * w + 2)
    pair_set, sep_delta = _shift_pair_set(r, dets, ell)

    def candidate_maps():
        if pair_set is None:
            yield WeightFn.constant(r.n, 1), 0
            return
        search = separating_weights(r.n, sep_delta, pair_set, c0)
        yield search.verified, search.verified_prime
        for p in search.iter_candidate_primes():
            if p == search.verified_prime:
                continue
            wfn = weights_mod_prime(r.n, sep_delta, p)
            if _separates(wfn, pair_set):
                yield wfn, p

    det_degree = max((det.total_degree() for det in dets), default=0)
    # bad t0 values: roots of any layer determinant sweep plus roots of one
    # rank-certifying minor, whose t-degree is at most w^2 * n * delta * max_a
    conc_degree = w * w * r.n * max(1, r.delta)
    for wfn, prime in candidate_maps():
        shift = ShiftMap(tuple(wfn.weights), prime)
        max_a = max(shift.exponents)
        t_budget = min(
            r.field.p - 1, 1 + (r.d * det_degree + conc_degree) * max_a
        )
        for t0 in range(1, t_budget + 1):
            offsets = shift.offsets_at(t0, r.field)
            if any(
                mat_det(layer.shift(offsets).constant_term(), r.field) == 0
                for layer in r.layers
            ):
                continue
            shifted = r.shift(offsets)
            _, scalar = shifted.expand(expand_ceiling)
            low_rank, full_rank = concentration_rank(scalar, target, "support")
            if low_rank == full_rank:
                return shift, t0
    raise InternalInconsistencyError(
        "no concentrating shift verified within the candidate family"
    )


def _separates(wfn: WeightFn, pair_set: PairSet) -> bool:
    return all(
        wfn.monomial_weight(a) != wfn.monomial_weight(b) for a, b in pair_set.pairs
    )


def low_support_hitting_set(n: int, delta: int, ell: int, field: Field) -> PointSet:
    """Points that vanish outside some (ell-1)-subset and take the nonzero
    grid values 1..delta+1 inside it; size C(n, ell-1) (delta+1)^(ell-1)."""
    if ell < 1:
        raise StructuralError("ell must be at least 1")
    if field.p <= delta + 1:
        raise ModulusTooSmallError(
            f"grid 1..{delta + 1} does not fit in GF({field.p})"
        )
    size = min(ell - 1, n)
    points = []
    for subset in itertools.combinations(range(n), size):
        for values in itertools.product(range(1, delta + 2), repeat=size):
            pt = [0] * n
            for v, val in zip(subset, values):
                pt[v] = val
            points.append(tuple(pt))
    provenance = {
        "generator": "low_support_hitting_set",
        "n": n,
        "delta": delta,
        "ell": ell,
        "subset_size": size,
        "count": len(points),
    }
    return PointSet(n, tuple(points), provenance)


def invertible_hitting_set(
    r: Roabp,
    mode: str = "whitebox",
    c0: int = DEFAULT_CUTOFF_CONSTANT,
    expand_ceiling: int = EXPAND_CEILING,
) -> PointSet:
    """Hitting set for an invertible-factor instance: the low-support grid
    translated by a concentrating shift.

    Whitebox mode verifies one (map, t0) pair against the instance, so the
    size is exactly |grid| * 1 * 1.  Blackbox mode reads only the declared
    parameters and enumerates the whole candidate family.
    """
    if mode == "whitebox":
        shift, t0 = find_concentrating_shift(r, c0, expand_ceiling)
        w = r.width
        ell = support_parameter(w, max(1, r.layer_sparsity), r.layer_support)
        target = ell * (w * w + 2)
        grid = low_support_hitting_set(r.n, r.delta, target, r.field)
        offsets = shift.offsets_at(t0, r.field)
        p = r.field.p
        points = tuple(
            tuple((h + o) % p for h, o in zip(pt, offsets)) for pt in grid
        )
        provenance = {
            "generator": "invertible_hitting_set",
            "mode": "whitebox",
            "n": r.n,
            "d": r.d,
            "w": w,
            "delta": r.delta,
            "s": r.layer_sparsity,
            "mu": r.layer_support,
            "ell": ell,
            "support_bound": target,
            "grid": len(grid),
            "t_sweep": 1,
            "maps": 1,
            "shift_prime": shift.prime,
            "t0": t0,
        }
        return PointSet(r.n, points, provenance)
    if mode == "blackbox":
        return invertible_hitting_set_params(
            r.n, r.d, r.width, r.delta,
            max(1, r.layer_sparsity), r.layer_support, r.field, c0,
        )
    raise StructuralError(f"unknown mode {mode!r}")


def invertible_hitting_set_params(
    n: int,
    d: int,
    w: int,
    delta: int,
    s: int,
    mu: int,
    field: Field,
    c0: int = DEFAULT_CUTOFF_CONSTANT,
) -> PointSet:
    """Parameter-only hitting set for every invertible-factor instance with
    the declared parameters.

    Enumerates the full candidate family of shift maps (sized for every
    layer determinant's s^w monomials plus all low-support monomials),
    sweeps t0 far enough to clear every determinant and rank minor, and
    translates the low-support grid by each specialization.  Size is
    exactly |grid| * |t-sweep| * |maps|; feasible only for tiny parameters.
    """
    ell = support_parameter(w, s, mu)
    target = ell * (w * w + 2)
    det_monomials = s**w
    det_pairs = d * det_monomials * (det_monomials - 1) // 2
    low_count = sum(
        math.comb(n, j) * max(1, delta) ** j for j in range(min(ell, n) + 1)
    )
    support_pairs = low_count * (low_count - 1) // 2
    pair_bound = max(1, det_pairs + support_pairs)
    delta_all = max(delta, w * delta)
    cutoff = prime_cutoff(n, pair_bound, delta_all, c0)
    maps = []
    for p in iter_primes():
        if p > cutoff:
            break
        maps.append(weights_mod_prime(n, delta_all, p))
    max_a = max(m.max_weight for m in maps)
    det_degree = w * delta * n
    conc_degree = w * w * n * max(1, delta)
    t_sweep = 1 + (d * det_degree + conc_degree) * max_a
    if t_sweep >= field.p:
        raise ModulusTooSmallError(
            f"blackbox t sweep needs {t_sweep} values, modulus {field.p} too small"
        )
    grid = low_support_hitting_set(n, delta, target, field)
    points = []
    for wfn in maps:
        shift = ShiftMap(tuple(wfn.weights), 0)
        for t0 in range(1, t_sweep + 1):
            offsets = shift.offsets_at(t0, field)
            for pt in grid:
                points.append(
                    tuple((h + o) % field.p for h, o in zip(pt, offsets))
                )
    provenance = {
        "generator": "invertible_hitting_set",
        "mode": "blackbox",
        "n": n,
        "d": d,
        "w": w,
        "delta": delta,
        "s": s,
        "mu": mu,
        "ell": ell,
        "support_bound": target,
        "grid": len(grid),
        "t_sweep": t_sweep,
        "maps": len(maps),
    }
    return PointSet(n, tuple(points), provenance)


# ---------------------------------------------------------------------------
# width 2


@dataclass(frozen=True)
class Width2Factorization:
    """alpha(x) C(x) = product of the chain polynomials, every chain element
    an invertible-factor width-2 instance; is_zero marks the degenerate
    all-zero-layer certificate."""

    alpha: ScalarPoly
    chain: tuple
    split_layers: tuple
    is_zero: bool = False


def _rank_one_split(
    layer: MatPoly,
) -> tuple[ScalarPoly, tuple[ScalarPoly, ScalarPoly], tuple[ScalarPoly, ScalarPoly]]:
    """Split a symbolically singular nonzero 2x2 layer as
    alpha * layer = column * row, picking the first nonzero entry in the
    order (0,0), (0,1), (1,0), (1,1)."""
    a, b = layer.entry(0, 0), layer.entry(0, 1)
    c, d = layer.entry(1, 0), layer.entry(1, 1)
    if not a.is_zero():
        return a, (a, c), (a, b)
    if not b.is_zero():
        return b, (b, d), (ScalarPoly.zero(b.field, b.n), b)
    if not c.is_zero():
        return c, (ScalarPoly.zero(c.field, c.n), c), (c, d)
    return d, (ScalarPoly.zero(d.field, d.n), d), (ScalarPoly.zero(d.field, d.n), d)


def factorize_width2(r: Roabp) -> Width2Factorization:
    """Factor a width-2 instance through its singular layers.

    Each singular nonzero layer is a rank-1 product (column)(row)/entry;
    cutting there yields a chain of invertible-factor instances whose
    product is alpha times the original polynomial.
    """
    if r.width != 2:
        raise PreconditionError(f"width-2 only; got width {r.width}")
    field, n = r.field, r.n
    singular: list[int] = []
    splits: dict[int, tuple] = {}
    alpha = ScalarPoly.const(field, n, 1)
    for i, layer in enumerate(r.layers):
        if layer.is_zero():
            return Width2Factorization(
                alpha=ScalarPoly.const(field, n, 1),
                chain=(),
                split_layers=(i,),
                is_zero=True,
            )
        det = det_poly(layer.entry_grid())
        if det.is_zero():
            entry, col, row = _rank_one_split(layer)
            for rr in range(2):
                for cc in range(2):
                    if not (col[rr] * row[cc] == layer.entry(rr, cc) * entry):
                        raise InternalInconsistencyError("rank-1 split failed")
            singular.append(i)
            splits[i] = (entry, col, row)
            alpha = alpha * entry
    if not singular:
        return Width2Factorization(alpha=ScalarPoly.const(field, n, 1), chain=(r,), split_layers=())
    chain = []
    prev_left_boundary = r.left_boundary
    prev_left_block = r.left_block
    start = 0
    for idx in singular:
        _, col, row = splits[idx]
        block = r.blocks[idx]
        piece = Roabp(
            field,
            n,
            2,
            r.blocks[start:idx],
            r.layers[start:idx],
            prev_left_boundary,
            tuple(col),
            prev_left_block,
            block,
        )
        chain.append(piece)
        prev_left_boundary = tuple(row)
        prev_left_block = block
        start = idx + 1
    chain.append(
        Roabp(
            field,
            n,
            2,
            r.blocks[start:],
            r.layers[start:],
            prev_left_boundary,
            r.right_boundary,
            prev_left_block,
            r.right_block,
        )
    )
    return Width2Factorization(
        alpha=alpha, chain=tuple(chain), split_layers=tuple(singular)
    )


@dataclass(frozen=True)
class LagrangeCurve:
    """The degree-(h-1) vector curve through anchor points alpha_i at nodes
    beta_i, so curve(beta_i) = alpha_i exactly."""

    field: Field
    anchors: tuple
    nodes: tuple

    def __post_init__(self) -> None:
        anchors = tuple(tuple(a) for a in self.anchors)
        nodes = tuple(int(b) % self.field.p for b in self.nodes)
        if len(anchors) != len(nodes):
            raise StructuralError("anchor/node count mismatch")
        if not anchors:
            raise StructuralError("need at least one anchor")
        if len(set(nodes)) != len(nodes):
            raise StructuralError("interpolation nodes must be distinct")
        if self.field.p <= len(anchors):
            raise ModulusTooSmallError(
                f"modulus {self.field.p} too small for {len(anchors)} nodes"
            )
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "nodes", nodes)
        # barycentric weights 1 / prod_{j != i} (beta_i - beta_j)
        p = self.field.p
        weights = []
        for i, bi in enumerate(nodes):
            den = 1
            for j, bj in enumerate(nodes):
                if j != i:
                    den = (den * (bi - bj)) % p
            weights.append(self.field.inv(den))
        object.__setattr__(self, "_weights", tuple(weights))

    def eval_at(self, u: int) -> tuple[int, ...]:
        p = self.field.p
        u %= p
        h = len(self.anchors)
        n = len(self.anchors[0])
        for i, b in enumerate(self.nodes):
            if u == b:
                return self.anchors[i]
        prefix = [1] * (h + 1)
        for j in range(h):
            prefix[j + 1] = (prefix[j] * (u - self.nodes[j])) % p
        suffix = [1] * (h + 1)
        for j in range(h - 1, -1, -1):
            suffix[j] = (suffix[j + 1] * (u - self.nodes[j])) % p
        out = [0] * n
        for i in range(h):
            lag = (self._weights[i] * prefix[i]) % p
            lag = (lag * suffix[i + 1]) % p
            if lag:
                anchor = self.anchors[i]
                for v in range(n):
                    if anchor[v]:
                        out[v] = (out[v] + lag * anchor[v]) % p
        return tuple(out)


def lagrange_curve(points: Sequence[Sequence[int]], nodes: Sequence[int], field: Field) -> LagrangeCurve:
    return LagrangeCurve(field, tuple(tuple(pt) for pt in points), tuple(nodes))


def _curve_sweep(
    anchor_points: list, n: int, d: int, delta: int, field: Field, extra: dict
) -> PointSet:
    h = len(anchor_points)
    per_factor_degree = (d + 2) * delta
    count = 1 + (d + 2) * per_factor_degree * h
    if field.p <= max(count - 1, h):
        raise ModulusTooSmallError(
            f"curve sweep needs {count} distinct values, modulus {field.p} too small"
        )
    curve = lagrange_curve(anchor_points, list(range(h)), field)
    points = tuple(curve.eval_at(u) for u in range(count))
    provenance = {
        "generator": "width2_hitting_set",
        "n": n,
        "d": d,
        "delta": delta,
        "anchor_count": h,
        "per_factor_degree": per_factor_degree,
        "count": count,
        **extra,
    }
    return PointSet(n, points, provenance)


def width2_hitting_set(
    r: Roabp,
    c0: int = DEFAULT_CUTOFF_CONSTANT,
    expand_ceiling: int = EXPAND_CEILING,
) -> PointSet:
    """Hitting set for any width-2 sparse-factor instance, singular layers
    included.

    Factorizes through singular layers, takes the union H of the chain
    elements' invertible hitting sets, and sweeps the Lagrange curve
    through H at exactly 1 + (d+2) * Delta * |H| parameter values, where
    Delta = (d+2) * delta conservatively bounds each factor's total degree.
    """
    fact = factorize_width2(r)
    if fact.is_zero:
        return PointSet(
            r.n,
            (),
            {
                "generator": "width2_hitting_set",
                "zero_certificate": True,
                "zero_layer": fact.split_layers[0],
            },
        )
    anchor_points: list[tuple[int, ...]] = []
    for piece in fact.chain:
        anchor_points.extend(
            invertible_hitting_set(piece, "whitebox", c0, expand_ceiling).points
        )
    return _curve_sweep(
        anchor_points,
        r.n,
        r.d,
        r.delta,
        r.field,
        {"factors": len(fact.chain), "split_layers": list(fact.split_layers)},
    )


def width2_hitting_set_params(
    n: int,
    d: int,
    delta: int,
    s: int,
    mu: int,
    field: Field,
    c0: int = DEFAULT_CUTOFF_CONSTANT,
) -> PointSet:
    """Parameter-only width-2 hitting set: the Lagrange curve through the
    blackbox invertible-class set covers every chain factor of every
    width-2 instance with the declared parameters."""
    anchors = invertible_hitting_set_params(n, d, 2, delta, s, mu, field, c0)
    return _curve_sweep(
        list(anchors.points), n, d, delta, field, {"mode": "blackbox"}
    )
