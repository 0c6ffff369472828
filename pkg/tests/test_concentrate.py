"""Concentration ranks, concentrating shifts, width-2 factorization, and
the composed hitting sets."""

import itertools
import math
import random
from dataclasses import replace

import pytest

from pitkit.algebra import (
    Field,
    MatPoly,
    ScalarPoly,
    det_poly,
    mat_flatten,
    rank_over_field,
)
from pitkit.concentrate import (
    block_support,
    concentration_rank,
    factorize_width2,
    find_concentrating_shift,
    invertible_hitting_set,
    lagrange_curve,
    low_support_hitting_set,
    support_parameter,
    width2_hitting_set,
)
from pitkit.errors import PreconditionError, StructuralError
from pitkit.roabp import Roabp
from pitkit.verify import InstanceSpec, generate_instance, verify_hitting_property

F7 = Field(7)
F = Field(10007)


def invertible_constant_instance(seed, n=4, d=3, s=3, delta=2):
    spec = InstanceSpec(
        klass="invertible-roabp", seed=seed, n=n, d=d, w=2, s=s, delta=delta,
        mu=1, invertible_constant=True, nonzero=False,
    )
    return generate_instance(spec)


# ---------------------------------------------------------------------------
# support parameter and block support


def test_support_parameter_values():
    assert support_parameter(2, 4, 1) == 3
    assert support_parameter(2, 4, None) == 9
    assert support_parameter(1, 1, None) == 1


def test_block_support_counts_contributing_blocks():
    blocks = [(0, 1), (2,), (3,)]
    assert block_support((1, 0, 0, 0), blocks) == frozenset({0})
    assert block_support((0, 1, 2, 0), blocks) == frozenset({0, 1})
    assert block_support((0, 0, 0, 0), blocks) == frozenset()


# ---------------------------------------------------------------------------
# concentration ranks


def test_constant_polynomial_concentrates_everywhere():
    d = MatPoly.constant(F7, 2, ((1, 2), (3, 4)))
    assert concentration_rank(d, 1, "support") == (1, 1)
    assert concentration_rank(d, 5, "support") == (1, 1)


def test_block_mode_requires_blocks():
    d = MatPoly.constant(F7, 2, ((1, 0), (0, 1)))
    with pytest.raises(StructuralError):
        concentration_rank(d, 2, "block")


def test_block_concentration_of_invertible_products():
    # products of layers with invertible constant terms concentrate at
    # block-support w^2
    for seed in range(25):
        inst = invertible_constant_instance(seed, d=3 + seed % 2)
        product, scalar = inst.expand()
        low, full = concentration_rank(
            product, 4, "block", blocks=list(inst.blocks)
        )
        assert low == full
        # the contracted polynomial concentrates at w^2 + 2 with boundaries
        low_c, full_c = concentration_rank(
            scalar, 6, "block", blocks=inst.all_blocks()
        )
        assert low_c == full_c


def test_child_to_parent_and_block_w2_rank_facts():
    for seed in range(12):
        inst = invertible_constant_instance(seed, n=4, d=4, s=2, delta=1)
        product, _ = inst.expand()
        blocks = list(inst.blocks)
        vectors = {e: mat_flatten(m) for e, m in product.terms.items()}

        def descend_span(e):
            bs = block_support(e, blocks)
            return [
                vec
                for f, vec in vectors.items()
                if block_support(f, blocks) < bs
            ]

        for e, vec in vectors.items():
            bs = block_support(e, blocks)
            if len(bs) == 4:
                # block-support w^2 coefficients depend on strictly smaller
                # block support
                smaller = [
                    v
                    for f, v in vectors.items()
                    if len(block_support(f, blocks)) < 4
                ]
                assert rank_over_field(smaller + [vec], inst.field) == rank_over_field(
                    smaller, inst.field
                )
        # child-to-parent lift on sampled pairs
        for e, vec in vectors.items():
            bs = block_support(e, blocks)
            if not bs:
                continue
            span = descend_span(e)
            dependent = rank_over_field(span + [vec], inst.field) == rank_over_field(
                span, inst.field
            )
            if not dependent:
                continue
            for f, pvec in vectors.items():
                bsf = block_support(f, blocks)
                j_extra = bsf - bs
                if len(j_extra) != 1 or not bs < bsf:
                    continue
                j = next(iter(j_extra))
                if not (j > max(bs) or j < min(bs)):
                    continue
                shared = [i for i in range(4) if i not in (j,)]
                if any(
                    tuple(e[v] for v in blocks[i]) != tuple(f[v] for v in blocks[i])
                    for i in bs
                ):
                    continue
                pspan = descend_span(f)
                assert rank_over_field(
                    pspan + [pvec], inst.field
                ) == rank_over_field(pspan, inst.field)


def test_composition_of_concentrations():
    # block concentration at L and factor support concentration at l' give
    # support concentration at (L-1)(l'-1)+1
    for seed in range(8):
        inst = invertible_constant_instance(seed, n=4, d=3, s=2, delta=1)
        _, scalar = inst.expand()
        blocks = inst.all_blocks()
        big_l = None
        for cand in range(1, len(blocks) + 2):
            low, full = concentration_rank(scalar, cand, "block", blocks=blocks)
            if low == full:
                big_l = cand
                break
        assert big_l is not None
        ell_prime = None
        factors = [*inst.layers]
        for cand in range(1, inst.n + 2):
            if all(
                concentration_rank(f, cand, "support")[0]
                == concentration_rank(f, cand, "support")[1]
                for f in factors
            ):
                ell_prime = cand
                break
        assert ell_prime is not None
        bound = (big_l - 1) * (ell_prime - 1) + 1
        low, full = concentration_rank(scalar, bound, "support")
        assert low == full


# ---------------------------------------------------------------------------
# shifts


def test_shift_found_for_univariate_layers():
    inst = invertible_constant_instance(2, n=3, d=3, s=2, delta=1)
    shift, t0 = find_concentrating_shift(inst)
    assert all(a >= 1 for a in shift.exponents)
    assert t0 >= 1


def test_singular_layer_rejected():
    sing = MatPoly(F, 2, 2, {(0, 0): ((1, 2), (2, 4))})
    inv = MatPoly.identity(F, 2, 2)
    r = Roabp.with_constant_boundaries(F, 2, [(0,), (1,)], [sing, inv], (1, 1), (1, 1))
    with pytest.raises(PreconditionError):
        find_concentrating_shift(r)


def test_shift_verified_on_random_invertible_instances():
    for seed in range(20):
        spec = InstanceSpec(
            klass="invertible-roabp", seed=seed, n=2 + seed % 4,
            d=1 + seed % 3, w=2, s=1 + seed % 3, delta=1 + seed % 2, mu=1,
        )
        spec = replace(spec, d=min(spec.d, spec.n))
        inst = generate_instance(spec)
        shift, t0 = find_concentrating_shift(inst)
        offsets = shift.offsets_at(t0, inst.field)
        shifted = inst.shift(offsets)
        _, scalar = shifted.expand()
        ell = support_parameter(2, max(1, inst.layer_sparsity), inst.layer_support)
        low, full = concentration_rank(scalar, ell * 6, "support")
        assert low == full
        # every shifted factor is support-concentrated at ell
        for layer in shifted.layers:
            lo, fu = concentration_rank(layer, ell, "support")
            assert lo == fu


def _shifted_low_support_rows(layer, exponents, ell):
    """Coefficient vectors of the shifted layer's low-support x-monomials,
    each entry a polynomial in t (built symbolically)."""
    n = layer.n
    field = layer.field
    rows: dict[tuple, list[ScalarPoly]] = {}
    zero_t = ScalarPoly.zero(field, 1)
    for e, matrix in layer.terms.items():
        options = []
        for v, exp in enumerate(e):
            if exp == 0:
                options.append([(0, ScalarPoly.const(field, 1, 1))])
                continue
            opts = []
            for f in range(exp + 1):
                t_exp = (exp - f) * exponents[v]
                coeff = math.comb(exp, f)
                opts.append((f, ScalarPoly(field, 1, {(t_exp,): coeff})))
            options.append(opts)
        for combo in itertools.product(*options):
            target = tuple(f for f, _ in combo)
            if sum(1 for f in target if f) >= ell:
                continue
            scale = ScalarPoly.const(field, 1, 1)
            for _, tpoly in combo:
                scale = scale * tpoly
            if target not in rows:
                rows[target] = [zero_t] * 4
            flat = mat_flatten(matrix)
            rows[target] = [
                acc + scale.scale(c) for acc, c in zip(rows[target], flat)
            ]
    return [row for row in rows.values() if any(not p.is_zero() for p in row)]


def _symbolic_rank_over_ft(rows, field):
    """Largest r with a nonzero r-by-r minor (minors are dets of grids of
    univariate polynomials in t)."""
    if not rows:
        return 0
    cols = len(rows[0])
    for r in range(min(len(rows), cols), 0, -1):
        for row_idx in itertools.combinations(range(len(rows)), r):
            for col_idx in itertools.combinations(range(cols), r):
                grid = [[rows[i][j] for j in col_idx] for i in row_idx]
                if not det_poly(grid).is_zero():
                    return r
    return 0


def test_specialized_rank_reaches_symbolic_rank():
    # the max specialized rank over the t0 sweep equals the rank over F(t)
    inst = invertible_constant_instance(4, n=3, d=2, s=2, delta=1)
    shift, _ = find_concentrating_shift(inst)
    ell = support_parameter(2, max(1, inst.layer_sparsity), inst.layer_support)
    for layer in inst.layers:
        rows = _shifted_low_support_rows(layer, shift.exponents, ell)
        symbolic = _symbolic_rank_over_ft(rows, inst.field)
        max_a = max(shift.exponents)
        best = 0
        for t0 in range(1, 2 + 4 * inst.n * max(1, inst.delta) * max_a):
            shifted = layer.shift(shift.offsets_at(t0, inst.field))
            low, _ = concentration_rank(shifted, ell, "support")
            best = max(best, low)
            if best == symbolic:
                break
        assert best == symbolic


# ---------------------------------------------------------------------------
# low-support grid


def test_low_support_sizes():
    assert len(low_support_hitting_set(3, 1, 2, F)) == 6
    ps = low_support_hitting_set(3, 1, 1, F)
    assert len(ps) == 1 and ps.points[0] == (0, 0, 0)
    assert len(low_support_hitting_set(4, 2, 3, F)) == math.comb(4, 2) * 9


def test_low_support_hits_low_support_witness():
    rnd = random.Random(51)
    for _ in range(20):
        n, delta, ell = 5, 2, 3
        support = tuple(sorted(rnd.sample(range(n), ell - 1)))
        e = [0] * n
        for v in support:
            e[v] = rnd.randint(1, delta)
        terms = {tuple(e): rnd.randint(1, 10006)}
        # extra high-support noise monomials
        full = [0] * n
        for v in range(n):
            full[v] = rnd.randint(1, delta)
        terms.setdefault(tuple(full), rnd.randint(1, 10006))
        poly = ScalarPoly(F, n, terms)
        points = low_support_hitting_set(n, delta, ell, F)
        assert any(poly.eval_at(pt) for pt in points)


# ---------------------------------------------------------------------------
# invertible hitting set


def test_blackbox_invertible_params_tiny():
    # parameter-only family: every invertible instance with the declared
    # parameters is hit, and the size is the exact product formula
    from pitkit.concentrate import invertible_hitting_set_params

    big = Field(1000003)
    points = invertible_hitting_set_params(1, 1, 2, 1, 1, 1, big)
    prov = points.provenance
    assert len(points) == prov["grid"] * prov["t_sweep"] * prov["maps"]
    for seed in range(5):
        spec = InstanceSpec(
            klass="invertible-roabp", seed=seed, modulus=big.p,
            n=1, d=1, w=2, s=1, delta=1, mu=1,
        )
        inst = generate_instance(spec)
        report = verify_hitting_property(inst, points)
        assert report.passed and not report.vacuous


def test_blackbox_width2_params_tiny():
    from pitkit.concentrate import width2_hitting_set_params

    big = Field(1000003)
    points = width2_hitting_set_params(1, 1, 1, 1, 1, big)
    prov = points.provenance
    assert len(points) == prov["count"]
    for seed in range(5):
        spec = InstanceSpec(
            klass="width2-roabp", seed=seed, modulus=big.p,
            n=1, d=1, w=2, s=1, delta=1, mu=1,
            force_singular=(seed % 2 == 0),
        )
        inst = generate_instance(spec)
        report = verify_hitting_property(inst, points)
        assert report.passed and not report.vacuous


def test_invertible_hitting_set_campaign():
    hits = 0
    for seed in range(25):
        spec = InstanceSpec(
            klass="invertible-roabp", seed=seed, n=2 + seed % 4,
            d=1 + seed % 3, w=2, s=1 + seed % 3, delta=1 + seed % 2, mu=1,
        )
        spec = replace(spec, d=min(spec.d, spec.n))
        inst = generate_instance(spec)
        points = invertible_hitting_set(inst)
        prov = points.provenance
        assert len(points) == prov["grid"] * prov["t_sweep"] * prov["maps"]
        report = verify_hitting_property(inst, points)
        assert report.passed and not report.vacuous
        hits += 1
    assert hits == 25


# ---------------------------------------------------------------------------
# width-2 factorization


def test_rank_one_split_worked_example():
    sing = MatPoly(F7, 2, 2, {(0, 0): ((1, 2), (3, 6))})
    inv = MatPoly.identity(F7, 2, 2)
    r = Roabp.with_constant_boundaries(F7, 2, [(0,), (1,)], [sing, inv], (1, 1), (1, 1))
    fact = factorize_width2(r)
    assert not fact.is_zero
    assert fact.split_layers == (0,)
    assert fact.alpha.terms == {(0, 0): 1}
    assert len(fact.chain) == 2
    left = fact.chain[0]
    col = [p.terms.get((0, 0), 0) for p in left.right_boundary]
    assert col == [1, 3]


def test_all_invertible_chain_is_identity_factorization():
    inst = invertible_constant_instance(7, n=3, d=2, s=2, delta=1)
    fact = factorize_width2(inst)
    assert fact.split_layers == ()
    assert len(fact.chain) == 1 and fact.chain[0] is inst
    assert fact.alpha.terms == {(0, 0, 0): 1}


def test_zero_layer_gives_zero_certificate():
    zero = MatPoly.zero(F7, 2, 2)
    inv = MatPoly.identity(F7, 2, 2)
    r = Roabp.with_constant_boundaries(F7, 2, [(0,), (1,)], [zero, inv], (1, 1), (1, 1))
    fact = factorize_width2(r)
    assert fact.is_zero
    _, scalar = r.expand()
    assert scalar.is_zero()


def test_factorization_identity_at_random_points():
    rnd = random.Random(61)
    for seed in range(15):
        spec = InstanceSpec(
            klass="width2-roabp", seed=seed, n=3, d=3, w=2, s=2, delta=1,
            mu=1, force_singular=True, nonzero=False,
        )
        inst = generate_instance(spec)
        fact = factorize_width2(inst)
        if fact.is_zero:
            continue
        for _ in range(100):
            pt = [rnd.randint(0, 10006) for _ in range(3)]
            lhs = (fact.alpha.eval_at(pt) * inst.evaluate(pt)) % F.p
            rhs = 1
            for piece in fact.chain:
                rhs = (rhs * piece.evaluate(pt)) % F.p
            assert lhs == rhs


def test_width2_requires_width_two():
    spec = InstanceSpec(klass="roabp", seed=0, n=3, d=2, w=3, s=2, delta=1)
    inst = generate_instance(spec)
    with pytest.raises(PreconditionError):
        factorize_width2(inst)


# ---------------------------------------------------------------------------
# lagrange curve


def test_curve_single_point_is_constant():
    curve = lagrange_curve([(5, 6)], [0], F7)
    assert curve.eval_at(3) == (5, 6)


def test_curve_two_points_nodes_zero_one():
    curve = lagrange_curve([(1, 2), (3, 4)], [0, 1], F7)
    assert curve.eval_at(0) == (1, 2)
    assert curve.eval_at(1) == (3, 4)


def test_curve_interpolates_random_points():
    rnd = random.Random(71)
    pts = [tuple(rnd.randint(0, 100) for _ in range(3)) for _ in range(4)]
    nodes = [2, 5, 9, 11]
    curve = lagrange_curve(pts, nodes, Field(101))
    for node, pt in zip(nodes, pts):
        assert curve.eval_at(node) == pt


def test_curve_rejects_repeated_nodes():
    with pytest.raises(StructuralError):
        lagrange_curve([(1,), (2,)], [3, 3], F7)


# ---------------------------------------------------------------------------
# width-2 hitting set


def test_width2_hitting_campaign():
    for seed in range(20):
        spec = InstanceSpec(
            klass="width2-roabp", seed=seed, n=2 + seed % 3, d=1 + seed % 3,
            w=2, s=2, delta=1, mu=1, force_singular=(seed % 2 == 0),
        )
        spec = replace(spec, d=min(spec.d, spec.n))
        inst = generate_instance(spec)
        points = width2_hitting_set(inst)
        prov = points.provenance
        expected = 1 + (inst.d + 2) * prov["per_factor_degree"] * prov["anchor_count"]
        assert len(points) == expected
        report = verify_hitting_property(inst, points)
        assert report.passed and not report.vacuous


def test_width2_all_invertible_curve_passes_through_anchor_witness():
    inst = invertible_constant_instance(9, n=3, d=2, s=2, delta=1)
    direct = invertible_hitting_set(inst)
    assert any(inst.evaluate(pt) for pt in direct)
    swept = width2_hitting_set(inst)
    assert any(inst.evaluate(pt) for pt in swept)


def test_width2_adjacent_singular_layers():
    # two cuts in a row leave a chain piece with no interior layers; the
    # sweep needs a field larger than the conservative degree formula
    big = Field(1000003)
    rnd = random.Random(5)

    def rank1_layer(n, var):
        e = [0] * n
        e[var] = 1
        col = (
            ScalarPoly(big, n, {tuple(e): rnd.randint(1, 10006)}),
            ScalarPoly(big, n, {(0,) * n: rnd.randint(1, 10006)}),
        )
        row = (
            ScalarPoly(big, n, {(0,) * n: rnd.randint(1, 10006)}),
            ScalarPoly(big, n, {tuple(e): rnd.randint(1, 10006)}),
        )
        return MatPoly.from_entries(
            [[col[i] * row[j] for j in range(2)] for i in range(2)]
        )

    def inv_layer(n, var):
        e = [0] * n
        e[var] = 1
        return MatPoly(
            big, n, 2, {(0,) * n: ((3, 1), (1, 2)), tuple(e): ((1, 0), (0, 1))}
        )

    n = 4
    layers = [inv_layer(n, 0), rank1_layer(n, 1), rank1_layer(n, 2), inv_layer(n, 3)]
    r = Roabp.with_constant_boundaries(
        big, n, [(0,), (1,), (2,), (3,)], layers, (1, 2), (3, 1)
    )
    fact = factorize_width2(r)
    assert fact.split_layers == (1, 2)
    assert fact.chain[1].d == 0
    for _ in range(50):
        pt = [rnd.randint(0, big.p - 1) for _ in range(n)]
        lhs = (fact.alpha.eval_at(pt) * r.evaluate(pt)) % big.p
        rhs = 1
        for piece in fact.chain:
            rhs = (rhs * piece.evaluate(pt)) % big.p
        assert lhs == rhs
    report = verify_hitting_property(r, width2_hitting_set(r))
    assert report.passed and not report.vacuous
