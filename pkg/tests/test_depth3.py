"""Partitions, distance, the ROABP reduction, base sets, and the whitebox
sum-of-set-multilinear test."""

import math
import random

import pytest

from pitkit.algebra import Field, ScalarPoly
from pitkit.depth3 import (
    Depth3Circuit,
    Gate,
    LinearForm,
    Partition,
    base_set_hitting_points,
    circuit_to_roabp,
    compute_distance,
    decompose_base_sets,
    friendly_neighborhoods,
    minimal_distance_order,
    sparse_to_roabp,
    sum_sml_whitebox_test,
)
from pitkit.errors import PreconditionError, StructuralError
from pitkit.verify import InstanceSpec, generate_instance, oracle_is_zero

F = Field(10007)


def rows_partition(side):
    return Partition.of_lists(
        [[side * r + c for c in range(side)] for r in range(side)]
    )


def residues_partition(side):
    return Partition.of_lists(
        [[side * r + c for r in range(side)] for c in range(side)]
    )


# ---------------------------------------------------------------------------
# neighborhoods and distance


def test_first_partition_colors_are_their_own_classes():
    part = Partition.of_lists([[0, 1], [2], [3, 4]])
    classes = friendly_neighborhoods([part], 0)
    assert sorted(len(k) for k in classes) == [1, 1, 1]


def test_singleton_then_pairs_has_distance_one():
    singles = Partition.of_lists([[v] for v in range(6)])
    pairs = Partition.of_lists([[0, 1], [2, 3], [4, 5]])
    classes = friendly_neighborhoods([singles, pairs], 1)
    assert all(len(k) == 1 for k in classes)
    assert compute_distance([singles, pairs]) == 1


def test_rows_then_residues_merge_into_one_class():
    seq = [rows_partition(3), residues_partition(3)]
    classes = friendly_neighborhoods(seq, 1)
    assert len(classes) == 1 and len(classes[0]) == 3
    assert compute_distance(seq) == 3


def test_identical_partitions_distance_one():
    part = rows_partition(3)
    assert compute_distance([part, part, part]) == 1


def test_singleton_sequence_distance_one():
    assert compute_distance([rows_partition(3)]) == 1


def test_distance_invariant_under_relabeling():
    rnd = random.Random(17)
    p1 = Partition.of_lists([[0, 1, 2], [3, 4], [5]])
    p2 = Partition.of_lists([[0, 3], [1, 4], [2, 5]])
    base = compute_distance([p1, p2])
    perm = rnd.sample(range(6), 6)
    q1 = Partition.of_lists([[perm[v] for v in c] for c in p1.colors])
    q2 = Partition.of_lists([[perm[v] for v in c] for c in p2.colors])
    assert compute_distance([q1, q2]) == base


def bruteforce_distance(seq):
    """Definition-level search: for each color, the smallest color set
    containing it whose variable union is exactly partitioned above."""
    import itertools as it

    worst = 1
    for j in range(1, len(seq)):
        colors = seq[j].colors
        for anchor in colors:
            best = None
            others = [c for c in colors if c != anchor]
            for size in range(0, len(others) + 1):
                if best is not None:
                    break
                for extra in it.combinations(others, size):
                    union = frozenset(anchor).union(*extra) if extra else frozenset(anchor)
                    exact = all(
                        not (c & union) or c <= union
                        for upper in seq[:j]
                        for c in upper.colors
                    )
                    if exact:
                        best = 1 + size
                        break
            worst = max(worst, best)
    return worst


def test_distance_matches_bruteforce_minimal_sets():
    rnd = random.Random(47)
    for _ in range(25):
        n = rnd.randint(3, 7)
        k = rnd.randint(2, 3)
        seq = [random_partition(rnd, n, rnd.randint(2, 4)) for _ in range(k)]
        assert compute_distance(seq) == bruteforce_distance(seq)


def test_inconsistent_grounds_rejected():
    p1 = Partition.of_lists([[0, 1]])
    p2 = Partition.of_lists([[0, 1, 2]])
    with pytest.raises(StructuralError):
        compute_distance([p1, p2])


# ---------------------------------------------------------------------------
# sparse polynomial reduction


def test_sparse_to_roabp_single_monomial():
    f = ScalarPoly(F, 2, {(1, 1): 1})
    r = sparse_to_roabp(f, [0, 1])
    assert r.width == 1
    _, scalar = r.expand()
    assert scalar == f


def test_sparse_to_roabp_zero_polynomial():
    r = sparse_to_roabp(ScalarPoly.zero(F, 2), [0, 1])
    assert r.width == 0
    assert r.evaluate([5, 9]) == 0


def test_sparse_to_roabp_any_order():
    rnd = random.Random(23)
    for _ in range(10):
        terms = {}
        while len(terms) < 4:
            e = tuple(rnd.randint(0, 1) for _ in range(4))
            terms[e] = rnd.randint(1, 10006)
        f = ScalarPoly(F, 4, terms)
        for order in ([3, 2, 1, 0], [1, 3, 0, 2]):
            r = sparse_to_roabp(f, order)
            assert r.width == f.sparsity
            _, scalar = r.expand()
            assert scalar == f


def test_sparse_to_roabp_rejects_nonmultilinear():
    f = ScalarPoly(F, 1, {(2,): 1})
    with pytest.raises(PreconditionError):
        sparse_to_roabp(f, [0])


# ---------------------------------------------------------------------------
# circuit reduction


def test_k1_set_multilinear_width_is_max_form_sparsity():
    gate = Gate(3, (LinearForm(1, {0: 2, 1: 5}), LinearForm(0, {2: 1})))
    c = Depth3Circuit(F, 3, (gate,))
    r = circuit_to_roabp(c)
    assert r.width == 3
    _, scalar = r.expand()
    assert scalar == c.expand()


def test_distance_one_pair_width_bound():
    g1 = Gate(
        1,
        (LinearForm(0, {0: 1}), LinearForm(0, {1: 1}), LinearForm(1, {2: 2, 3: 1})),
    )
    g2 = Gate(
        5,
        (LinearForm(2, {0: 1, 1: 3}), LinearForm(1, {2: 1}), LinearForm(0, {3: 4})),
    )
    c = Depth3Circuit(F, 4, (g1, g2))
    parts = [c.gate_partition(i) for i in range(2)]
    _, dist = minimal_distance_order(parts)
    r = circuit_to_roabp(c)
    _, scalar = r.expand()
    assert scalar == c.expand()
    # width <= sum over gates of the largest neighborhood product sparsity
    assert r.width <= c.k * (c.n + 1) ** dist


def test_random_low_distance_reductions():
    for seed in range(25):
        circuit = generate_instance(
            InstanceSpec(klass="depth3-distance", seed=seed, n=4 + seed % 5, k=1 + seed % 3, delta=2)
        )
        parts = [circuit.gate_partition(i) for i in range(circuit.k)]
        order, dist = minimal_distance_order(parts)
        assert dist <= 2
        r = circuit_to_roabp(circuit, gate_order=order, expected_distance=2)
        _, scalar = r.expand()
        assert scalar == circuit.expand()
        assert r.width <= circuit.k * (circuit.n + 1) ** dist


def test_expected_distance_enforced():
    seq = [rows_partition(3), residues_partition(3)]
    gates = []
    for part in seq:
        forms = tuple(
            LinearForm(1, {v: 1 for v in color}) for color in part.colors
        )
        gates.append(Gate(1, forms))
    c = Depth3Circuit(F, 9, tuple(gates))
    with pytest.raises(PreconditionError):
        circuit_to_roabp(c, gate_order=[0, 1], expected_distance=1)


def test_gates_with_omitted_variables_pad_as_singletons():
    gate = Gate(2, (LinearForm(0, {0: 1, 1: 1}),))
    c = Depth3Circuit(F, 4, (gate,))
    part = c.gate_partition(0)
    assert frozenset([2]) in part.colors and frozenset([3]) in part.colors
    r = circuit_to_roabp(c)
    _, scalar = r.expand()
    assert scalar == c.expand()


# ---------------------------------------------------------------------------
# base sets


def test_single_partition_single_base_set():
    dec = decompose_base_sets([rows_partition(3)])
    assert dec.m == 1
    assert dec.within_cap()
    assert dec.certificates[0].distance == 1


def test_rows_residues_decomposition():
    side = 3
    dec = decompose_base_sets([rows_partition(side), residues_partition(side)])
    assert dec.m == 3
    assert dec.m <= 2 * math.isqrt(9)
    assert all(len(b) == 3 for b in dec.base_sets)
    assert dec.within_cap()


def test_tightness_instances():
    for side in (3, 4, 5):
        n = side * side
        dec = decompose_base_sets([rows_partition(side), residues_partition(side)])
        root = math.isqrt(n)
        assert root <= dec.m <= 2 * root
        # every distance-1 base set here has at most sqrt(n) variables
        assert all(len(b) <= root for b in dec.base_sets)


def random_partition(rnd, n, colors):
    assignment = [rnd.randrange(colors) for _ in range(n)]
    buckets = {}
    for v, c in enumerate(assignment):
        buckets.setdefault(c, []).append(v)
    return Partition.of_lists(list(buckets.values()))


def test_random_families_respect_cap():
    rnd = random.Random(31)
    for _ in range(30):
        c = rnd.choice([2, 3])
        n = rnd.choice([16, 36, 64])
        parts = [random_partition(rnd, n, rnd.randint(2, 6)) for _ in range(c)]
        dec = decompose_base_sets(parts)
        assert dec.within_cap()
        assert dec.m < 2 ** (c - 1) * n ** (1 - 1 / 2 ** (c - 1))
        covered = set()
        for cert in dec.certificates:
            assert cert.distance == 1
            assert not (cert.base_set & covered)
            covered |= cert.base_set
        assert covered == set(range(n))


# ---------------------------------------------------------------------------
# whitebox sum test


def test_cancelled_gates_verdict_zero():
    form_a = LinearForm(1, {0: 2})
    form_b = LinearForm(3, {1: 1, 2: 5})
    c = Depth3Circuit(
        F, 3, (Gate(4, (form_a, form_b)), Gate(-4, (form_a, form_b)))
    )
    verdict, witness = sum_sml_whitebox_test(c)
    assert verdict == "zero" and witness is None


def test_single_nonzero_gate_verdict():
    c = Depth3Circuit(F, 3, (Gate(4, (LinearForm(1, {0: 2}), LinearForm(3, {1: 1, 2: 5})),),))
    verdict, witness = sum_sml_whitebox_test(c)
    assert verdict == "nonzero"
    assert c.eval_at(witness) != 0


def test_verdicts_match_oracle_on_random_instances():
    for seed in range(30):
        spec = InstanceSpec(
            klass="sum-sml", seed=seed, n=3 + seed % 7, k=1 + seed % 3,
            c=1 + seed % 3, engineered_zero=(seed % 2 == 0),
        )
        circuit = generate_instance(spec)
        verdict, witness = sum_sml_whitebox_test(circuit)
        assert verdict == ("zero" if oracle_is_zero(circuit) else "nonzero")
        if verdict == "nonzero":
            assert circuit.eval_at(witness) != 0


def test_neighborhood_partitions_form_refinement_chain():
    from pitkit.depth3 import _neighborhood_partitions

    seq = [
        Partition.of_lists([[0], [1], [2], [3], [4], [5]]),
        Partition.of_lists([[0, 1], [2, 3], [4, 5]]),
        Partition.of_lists([[0, 2], [1, 3], [4], [5]]),
    ]
    primed = _neighborhood_partitions(seq)
    for earlier, later in zip(primed, primed[1:]):
        for color in earlier.colors:
            assert any(color <= big for big in later.colors)


def test_restriction_fixes_outside_variables():
    circuit = generate_instance(
        InstanceSpec(klass="sum-sml", seed=3, n=6, k=2, c=2)
    )
    rnd = random.Random(2)
    outside = [rnd.randint(0, 10006) for _ in range(6)]
    base = {1, 4}
    restricted = circuit.restrict(base, outside)
    for _ in range(20):
        pt = list(outside)
        for v in base:
            pt[v] = rnd.randint(0, 10006)
        assert restricted.eval_at(pt) == circuit.eval_at(pt)


def test_base_points_hit_multilinear_restrictions():
    rnd = random.Random(41)
    base = [1, 3, 4]
    points = base_set_hitting_points(base, F)
    assert len(points) == 8
    for _ in range(20):
        terms = {}
        for mask in range(8):
            if rnd.randint(0, 1):
                e = [0] * 5
                for j, v in enumerate(base):
                    if mask >> j & 1:
                        e[v] = 1
                terms[tuple(e)] = rnd.randint(1, 10006)
        poly = ScalarPoly(F, 5, terms)
        if poly.is_zero():
            continue
        hit = False
        for assignment in points:
            pt = [0] * 5
            for v, val in assignment.items():
                pt[v] = val
            if poly.eval_at(pt):
                hit = True
                break
        assert hit
