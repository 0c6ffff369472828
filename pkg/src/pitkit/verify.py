"""Seeded instance generators, exhaustive zero oracles, and campaign
harnesses.

All randomness comes from a counter-based stream: draw i of a stream seeded
with s is derived from SHA-256(f"{s}:{i}".encode()), consumed 8 bytes at a
time, each 64-bit chunk reduced modulo the requested range.  The algorithm
is pinned here so campaigns are reproducible across implementations.
Instances marked nonzero are rejection-sampled against the expansion
oracle, so hitting campaigns never count vacuous passes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field as dc_field, replace
from typing import Sequence

from .algebra import DEFAULT_MODULUS, Field, MatPoly, ScalarPoly, det_poly, mat_det
from .concentrate import invertible_hitting_set, width2_hitting_set
from .depth3 import (
    Depth3Circuit,
    Gate,
    LinearForm,
    Partition,
    circuit_to_roabp,
    minimal_distance_order,
    sum_sml_whitebox_test,
)
from .errors import CapabilityError, StructuralError
from .isolate import roabp_hitting_set
from .roabp import EXPAND_CEILING, PointSet, Roabp

REJECTION_BUDGET = 400


class DetStream:
    """Deterministic pseudo-random stream keyed by (seed, counter)."""

    def __init__(self, seed: int | str):
        self._seed = str(seed)
        self._counter = 0
        self._buffer = b""

    def _chunk(self) -> int:
        if len(self._buffer) < 8:
            digest = hashlib.sha256(
                f"{self._seed}:{self._counter}".encode()
            ).digest()
            self._counter += 1
            self._buffer += digest
        value = int.from_bytes(self._buffer[:8], "big")
        self._buffer = self._buffer[8:]
        return value

    def randint(self, lo: int, hi: int) -> int:
        """Uniform-ish integer in [lo, hi] (64-bit reduction)."""
        if hi < lo:
            raise StructuralError("empty range")
        return lo + self._chunk() % (hi - lo + 1)

    def choice(self, seq: Sequence):
        return seq[self.randint(0, len(seq) - 1)]

    def shuffled(self, seq: Sequence) -> list:
        items = list(seq)
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]
        return items

    def nonzero(self, field: Field) -> int:
        return self.randint(1, field.p - 1)

    def residue(self, field: Field) -> int:
        return self.randint(0, field.p - 1)


@dataclass(frozen=True)
class InstanceSpec:
    """Deterministic description of one generated instance."""

    klass: str  # roabp | invertible-roabp | width2-roabp | depth3-distance | sum-sml
    seed: int
    modulus: int = DEFAULT_MODULUS
    n: int = 4
    d: int = 3
    w: int = 2
    delta: int = 2
    s: int = 3
    mu: int = 2
    k: int = 2
    c: int = 2
    nonzero: bool = True
    force_singular: bool = False
    invertible_constant: bool = False
    engineered_zero: bool = False


# ---------------------------------------------------------------------------
# generators


def _random_matrix(stream: DetStream, field: Field, w: int) -> tuple:
    return tuple(tuple(stream.residue(field) for _ in range(w)) for _ in range(w))


def _random_invertible_matrix(stream: DetStream, field: Field, w: int) -> tuple:
    for _ in range(REJECTION_BUDGET):
        m = _random_matrix(stream, field, w)
        if mat_det(m, field) != 0:
            return m
    raise CapabilityError("could not sample an invertible matrix")


def _random_exponent(
    stream: DetStream, n: int, block: Sequence[int], delta: int, mu: int
) -> tuple:
    e = [0] * n
    if delta == 0 or not block:
        return tuple(e)
    support_size = stream.randint(1, max(1, min(mu, len(block))))
    vars_ = stream.shuffled(block)[:support_size]
    for v in vars_:
        e[v] = stream.randint(1, delta)
    return tuple(e)


def _random_layer(
    stream: DetStream, field: Field, n: int, w: int, block: Sequence[int], spec: InstanceSpec
) -> MatPoly:
    terms: dict = {}
    zero = (0,) * n
    if spec.invertible_constant:
        terms[zero] = _random_invertible_matrix(stream, field, w)
    remaining = spec.s - len(terms)
    for _ in range(remaining):
        e = _random_exponent(stream, n, block, spec.delta, spec.mu)
        terms[e] = _random_matrix(stream, field, w)
    return MatPoly(field, n, w, terms)


def _random_singular_layer(
    stream: DetStream, field: Field, n: int, block: Sequence[int], spec: InstanceSpec
) -> MatPoly:
    """A symbolically singular nonzero 2x2 layer: an outer product of two
    sparse vector polynomials over the block."""
    while True:
        def vec() -> tuple[ScalarPoly, ScalarPoly]:
            out = []
            for _ in range(2):
                terms = {}
                for _ in range(stream.randint(1, 2)):
                    e = _random_exponent(stream, n, block, spec.delta, spec.mu)
                    terms[e] = stream.residue(field)
                out.append(ScalarPoly(field, n, terms))
            return tuple(out)

        col, row = vec(), vec()
        grid = [[col[i] * row[j] for j in range(2)] for i in range(2)]
        layer = MatPoly.from_entries(grid)
        if not layer.is_zero():
            return layer


def _split_blocks(stream: DetStream, n: int, d: int) -> list[tuple[int, ...]]:
    variables = stream.shuffled(range(n))
    cuts = sorted(stream.shuffled(range(1, n))[: d - 1]) if d > 1 else []
    blocks = []
    prev = 0
    for cut in cuts + [n]:
        blocks.append(tuple(sorted(variables[prev:cut])))
        prev = cut
    return blocks


def _generate_roabp(spec: InstanceSpec) -> Roabp:
    field = Field(spec.modulus)
    for attempt in range(REJECTION_BUDGET):
        stream = DetStream(f"{spec.klass}:{spec.seed}:{attempt}")
        n = spec.n
        d = min(spec.d, n)
        blocks = _split_blocks(stream, n, d)
        layers = []
        singular_at = set()
        if spec.force_singular and spec.w == 2 and d >= 1:
            count = stream.randint(1, max(1, d // 2))
            singular_at = set(stream.shuffled(range(d))[:count])
        for i, block in enumerate(blocks):
            if i in singular_at:
                layers.append(_random_singular_layer(stream, field, n, block, spec))
                continue
            layer = _random_layer(stream, field, n, spec.w, block, spec)
            if spec.klass == "invertible-roabp" or spec.invertible_constant:
                budget = REJECTION_BUDGET
                while det_poly(layer.entry_grid()).is_zero() and budget:
                    layer = _random_layer(stream, field, n, spec.w, block, spec)
                    budget -= 1
                if budget == 0:
                    break
            layers.append(layer)
        if len(layers) != d:
            continue
        left = tuple(stream.residue(field) for _ in range(spec.w))
        right = tuple(stream.residue(field) for _ in range(spec.w))
        if all(v == 0 for v in left):
            left = (1,) + left[1:]
        if all(v == 0 for v in right):
            right = (1,) + right[1:]
        inst = Roabp.with_constant_boundaries(field, n, blocks, layers, left, right)
        if spec.nonzero:
            _, scalar = inst.expand()
            if scalar.is_zero():
                continue
        return inst
    raise CapabilityError(f"rejection budget exhausted for {spec}")


def _random_partition(stream: DetStream, variables: Sequence[int], max_colors: int) -> Partition:
    variables = list(variables)
    count = stream.randint(1, min(max_colors, len(variables)))
    shuffled = stream.shuffled(variables)
    colors: list[list[int]] = [[] for _ in range(count)]
    for i, v in enumerate(shuffled):
        colors[i % count].append(v)
    return Partition.of_lists(colors)


def _refinement_chain(stream: DetStream, n: int, k: int) -> list[Partition]:
    """Distance-1 family: each partition coarsens the previous one."""
    parts = [_random_partition(stream, range(n), max_colors=max(2, n // 2))]
    for _ in range(k - 1):
        prev = parts[-1]
        colors = stream.shuffled(prev.colors)
        merged: list[set[int]] = []
        i = 0
        while i < len(colors):
            if i + 1 < len(colors) and stream.randint(0, 1):
                merged.append(set(colors[i]) | set(colors[i + 1]))
                i += 2
            else:
                merged.append(set(colors[i]))
                i += 1
        parts.append(Partition.of_lists(merged))
    # upper partitions refine lower ones, so emit finest first
    return parts


def _random_form(stream: DetStream, field: Field, color: Sequence[int]) -> LinearForm:
    coeffs = {}
    for v in color:
        coeffs[v] = stream.nonzero(field)
    constant = stream.residue(field)
    if not coeffs and constant == 0:
        constant = 1
    return LinearForm(constant, coeffs)


def _gates_from_partitions(
    stream: DetStream, field: Field, n: int, partitions: Sequence[Partition]
) -> tuple[Gate, ...]:
    gates = []
    for part in partitions:
        forms = []
        for color in part.colors:
            if stream.randint(0, 4) == 0 and len(color) == 1:
                continue  # leave the variable out of this gate
            forms.append(_random_form(stream, field, sorted(color)))
        gates.append(Gate(stream.nonzero(field), tuple(forms)))
    return tuple(gates)


def _generate_depth3_distance(spec: InstanceSpec) -> Depth3Circuit:
    field = Field(spec.modulus)
    for attempt in range(REJECTION_BUDGET):
        stream = DetStream(f"{spec.klass}:{spec.seed}:{attempt}")
        n, k = spec.n, spec.k
        if stream.randint(0, 1):
            parts = _refinement_chain(stream, n, k)
        else:
            parts = [
                _random_partition(stream, range(n), max_colors=max(2, n // 2))
                for _ in range(k)
            ]
        gates = _gates_from_partitions(stream, field, n, parts)
        circuit = Depth3Circuit(field, n, gates)
        order, dist = minimal_distance_order(
            [circuit.gate_partition(i) for i in range(circuit.k)]
        )
        if dist > spec.delta:
            continue
        if spec.nonzero and circuit.expand().is_zero():
            continue
        return circuit
    raise CapabilityError(f"rejection budget exhausted for {spec}")


def _engineered_zero_sum_sml(stream: DetStream, field: Field, n: int, c: int) -> Depth3Circuit:
    """Gate-cancelling zero circuits: either G + (-G), or the two-color
    split (l)R - (l|x_i)R - (l|x_j)R, which induces two distinct partitions."""
    if c <= 1 or n < 2:
        part = _random_partition(stream, range(n), max_colors=max(2, n // 2))
        forms = tuple(_random_form(stream, field, sorted(col)) for col in part.colors)
        a = stream.nonzero(field)
        return Depth3Circuit(field, n, (Gate(a, forms), Gate(-a, forms)))
    pair = stream.shuffled(range(n))[:2]
    i, j = sorted(pair)
    rest = [v for v in range(n) if v not in (i, j)]
    rider_forms: list[LinearForm] = []
    if rest:
        rider_part = _random_partition(stream, rest, max_colors=max(1, len(rest) // 2))
        rider_forms = [_random_form(stream, field, sorted(col)) for col in rider_part.colors]
    b0 = stream.residue(field)
    bi = stream.nonzero(field)
    bj = stream.nonzero(field)
    a = stream.nonzero(field)
    whole = LinearForm(b0, {i: bi, j: bj})
    left = LinearForm(b0, {i: bi})
    right = LinearForm(0, {j: bj})
    gates = (
        Gate(a, (whole, *rider_forms)),
        Gate(-a, (left, *rider_forms)),
        Gate(-a, (right, *rider_forms)),
    )
    return Depth3Circuit(field, n, gates)


def _generate_sum_sml(spec: InstanceSpec) -> Depth3Circuit:
    field = Field(spec.modulus)
    if spec.engineered_zero:
        stream = DetStream(f"{spec.klass}:{spec.seed}:zero")
        return _engineered_zero_sum_sml(stream, field, spec.n, spec.c)
    for attempt in range(REJECTION_BUDGET):
        stream = DetStream(f"{spec.klass}:{spec.seed}:{attempt}")
        n, k, c = spec.n, spec.k, spec.c
        pool = [
            _random_partition(stream, range(n), max_colors=max(2, n // 2))
            for _ in range(c)
        ]
        assignments = [pool[i % c] for i in range(k)]
        gates = _gates_from_partitions(stream, field, n, assignments)
        circuit = Depth3Circuit(field, n, gates)
        if len(circuit.distinct_partitions()) > c:
            continue
        if spec.nonzero and circuit.expand().is_zero():
            continue
        return circuit
    raise CapabilityError(f"rejection budget exhausted for {spec}")


def generate_instance(spec: InstanceSpec):
    """Deterministic instance for the spec; identical specs give identical
    instances."""
    if spec.klass == "roabp":
        return _generate_roabp(spec)
    if spec.klass == "invertible-roabp":
        return _generate_roabp(replace(spec, invertible_constant=spec.invertible_constant))
    if spec.klass == "width2-roabp":
        return _generate_roabp(replace(spec, w=2))
    if spec.klass == "depth3-distance":
        return _generate_depth3_distance(spec)
    if spec.klass == "sum-sml":
        return _generate_sum_sml(spec)
    raise StructuralError(f"unknown instance class {spec.klass!r}")


# ---------------------------------------------------------------------------
# oracles


def oracle_is_zero(instance, ceiling: int = EXPAND_CEILING) -> bool:
    """Ground truth by exhaustive expansion."""
    if isinstance(instance, Roabp):
        _, scalar = instance.expand(ceiling)
        return scalar.is_zero()
    if isinstance(instance, Depth3Circuit):
        return instance.expand().is_zero()
    raise StructuralError(f"cannot expand {type(instance).__name__}")


def _evaluate(instance, point) -> int:
    if isinstance(instance, Roabp):
        return instance.evaluate(point)
    return instance.eval_at(point)


@dataclass(frozen=True)
class HittingReport:
    vacuous: bool
    passed: bool
    witness_index: int | None
    point_count: int
    provenance: dict = dc_field(default_factory=dict)

    def line(self, label: str) -> str:
        if self.vacuous:
            return f"{label}: vacuous-pass (zero instance, {self.point_count} points)"
        status = "pass" if self.passed else "FAIL"
        idx = self.witness_index if self.witness_index is not None else "-"
        return f"{label}: {status} witness={idx} size={self.point_count}"


def verify_hitting_property(instance, points: PointSet) -> HittingReport:
    """Vacuous-pass for zero instances; otherwise pass iff some point
    evaluates nonzero (the first witness index is reported)."""
    if oracle_is_zero(instance):
        return HittingReport(True, True, None, len(points), dict(points.provenance))
    for idx, pt in enumerate(points):
        if _evaluate(instance, pt):
            return HittingReport(False, True, idx, len(points), dict(points.provenance))
    return HittingReport(False, False, None, len(points), dict(points.provenance))


# ---------------------------------------------------------------------------
# campaigns


@dataclass
class CampaignResult:
    klass: str
    samples: int
    passed: int
    lines: list

    @property
    def all_passed(self) -> bool:
        return self.passed == self.samples

    def summary(self) -> dict:
        return {
            "class": self.klass,
            "samples": self.samples,
            "passed": self.passed,
            "all_passed": self.all_passed,
        }

    def render(self) -> str:
        body = "\n".join(self.lines)
        return (
            f"campaign class={self.klass} samples={self.samples} "
            f"passed={self.passed}/{self.samples}\n{body}\n"
        )


def _campaign_case(spec: InstanceSpec) -> tuple[bool, str]:
    label = f"seed={spec.seed}"
    if spec.klass in ("roabp",):
        inst = generate_instance(spec)
        report = verify_hitting_property(inst, roabp_hitting_set(inst, "whitebox"))
        return report.passed, report.line(label)
    if spec.klass == "invertible-roabp":
        inst = generate_instance(spec)
        report = verify_hitting_property(inst, invertible_hitting_set(inst))
        return report.passed, report.line(label)
    if spec.klass == "width2-roabp":
        inst = generate_instance(spec)
        report = verify_hitting_property(inst, width2_hitting_set(inst))
        return report.passed, report.line(label)
    if spec.klass == "depth3-distance":
        circuit = generate_instance(spec)
        reduced = circuit_to_roabp(circuit)
        _, scalar = reduced.expand()
        ok = scalar == circuit.expand()
        order, dist = minimal_distance_order(
            [circuit.gate_partition(i) for i in range(circuit.k)]
        )
        bound = circuit.k * (circuit.n + 1) ** dist
        ok = ok and reduced.width <= bound
        status = "pass" if ok else "FAIL"
        return ok, (
            f"{label}: {status} distance={dist} width={reduced.width} bound={bound}"
        )
    if spec.klass == "sum-sml":
        circuit = generate_instance(spec)
        verdict, witness = sum_sml_whitebox_test(circuit)
        truth = "zero" if oracle_is_zero(circuit) else "nonzero"
        ok = verdict == truth
        if verdict == "nonzero":
            ok = ok and witness is not None and circuit.eval_at(witness) != 0
        status = "pass" if ok else "FAIL"
        return ok, f"{label}: {status} verdict={verdict} truth={truth}"
    raise StructuralError(f"unknown campaign class {spec.klass!r}")


def run_campaign(
    klass: str,
    samples: int,
    seed: int = 0,
    modulus: int = DEFAULT_MODULUS,
    **overrides,
) -> CampaignResult:
    """Run `samples` seeded cases of one class; reports are deterministic
    functions of (class, samples, seed, parameters)."""
    lines = []
    passed = 0
    for i in range(samples):
        spec = InstanceSpec(
            klass=klass, seed=seed + i, modulus=modulus, **_case_overrides(klass, seed + i, overrides)
        )
        ok, line = _campaign_case(spec)
        passed += ok
        lines.append(line)
    return CampaignResult(klass=klass, samples=samples, passed=passed, lines=lines)


def _case_overrides(klass: str, seed: int, overrides: dict) -> dict:
    """Per-seed parameter draws within the class's desk-scale envelope."""
    stream = DetStream(f"params:{klass}:{seed}")
    params = dict(overrides)
    if klass == "roabp" and not overrides:
        n = stream.randint(2, 5)
        params = dict(
            n=n, d=stream.randint(1, min(4, n)), w=stream.randint(1, 3),
            s=stream.randint(1, 3), delta=stream.randint(1, 2), mu=2,
        )
    elif klass == "invertible-roabp" and not overrides:
        n = stream.randint(2, 5)
        params = dict(
            n=n, d=stream.randint(1, min(3, n)), w=2,
            s=stream.randint(1, 3), delta=stream.randint(1, 2), mu=1,
            invertible_constant=bool(stream.randint(0, 1)),
        )
    elif klass == "width2-roabp" and not overrides:
        n = stream.randint(2, 4)
        params = dict(
            n=n, d=stream.randint(1, min(3, n)), w=2,
            s=2, delta=1, mu=1, force_singular=bool(stream.randint(0, 1)),
        )
    elif klass == "depth3-distance" and not overrides:
        params = dict(
            n=stream.randint(3, 8), k=stream.randint(1, 3), delta=2,
        )
    elif klass == "sum-sml" and not overrides:
        params = dict(
            n=stream.randint(3, 9), k=stream.randint(1, 3),
            c=stream.randint(1, 3), engineered_zero=bool(stream.randint(0, 1)),
        )
    return params
