"""Kronecker weight machinery.

The naive map x_i -> (delta+1)^(i-1) gives distinct weights to all monomials
with individual degree <= delta, at the price of exponentially large weights.
Reducing it modulo small primes yields a candidate family of cheap weight
functions, at least one of which separates any fixed set of monomial pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .algebra import Monomial
from .errors import InternalInconsistencyError, StructuralError

DEFAULT_CUTOFF_CONSTANT = 4


@dataclass(frozen=True)
class WeightFn:
    """Positive integer weight per variable; a monomial weighs the
    exponent-weighted sum of its variables' weights."""

    weights: tuple

    def __post_init__(self) -> None:
        ws = tuple(int(w) for w in self.weights)
        if any(w < 1 for w in ws):
            raise StructuralError("weights must be positive")
        object.__setattr__(self, "weights", ws)

    @classmethod
    def constant(cls, n: int, value: int = 1) -> "WeightFn":
        return cls((value,) * n)

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def max_weight(self) -> int:
        return max(self.weights)

    def of(self, var: int) -> int:
        return self.weights[var]

    def monomial_weight(self, e: Monomial) -> int:
        return sum(exp * w for exp, w in zip(e, self.weights) if exp)


@dataclass(frozen=True)
class PairSet:
    """Unordered pairs of distinct monomials with individual degree <= delta."""

    n: int
    delta: int
    pairs: tuple

    def __post_init__(self) -> None:
        clean = []
        for a, b in self.pairs:
            a, b = tuple(a), tuple(b)
            if len(a) != self.n or len(b) != self.n:
                raise StructuralError("pair monomial has wrong ambient length")
            if max(a, default=0) > self.delta or max(b, default=0) > self.delta:
                raise StructuralError("pair monomial exceeds the degree bound")
            if a == b:
                raise StructuralError(f"pair ({a}, {b}) is not a pair of distinct monomials")
            clean.append((a, b))
        object.__setattr__(self, "pairs", tuple(clean))

    @classmethod
    def from_monomials(cls, n: int, delta: int, monomials: Sequence[Monomial]) -> "PairSet":
        """All unordered pairs of the distinct monomials given."""
        ms = sorted(set(tuple(m) for m in monomials))
        pairs = [(ms[i], ms[j]) for i in range(len(ms)) for j in range(i + 1, len(ms))]
        return cls(n, delta, tuple(pairs))

    def __len__(self) -> int:
        return len(self.pairs)


def naive_kronecker(n: int, delta: int) -> WeightFn:
    """w(x_i) = (delta+1)^(i-1): injective on degree-bounded monomials."""
    if n < 1 or delta < 0:
        raise StructuralError("need n >= 1 and delta >= 0")
    base = delta + 1
    return WeightFn(tuple(base**i for i in range(n)))


def iter_primes() -> Iterator[int]:
    yield 2
    yield 3
    found = [2, 3]
    cand = 5
    while True:
        if all(cand % q for q in found if q * q <= cand):
            found.append(cand)
            yield cand
        cand += 2


def prime_cutoff(n: int, pair_count: int, delta: int, c0: int = DEFAULT_CUTOFF_CONSTANT) -> int:
    """Largest prime value the candidate search may use.

    N = c0 * n * |A| * ceil(log2(delta+2)); the candidates are the primes up
    to N log N, enough for the counting argument to guarantee a separator.
    """
    count = max(1, pair_count)
    big_n = c0 * n * count * max(1, math.ceil(math.log2(delta + 2)))
    return max(13, math.ceil(big_n * math.log(max(big_n, 2))))


def weights_mod_prime(n: int, delta: int, p: int) -> WeightFn:
    """The naive Kronecker weights reduced mod p; zero residues are lifted to
    p itself so every weight stays positive while staying congruent mod p."""
    base = delta + 1
    ws = []
    acc = 1
    for _ in range(n):
        r = acc % p
        ws.append(r if r else p)
        acc *= base
    return WeightFn(tuple(ws))


@dataclass(frozen=True)
class SeparatorSearch:
    """Result of the separating-prime search for one pair set."""

    n: int
    delta: int
    c0: int
    pair_count: int
    cutoff: int
    verified_prime: int
    verified: WeightFn

    def iter_candidate_primes(self) -> Iterator[int]:
        for p in iter_primes():
            if p > self.cutoff:
                return
            yield p

    def iter_candidates(self) -> Iterator[WeightFn]:
        """The full candidate family (for blackbox use)."""
        for p in self.iter_candidate_primes():
            yield weights_mod_prime(self.n, self.delta, p)


def separating_weights(
    n: int, delta: int, pair_set: PairSet, c0: int = DEFAULT_CUTOFF_CONSTANT
) -> SeparatorSearch:
    """Find the first prime whose reduced Kronecker weights separate every
    pair in the set.

    A pair (m, m') is separated when the naive weights differ mod p, which
    forces the lifted integer weights to differ too.  The counting argument
    guarantees success within the cutoff, so running past it is reported as
    an internal inconsistency.
    """
    if len(pair_set) < 1:
        raise StructuralError("pair set must be nonempty")
    naive = naive_kronecker(n, delta)
    diffs = []
    for a, b in pair_set.pairs:
        d = naive.monomial_weight(a) - naive.monomial_weight(b)
        if d == 0:
            raise InternalInconsistencyError("naive Kronecker weights collided")
        diffs.append(abs(d))
    cutoff = prime_cutoff(n, len(pair_set), delta, c0)
    for p in iter_primes():
        if p > cutoff:
            break
        if all(d % p for d in diffs):
            return SeparatorSearch(
                n=n,
                delta=delta,
                c0=c0,
                pair_count=len(pair_set),
                cutoff=cutoff,
                verified_prime=p,
                verified=weights_mod_prime(n, delta, p),
            )
    raise InternalInconsistencyError(
        f"no separating prime up to {cutoff} for {len(pair_set)} pairs"
    )
