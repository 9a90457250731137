"""Exact moments of semicircular families and their GUE matrix models.

The free mixed moment phi(x_{i1} ... x_{ip}) of a semicircular family is
the number of non-crossing pair partitions of {1..p} that only pair equal
letters.  At finite n, E tr_n of the same word in independent SGRM(n, 1/n)
matrices is the sum over *all* such pairings weighted by n^(-2 genus).
Both are computed exactly (int / Fraction).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterator, Sequence

import numpy as np

from . import _mc
from .ensembles import EnsembleSpec, Seed, sample_gue
from .errors import DomainError

__all__ = [
    "as_word",
    "catalan_moment",
    "free_semicircular_moment",
    "noncrossing_pairings",
    "is_noncrossing",
    "all_pairings",
    "genus",
    "gue_word_moment",
    "gue_even_moments",
    "verify_freeness_def",
    "alternating_words",
    "empirical_mixed_moment",
    "MomentReport",
    "asymptotic_freeness_report",
]

Word = tuple  # tuple of generator indices >= 1


def as_word(w: Sequence[int]) -> Word:
    w = tuple(int(i) for i in w)
    if not w:
        raise DomainError("a word needs at least one letter")
    if min(w) < 1:
        raise DomainError(f"generator indices must be >= 1, got {w}")
    return w


def catalan_moment(k: int) -> Fraction:
    """phi(x^(2k)) for a standard semicircular element: the k-th Catalan number."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    return Fraction(comb(2 * k, k), k + 1)


def _canonical(w: Word) -> Word:
    # Relabel letters by first appearance so memoization is shared.
    labels: dict[int, int] = {}
    return tuple(labels.setdefault(i, len(labels) + 1) for i in w)


@lru_cache(maxsize=None)
def _count_nc(w: Word) -> int:
    if not w:
        return 1
    if len(w) % 2:
        return 0
    total = 0
    # Pair position 0 with j; the block strictly inside must have even length.
    for j in range(1, len(w), 2):
        if w[j] == w[0]:
            inner = _count_nc(w[1:j])
            if inner:
                total += inner * _count_nc(w[j + 1:])
    return total


def free_semicircular_moment(w: Sequence[int]) -> int:
    """phi(x_{i1} ... x_{ip}) for a free semicircular family (an integer)."""
    w = as_word(w)
    if len(w) % 2:
        return 0
    return _count_nc(_canonical(w))


def noncrossing_pairings(w: Sequence[int]) -> Iterator[tuple[tuple[int, int], ...]]:
    """Yield the letter-respecting non-crossing pairings of positions 0..p-1."""
    w = tuple(w)

    def rec(lo: int, hi: int):
        if lo == hi:
            yield ()
            return
        for j in range(lo + 1, hi, 2):
            if w[j] != w[lo]:
                continue
            for inner in rec(lo + 1, j):
                for outer in rec(j + 1, hi):
                    yield ((lo, j),) + inner + outer

    if len(w) % 2 == 0:
        yield from rec(0, len(w))


def all_pairings(p: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """All (p-1)!! pair partitions of 0..p-1 (first open position paired first)."""
    def rec(rest: tuple[int, ...]):
        if not rest:
            yield ()
            return
        a = rest[0]
        for idx in range(1, len(rest)):
            b = rest[idx]
            for tail in rec(rest[1:idx] + rest[idx + 1:]):
                yield ((a, b),) + tail

    if p % 2 == 0:
        yield from rec(tuple(range(p)))


def is_noncrossing(pairing, p: int | None = None) -> bool:
    """Stack scan: each closing position must match the most recent open one."""
    if p is None:
        p = 2 * len(pairing)
    partner = [-1] * p
    for a, b in pairing:
        partner[a], partner[b] = b, a
    stack: list[int] = []
    for i in range(p):
        if partner[i] > i:
            stack.append(i)
        elif not stack or stack.pop() != partner[i]:
            return False
    return not stack


def genus(pairing, p: int) -> int:
    """Genus of the map obtained by gluing a p-gon along ``pairing``."""
    pi = list(range(p))
    for a, b in pairing:
        pi[a], pi[b] = b, a
    # gamma o pi, with gamma the long cycle i -> i+1
    perm = [(pi[i] + 1) % p for i in range(p)]
    seen = [False] * p
    cycles = 0
    for i in range(p):
        if not seen[i]:
            cycles += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
    twice_g = p // 2 + 1 - cycles
    return twice_g // 2


def gue_word_moment(w: Sequence[int], n: int) -> Fraction:
    """Exact E tr_n(X_{i1} ... X_{ip}) for independent SGRM(n, 1/n) matrices.

    Wick's formula: a sum over letter-respecting pairings of n^(-2 genus).
    Cost grows like (p-1)!!, so keep p <= 14.
    """
    w = as_word(w)
    p = len(w)
    if p % 2:
        return Fraction(0)
    total = Fraction(0)
    for pairing in all_pairings(p):
        if all(w[a] == w[b] for a, b in pairing):
            total += Fraction(1, n ** (2 * genus(pairing, p)))
    return total


def gue_even_moments(n: int, kmax: int) -> list[Fraction]:
    """[E tr_n X^(2k) for k = 0..kmax] for X ~ SGRM(n, 1/n) (Harer-Zagier)."""
    if n < 1 or kmax < 0:
        raise DomainError("need n >= 1 and kmax >= 0")
    # t[k] = E Tr Y^(2k) for unit-variance entries.
    t = [Fraction(n), Fraction(n * n)]
    for k in range(1, kmax):
        t.append((Fraction(4 * k + 2) * n * t[k] + k * (4 * k * k - 1) * t[k - 1]) / (k + 2))
    return [t[k] / Fraction(n) ** (k + 1) for k in range(kmax + 1)]


def _semicircle_moment(d: int) -> Fraction:
    return Fraction(0) if d % 2 else catalan_moment(d // 2)


def _centered_product_moment(w: Word, degrees: Sequence[int]) -> Fraction:
    # phi(prod_k (x_{w_k}^{d_k} - phi(x^{d_k}))) expanded over kept factors.
    consts = [_semicircle_moment(d) for d in degrees]
    total = Fraction(0)
    p = len(w)
    for keep in itertools.product((True, False), repeat=p):
        coeff = Fraction(1)
        letters: list[int] = []
        for k in range(p):
            if keep[k]:
                letters.extend([w[k]] * degrees[k])
            else:
                coeff *= -consts[k]
        if coeff == 0:
            continue
        total += coeff * (free_semicircular_moment(letters) if letters else 1)
    return total


def verify_freeness_def(w: Sequence[int], max_degree: int) -> bool:
    """Check that centered alternating products have vanishing moments.

    Every letter of the alternating word ``w`` carries a centered monomial
    x^d - phi(x^d) with 1 <= d <= max_degree; all degree tuples are tried and
    each moment is evaluated exactly through the pairing oracle.
    """
    w = as_word(w)
    if any(a == b for a, b in zip(w, w[1:])):
        raise DomainError(f"word {w} is not alternating")
    if max_degree < 1:
        raise DomainError("max_degree must be >= 1")
    for degrees in itertools.product(range(1, max_degree + 1), repeat=len(w)):
        if _centered_product_moment(w, degrees) != 0:
            return False
    return True


def alternating_words(max_len: int, letters: int) -> Iterator[Word]:
    for p in range(1, max_len + 1):
        for w in itertools.product(range(1, letters + 1), repeat=p):
            if all(a != b for a, b in zip(w, w[1:])):
                yield w


def _word_trace(mats: dict[int, np.ndarray], w: Word) -> complex:
    n = mats[w[0]].shape[0]
    half = len(w) // 2
    left = np.eye(n, dtype=np.complex128) if half == 0 else mats[w[0]]
    for i in w[1:half]:
        left = left @ mats[i]
    right = mats[w[half]]
    for i in w[half + 1:]:
        right = right @ mats[i]
    # tr(L R) without forming the product.
    return complex(np.sum(left * right.T)) / n


def empirical_mixed_moment(w: Sequence[int], n: int, replicas: int, seed: Seed | int,
                           mapper: _mc.Mapper | None = None) -> tuple[float, float]:
    """Monte Carlo mean and standard error of tr_n(X_{i1} ... X_{ip}).

    Each replica draws one SGRM(n, 1/n) matrix per generator index, in index
    order, from its own stream.
    """
    w = as_word(w)
    spec = EnsembleSpec("gue", n)
    width = max(w)

    def one(s: Seed) -> float:
        rng = s.generator()
        mats = {i: sample_gue(spec, rng) for i in range(1, width + 1)}
        return _word_trace(mats, w).real

    values = _mc.run_replicas(one, seed, replicas, mapper)
    mean, se = _mc.mean_stderr(values)
    return float(mean), float(se)


@dataclass
class MomentReport:
    word: Word
    oracle: Fraction
    rows: list[tuple[int, float, float]] = field(default_factory=list)
    replicas: int = 0

    def deviations(self) -> list[float]:
        return [abs(mean - float(self.oracle)) for _, mean, _ in self.rows]

    def within(self, k: float = 3.0) -> bool:
        """Largest-n deviation is at most ``k`` standard errors."""
        _, mean, se = self.rows[-1]
        return abs(mean - float(self.oracle)) <= k * se

    def to_json(self) -> str:
        return json.dumps({
            "word": list(self.word),
            "oracle": str(self.oracle),
            "replicas": self.replicas,
            "rows": [{"n": n, "mean": m, "stderr": s} for n, m, s in self.rows],
        }, indent=2)


def asymptotic_freeness_report(w: Sequence[int], n_list: Sequence[int], replicas: int,
                               seed: Seed | int, mapper: _mc.Mapper | None = None) -> MomentReport:
    w = as_word(w)
    n_list = list(n_list)
    if n_list != sorted(n_list):
        raise DomainError("n_list must be ascending")
    report = MomentReport(w, Fraction(free_semicircular_moment(w)), replicas=replicas)
    for n in n_list:
        mean, se = empirical_mixed_moment(w, n, replicas, seed, mapper)
        report.rows.append((n, mean, se))
    return report
