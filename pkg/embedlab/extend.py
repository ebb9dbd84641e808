"""s-extendibility under the two-segment embedding v -> (ε(v), ε(Mv)).

A size-4 multiset of states sums to zero under α exactly when two of its
pairs share the same pair sum, so every check here works on the partition of
state pairs by their α pair sum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement, permutations, product
from math import comb, factorial
from typing import Callable, Iterator, Sequence

import numpy as np

from .algebra import FieldSpec
from .ciphers import field_matrix_to_bits
from .embed import EmbeddingParams, alpha_bits
from .settings import EXTEND_MAX_BITS

logger = logging.getLogger(__name__)

FieldMatrix = Sequence[Sequence[int]]
StateMap = Callable[[int], int] | Sequence[int]

# determinant-term enumeration is n! per minor
MAX_FIT_ORDER = 4


class ParameterTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class ExtendibilityResult:
    s: int
    extendible: bool
    witness: tuple[int, ...] = ()
    pairs_checked: int = 0
    sampled: bool = False

    def __bool__(self) -> bool:
        return self.extendible


def partial_orbit_params(matrix: FieldMatrix, field_spec: FieldSpec) -> EmbeddingParams:
    """Parameters for α(v) = (ε(v), ε(Mv)) with M an n×n matrix over the field."""
    n = _order(matrix)
    bits = field_matrix_to_bits(matrix, field_spec)
    return EmbeddingParams(field_spec, n, 2, bits, full_orbit=False)


def _as_table(sigma: StateMap, size: int) -> list[int]:
    table = list(sigma) if not callable(sigma) else [sigma(v) for v in range(size)]
    if len(table) != size:
        raise ValueError(f"state map must cover {size} states, got {len(table)}")
    return table


def is_s_extendible(
    sigma: StateMap,
    params: EmbeddingParams,
    s: int = 4,
    trials: int | None = None,
    seed: int = 0,
) -> ExtendibilityResult:
    """Check Σα(vʰ) = 0 ⟺ Σα(σ(vʰ)) = 0 over all size-s multisets of states.

    With ``trials`` set, only that many random state pairs are partitioned,
    which can miss a violation but never reports a false one.

    Pairs are visited in lexicographic order, so the witness is the first
    broken multiset in that order (sorted), not the smallest over all of them.
    Equal inputs always give the same witness.
    """
    if s not in (2, 4):
        raise ValueError(f"s must be 2 or 4, got {s}")
    if trials is None and params.r > EXTEND_MAX_BITS:
        raise ParameterTooLargeError(
            f"exhaustive check needs m*b <= {EXTEND_MAX_BITS}, got {params.r}; pass trials to sample"
        )
    size = 1 << params.r
    table = _as_table(sigma, size) if trials is None or params.r <= EXTEND_MAX_BITS else None
    if table is not None:
        apply = table.__getitem__
    elif callable(sigma):
        apply = sigma
    else:
        apply = sigma.__getitem__

    if s == 2:
        if table is None:
            raise ParameterTooLargeError("s = 2 needs the full state table")
        seen: dict[int, int] = {}
        for v, image in enumerate(table):
            if image in seen:
                return ExtendibilityResult(2, False, (seen[image], v), size)
            seen[image] = v
        return ExtendibilityResult(2, True, (), size)

    if trials is None:
        pairs: Iterator[tuple[int, int]] = combinations_with_replacement(range(size), 2)
    else:
        rng = np.random.default_rng(np.random.Philox(key=seed))
        drawn = rng.integers(0, size, size=(trials, 2), dtype=np.int64)
        pairs = iter(sorted({(int(min(u, v)), int(max(u, v))) for u, v in drawn}))

    alpha_cache: dict[int, int] = {}
    image_cache: dict[int, int] = {}

    def a(v: int) -> int:
        if v not in alpha_cache:
            alpha_cache[v] = alpha_bits(params, v)
        return alpha_cache[v]

    def b(v: int) -> int:
        if v not in image_cache:
            image_cache[v] = alpha_bits(params, apply(v))
        return image_cache[v]

    by_source: dict[int, tuple[int, tuple[int, int]]] = {}
    by_image: dict[int, tuple[int, tuple[int, int]]] = {}
    checked = 0
    for u, v in pairs:
        checked += 1
        src = a(u) ^ a(v)
        dst = b(u) ^ b(v)
        for groups, key, other in ((by_source, src, dst), (by_image, dst, src)):
            first = groups.setdefault(key, (other, (u, v)))
            if first[0] != other:
                witness = tuple(sorted(first[1] + (u, v)))
                logger.debug("4-extendibility broken by states %s", witness)
                return ExtendibilityResult(4, False, witness, checked, trials is not None)
    return ExtendibilityResult(4, True, (), checked, trials is not None)


def sum_of_images(params: EmbeddingParams, states: Sequence[int], sigma: StateMap | None = None) -> int:
    """Σ α(v) (or Σ α(σ(v))) over ``states``; used to confirm witnesses directly."""
    acc = 0
    for v in states:
        acc ^= alpha_bits(params, v if sigma is None else (sigma(v) if callable(sigma) else sigma[v]))
    return acc


# -- 4-related vectors ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelatedQuadruple:
    """Rows (i,x,…), (i,y,…), (j,x,…), (j,y,…) of first-segment coordinates with their M images.

    The trailing coordinates ``rest`` are shared by all four rows.
    """

    field_spec: FieldSpec = field(repr=False)
    matrix: tuple[tuple[int, ...], ...] = field(repr=False)
    i: int
    j: int
    x: int
    y: int
    rest: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return len(self.matrix)

    def states(self) -> tuple[tuple[int, ...], ...]:
        return (
            (self.i, self.x) + self.rest,
            (self.i, self.y) + self.rest,
            (self.j, self.x) + self.rest,
            (self.j, self.y) + self.rest,
        )

    def _mix(self, state: Sequence[int]) -> tuple[int, ...]:
        mul = self.field_spec.mul
        out = []
        for row in self.matrix:
            acc = 0
            for coeff, value in zip(row, state):
                acc ^= mul(coeff, value)
            out.append(acc)
        return tuple(out)

    @property
    def vectors(self) -> tuple[tuple[int, ...], ...]:
        return tuple(state + self._mix(state) for state in self.states())

    def mapped(self, table: Sequence[int]) -> "RelatedQuadruple":
        """Image under the parallel map applying ``table`` to every first-segment coordinate."""
        return RelatedQuadruple(
            self.field_spec,
            self.matrix,
            table[self.i],
            table[self.j],
            table[self.x],
            table[self.y],
            tuple(table[c] for c in self.rest),
        )


def _order(matrix: FieldMatrix) -> int:
    n = len(matrix)
    if n == 0 or any(len(row) != n for row in matrix):
        raise ValueError("matrix must be square and non-empty")
    return n


def enumerate_4_related(
    matrix: FieldMatrix,
    field_spec: FieldSpec,
    rest: Sequence[int] | None = None,
    sweep_rest: bool = False,
) -> Iterator[RelatedQuadruple]:
    """All quadruples for every (i, j, x, y) in the field.

    Trailing coordinates are ``rest`` when given, every value when
    ``sweep_rest`` is set, and zero otherwise.
    """
    n = _order(matrix)
    if n < 2:
        raise ValueError("4-related vectors need n >= 2")
    frozen = tuple(tuple(row) for row in matrix)
    q = field_spec.q
    if rest is not None:
        if len(rest) != n - 2:
            raise ValueError(f"rest must have {n - 2} coordinates")
        tails: Iterator[tuple[int, ...]] = iter([tuple(rest)])
    elif sweep_rest:
        tails = product(range(q), repeat=n - 2)
    else:
        tails = iter([(0,) * (n - 2)])
    for tail in tails:
        for i, j, x, y in product(range(q), repeat=4):
            yield RelatedQuadruple(field_spec, frozen, i, j, x, y, tail)


def is_totally_related(quad: RelatedQuadruple) -> bool:
    """The ε images of the four vectors cancel: every coordinate takes each value an even number of times."""
    for column in zip(*quad.vectors):
        acc = 0
        for value in column:
            acc ^= 1 << value
        if acc:
            return False
    return True


def is_coupled(quad: RelatedQuadruple) -> bool:
    a, b, c, d = quad.vectors
    return (a == b and c == d) or (a == c and b == d) or (a == d and b == c)


# -- the fits condition ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitSextuple:
    x: int
    y: int
    z: int
    a: int
    b: int
    c: int

    def is_valid(self, n: int) -> bool:
        x, y, z, a, b, c = self.x, self.y, self.z, self.a, self.b, self.c
        return (
            0 < c <= b <= a <= n
            and a + b + c == 2 * n
            and min(x, y, z) >= 0
            and x + y + z == n
            and x < a
            and y < b
            and z < c
        )


def valid_sextuples(n: int) -> list[FitSextuple]:
    out = []
    for a, b, c in product(range(1, n + 1), repeat=3):
        if not (a >= b >= c and a + b + c == 2 * n):
            continue
        for x, y in product(range(n + 1), repeat=2):
            z = n - x - y
            sext = FitSextuple(x, y, z, a, b, c)
            if z >= 0 and sext.is_valid(n):
                out.append(sext)
    return out


def _binom(n: int, k: int) -> int:
    if n < 0 or k < 0 or k > n:
        return 0
    return comb(n, k)


def fit_cardinality(n: int, sext: FitSextuple) -> int:
    """Number of determinant terms each tested sum must contain; 0 when no sum is tested."""
    x, y, z, a, b, c = sext.x, sext.y, sext.z, sext.a, sext.b, sext.c
    if z == 0 and x and y:
        total = sum(_binom(n - c, i) * _binom(n - b, x - i) * _binom(b - i, y) for i in range(x + 1))
        return total * factorial(x) * factorial(y)
    if y == 0 and x and z:
        total = sum(_binom(n - b, i) * _binom(n - c, x - i) * _binom(c - i, z) for i in range(x + 1))
        return total * factorial(x) * factorial(z)
    if x == 0 and y and z:
        total = sum(_binom(n - a, i) * _binom(n - c, x - i) * _binom(c - i, z) for i in range(y + 1))
        return total * factorial(y) * factorial(z)
    if x and y and z:
        total = 0
        for i in range(x + 1):
            for j in range(y + 1):
                total += (
                    _binom(n - c, i)
                    * _binom(n - b, x - i)
                    * _binom(n - a, j)
                    * _binom(n - c - i, y - j)
                    * _binom(c - (x - i) - j, z)
                )
        return total * factorial(x) * factorial(y) * factorial(z)
    return 0


def determinant_terms(matrix: FieldMatrix, field_spec: FieldSpec) -> list[int]:
    """The n! products m_{1π(1)}…m_{nπ(n)}; signs vanish in characteristic 2."""
    n = _order(matrix)
    if n > MAX_FIT_ORDER:
        raise ParameterTooLargeError(f"determinant terms are enumerated for n <= {MAX_FIT_ORDER}, got {n}")
    terms = []
    for perm in permutations(range(n)):
        acc = 1
        for row, col in enumerate(perm):
            acc = field_spec.mul(acc, matrix[row][col])
        terms.append(acc)
    return terms


def det(matrix: FieldMatrix, field_spec: FieldSpec) -> int:
    acc = 0
    for term in determinant_terms(matrix, field_spec):
        acc ^= term
    return acc


def minors(matrix: FieldMatrix, field_spec: FieldSpec, k: int) -> dict[tuple[tuple[int, ...], tuple[int, ...]], int]:
    n = _order(matrix)
    if not 0 < k <= n:
        raise ValueError(f"minor size k must lie in [1, {n}]")
    out = {}
    for rows in combinations(range(n), k):
        for cols in combinations(range(n), k):
            sub = [[matrix[r][c] for c in cols] for r in rows]
            out[(rows, cols)] = det(sub, field_spec)
    return out


def _zero_sum_exists(terms: Sequence[int], size: int) -> bool:
    # reachable[k] = sums of k-element subsets
    reachable: list[set[int]] = [set() for _ in range(size + 1)]
    reachable[0].add(0)
    for term in terms:
        for k in range(size, 0, -1):
            reachable[k] |= {acc ^ term for acc in reachable[k - 1]}
    return 0 in reachable[size]


def fits(matrix: FieldMatrix, field_spec: FieldSpec, sext: FitSextuple) -> bool:
    """No sum of exactly ``fit_cardinality`` determinant terms vanishes."""
    n = _order(matrix)
    size = fit_cardinality(n, sext)
    terms = determinant_terms(matrix, field_spec)
    if size == 0 or size > len(terms):
        return True
    return not _zero_sum_exists(terms, size)


@dataclass(frozen=True)
class TheoremConditions:
    det_ok: bool
    minors_ok: bool
    all_fit: bool
    failing: tuple[FitSextuple, ...] = ()

    @property
    def verdict(self) -> bool:
        return self.det_ok and self.minors_ok and self.all_fit


def theorem_conditions(matrix: FieldMatrix, field_spec: FieldSpec) -> TheoremConditions:
    n = _order(matrix)
    det_ok = det(matrix, field_spec) != 0
    minors_ok = all(value for k in range(1, n) for value in minors(matrix, field_spec, k).values())
    failing = tuple(sext for sext in valid_sextuples(n) if not fits(matrix, field_spec, sext))
    result = TheoremConditions(det_ok, minors_ok, not failing, failing)
    logger.info("theorem conditions for %dx%d matrix: %s", n, n, result)
    return result


def brute_force_related_check(matrix: FieldMatrix, field_spec: FieldSpec, sweep_rest: bool = True) -> bool:
    """Totally related ⟺ coupled over every enumerated quadruple."""
    for quad in enumerate_4_related(matrix, field_spec, sweep_rest=sweep_rest):
        if is_totally_related(quad) != is_coupled(quad):
            logger.info("quadruple %s totally related without being coupled", quad)
            return False
    return True


# -- corollary panel -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class CorollaryReport:
    conditions: TheoremConditions
    maps_tested: int
    failures: tuple[tuple[str, tuple[int, ...]], ...]

    @property
    def all_extendible(self) -> bool:
        return not self.failures


def _panel(params: EmbeddingParams, count: int, seed: int) -> list[tuple[str, list[int]]]:
    size = 1 << params.r
    m, q = params.m, params.q
    field_spec = params.field

    def parallel(brick: Callable[[int], int]) -> list[int]:
        table = []
        for v in range(size):
            out = 0
            for j in range(params.b):
                out |= brick((v >> (m * j)) & (q - 1)) << (m * j)
            table.append(out)
        return table

    panel = [
        ("identity", list(range(size))),
        ("translation", [v ^ (size - 1) for v in range(size)]),
        ("patched-inversion", parallel(field_spec.inv_patched)),
        ("swap-extremes", [size - 1 if v == 0 else 0 if v == size - 1 else v for v in range(size)]),
    ]
    rng = np.random.default_rng(np.random.Philox(key=seed))
    for k in range(max(0, count - len(panel))):
        panel.append((f"random-{k}", [int(v) for v in rng.permutation(size)]))
    return panel


def validate_corollary(
    matrix: FieldMatrix,
    field_spec: FieldSpec,
    count: int = 20,
    seed: int = 0,
) -> CorollaryReport:
    """Run a panel of state permutations through the exhaustive 4-extendibility check."""
    conditions = theorem_conditions(matrix, field_spec)
    params = partial_orbit_params(matrix, field_spec)
    panel = _panel(params, count, seed)
    failures = []
    for name, table in panel:
        result = is_s_extendible(table, params, 4)
        if not result:
            failures.append((name, result.witness))
    if failures and conditions.verdict:
        logger.warning("%d maps failed 4-extendibility under a matrix meeting the conditions", len(failures))
    return CorollaryReport(conditions, len(panel), tuple(failures))
