"""Rank counts: exact formulas, admissible-row estimates, Monte Carlo and chi-square."""
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import special, stats

from .algebra import BitMatrix, rank, rank_of_rows
from .embed import AdmissibleSpace, EmbeddingParams, alpha_bits, random_states
from .schemas import ChiSquareResult, HistogramModel
from .settings import DEFAULT_SIGNIFICANCE

logger = logging.getLogger(__name__)

# trials drawn from one Philox stream; fixed so results do not depend on worker count
TRIAL_CHUNK = 256
MIN_EXPECTED = 5.0

Source = Literal["formula", "monte-carlo", "exhaustive", "experiment"]
Count = int | Fraction


class EmptyHistogramError(ValueError):
    pass


@dataclass
class RankHistogram:
    bins: dict[int, Count] = field(default_factory=dict)
    source: Source = "experiment"

    def __post_init__(self) -> None:
        for k, c in self.bins.items():
            if k < 0 or c < 0:
                raise ValueError("ranks and counts must be non-negative")

    @property
    def total(self) -> Count:
        return sum(self.bins.values(), 0)

    def add(self, rank_value: int, count: int = 1) -> None:
        self.bins[rank_value] = self.bins.get(rank_value, 0) + count

    def merge(self, other: "RankHistogram") -> "RankHistogram":
        out = RankHistogram(dict(self.bins), self.source)
        for k, c in other.bins.items():
            out.add(k, c)
        return out

    def fraction(self, rank_value: int) -> Fraction:
        total = self.total
        if total == 0:
            raise EmptyHistogramError("histogram is empty")
        return Fraction(self.bins.get(rank_value, 0)) / Fraction(total)

    def to_lines(self) -> str:
        lines = [f"# source={self.source} total={self.total}"]
        lines += [f"{k} {c}" for k, c in sorted(self.bins.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_lines(cls, text: str) -> "RankHistogram":
        source: Source = "experiment"
        bins: dict[int, Count] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, value = token.partition("=")
                    if key == "source":
                        source = value  # type: ignore[assignment]
                continue
            k, c = line.split()
            value = Fraction(c)
            bins[int(k)] = value.numerator if value.denominator == 1 else value
        return cls(bins, source)

    def to_model(self) -> HistogramModel:
        return HistogramModel(source=self.source, total=int(self.total), bins={k: int(c) for k, c in self.bins.items()})


def histogram_of(ranks: Sequence[int], source: Source = "experiment") -> RankHistogram:
    hist = RankHistogram(source=source)
    for r in ranks:
        hist.add(r)
    return hist


# -- exact counts over F_q ------------------------------------------------------------


def q_binomial(n: int, k: int, q: int) -> int:
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, n={n}]")
    num = 1
    den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def migler_count(k: int, t: int, n: int, q: int = 2) -> int:
    """Number of t×n matrices over F_q of rank exactly k."""
    if not 0 <= k <= min(t, n):
        raise ValueError(f"rank k={k} outside [0, min(t, n)={min(t, n)}]")
    out = q_binomial(n, k, q)
    for i in range(k):
        out *= q ** t - q ** i
    return out


def uniform_matrix_histogram(rows: int, cols: int, q: int = 2) -> RankHistogram:
    return RankHistogram({k: migler_count(k, rows, cols, q) for k in range(min(rows, cols) + 1)}, "formula")


def corollary_ratio(t: int, n: int) -> Fraction:
    """d_{t-1,t} / d_{t,t} from exact counts."""
    return Fraction(migler_count(t - 1, t, n), migler_count(t, t, n))


def corollary_ratio_formula(t: int, n: int) -> Fraction:
    if t < n:
        return Fraction(2 ** t - 1, 2 ** n - 2 ** (t - 1))
    if t == n:
        return Fraction(2 ** n - 1, 2 ** (n - 1))
    raise ValueError("need t <= n")


def corollary_two_step_formula(t: int, n: int) -> Fraction:
    """d_{t-2,t} / d_{t,t} as printed in both corollaries."""
    if t < n:
        return Fraction((2 ** t - 1) * (2 ** (t - 1) - 1), 3 * (2 ** n - 2 ** (t - 2)) * (2 ** n - 2 ** (t - 1)))
    if t == n:
        return Fraction((2 ** n - 1) * (2 ** (n - 1) - 1), 9 * 2 ** (2 * n - 3))
    raise ValueError("need t <= n")


# -- admissible-row estimates --------------------------------------------------------------


def xi(h: int, c: int, b: int, z: int) -> Fraction:
    """Average number of admissible vectors in the span of h independent admissible vectors."""
    if h < 0:
        raise ValueError("h must be non-negative")
    if h <= 2:
        return Fraction(h)
    return h + Fraction((2 ** h - h - 1) * c ** b, 2 ** z)


def rho_full(k: int, c: int, b: int, z: int) -> Fraction:
    """Estimated count of k-row admissible matrices of rank k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    out = Fraction(1)
    for i in range(1, k + 1):
        out *= c ** b - xi(i - 1, c, b, z)
    return out


def rho_rank_deficit(k: int, c: int, b: int, z: int) -> Fraction:
    """Estimated count of k-row admissible matrices of rank k - 1 (exact for k <= 3)."""
    if k < 2:
        raise ValueError("rank k-1 needs k >= 2")
    cb = c ** b
    if k == 2:
        return Fraction(cb)
    if k == 3:
        return rho_full(2, c, b, z) * xi(2, c, b, z) + rho_rank_deficit(2, c, b, z) * (cb - xi(1, c, b, z))
    if k == 4:
        return rho_full(3, c, b, z) * xi(3, c, b, z) + rho_rank_deficit(3, c, b, z) * (cb - xi(2, c, b, z))
    independent = Fraction((2 ** z - 2 ** (k - 2)) * cb, 2 ** z)
    return rho_full(k - 1, c, b, z) * xi(k - 1, c, b, z) + rho_rank_deficit(k - 1, c, b, z) * independent


def exhaustive_rank_histogram(params: EmbeddingParams, rows: int) -> RankHistogram:
    """Ranks of every rows-tuple of admissible vectors (all (2^m)^b choices per row)."""
    count = (1 << params.r) ** rows
    if count > 1 << 24:
        raise ValueError(f"{count} matrices are too many to enumerate")
    images = [alpha_bits(params, v) for v in range(1 << params.r)]
    hist = RankHistogram(source="exhaustive")
    for combo in itertools.product(images, repeat=rows):
        hist.add(rank_of_rows(combo))
    return hist


# -- Monte Carlo ------------------------------------------------------------------------------

Sampler = Callable[[np.random.Generator], "BitMatrix | Sequence[int]"]


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream number ``index`` for key ``seed``."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(index + 1))


def rank_any(sample: BitMatrix | Sequence[int]) -> int:
    if isinstance(sample, BitMatrix):
        return rank(sample)
    return rank_of_rows(sample)


def _run_chunk(sampler: Sampler, seed: int, chunk: int, count: int) -> list[int]:
    rng = trial_rng(seed, chunk)
    return [rank_any(sampler(rng)) for _ in range(count)]


def monte_carlo_ranks(sampler: Sampler, trials: int, seed: int, workers: int = 1) -> RankHistogram:
    """Histogram of ``trials`` sampled ranks; identical for any worker count."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    chunks = [(i, min(TRIAL_CHUNK, trials - i * TRIAL_CHUNK)) for i in range(-(-trials // TRIAL_CHUNK))]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _run_chunk(sampler, seed, *c), chunks))
    else:
        results = [_run_chunk(sampler, seed, *c) for c in chunks]
    hist = RankHistogram(source="monte-carlo")
    for ranks in results:
        for r in ranks:
            hist.add(r)
    logger.debug("monte carlo: %d trials, seed %d, %d bins", trials, seed, len(hist.bins))
    return hist


def uniform_matrix_sampler(rows: int, cols: int) -> Sampler:
    def sample(rng: np.random.Generator) -> BitMatrix:
        return BitMatrix.from_dense(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))

    return sample


def admissible_rows_sampler(params: EmbeddingParams, rows: int) -> Sampler:
    """Rows α(v) for independent uniform states v."""
    if params.r <= 16:
        images = [alpha_bits(params, v) for v in range(1 << params.r)]

        def sample_small(rng: np.random.Generator) -> list[int]:
            return [images[i] for i in rng.integers(0, len(images), size=rows)]

        return sample_small

    def sample(rng: np.random.Generator) -> BitMatrix:
        return BitMatrix.from_rows([alpha_bits(params, v) for v in random_states(params, rows, rng)], params.s)

    return sample


def uniform_in_T_sampler(space: AdmissibleSpace, rows: int) -> Sampler:
    """Rows uniform in T: random combinations of an independent basis."""
    if not space.independent:
        raise ValueError("uniform-in-T sampling needs an independent basis")
    basis = space.basis

    def sample(rng: np.random.Generator) -> BitMatrix:
        coeffs = BitMatrix.from_dense(rng.integers(0, 2, size=(rows, basis.rows), dtype=np.uint8))
        return coeffs @ basis

    return sample


def constant_rank_sampler(rows: int, cols: int, rank_value: int) -> Sampler:
    if not 0 <= rank_value <= min(rows, cols):
        raise ValueError("rank_value outside [0, min(rows, cols)]")
    fixed = BitMatrix.from_rows([1 << i if i < rank_value else 0 for i in range(rows)], cols)

    def sample(rng: np.random.Generator) -> BitMatrix:
        return fixed

    return sample


# -- comparison ---------------------------------------------------------------------------------


def _merge_groups(expected: list[float]) -> list[list[int]]:
    groups: list[list[int]] = []
    current: list[int] = []
    acc = 0.0
    for i, e in enumerate(expected):
        current.append(i)
        acc += e
        if acc >= MIN_EXPECTED:
            groups.append(current)
            current, acc = [], 0.0
    if current:
        if groups:
            groups[-1].extend(current)
        else:
            groups.append(current)
    return groups


def chi_square_compare(
    observed: RankHistogram,
    expected: RankHistogram,
    significance: float = DEFAULT_SIGNIFICANCE,
) -> ChiSquareResult:
    """Pearson test of observed ranks against expected, bins with expected count < 5 merged upward."""
    if not 0 < significance < 1:
        raise ValueError("significance must lie in (0, 1)")
    if observed.total == 0 or expected.total == 0:
        raise EmptyHistogramError("cannot compare empty histograms")
    ranks = sorted(set(observed.bins) | set(expected.bins))
    scale = Fraction(observed.total) / Fraction(expected.total)
    exp = [float(Fraction(expected.bins.get(k, 0)) * scale) for k in ranks]
    obs = [float(observed.bins.get(k, 0)) for k in ranks]
    groups = _merge_groups(exp)
    if len(groups) < 2:
        logger.warning("only one bin after merging; no test possible")
        return ChiSquareResult(statistic=0.0, p_value=1.0, dof=0, distinguished=False)
    obs_g = [sum(obs[i] for i in g) for g in groups]
    exp_g = [sum(exp[i] for i in g) for g in groups]
    statistic = float(stats.chisquare(obs_g, exp_g).statistic)
    dof = len(groups) - 1
    p_value = float(special.gammaincc(dof / 2.0, statistic / 2.0))
    return ChiSquareResult(statistic=statistic, p_value=p_value, dof=dof, distinguished=p_value < significance)


@dataclass(frozen=True)
class RatioComparison:
    rows: int
    empirical: Fraction
    corollary: Fraction

    @property
    def factor(self) -> float:
        """How far apart the two ratios are, as a multiplicative factor (always >= 1)."""
        quotient = self.empirical / self.corollary
        return float(max(quotient, 1 / quotient))


def deficit_ratio_vs_corollary(params: EmbeddingParams, trials: int, seed: int) -> RatioComparison:
    """Sampled d_{z-1,z} / d_{z,z} for z-row admissible matrices next to the square-case ratio.

    z is the admissible dimension under ε, so full rank means the rows span T.
    """
    if params.t != 1:
        raise ValueError("the ratio is compared under ε only")
    z = params.segment - (params.b - 1)
    hist = monte_carlo_ranks(admissible_rows_sampler(params, z), trials, seed)
    full = hist.bins.get(z, 0)
    if not full:
        raise EmptyHistogramError(f"no full-rank sample in {trials} trials")
    comparison = RatioComparison(z, Fraction(hist.bins.get(z - 1, 0), full), corollary_ratio_formula(z, z))
    logger.info(
        "deficit ratio over %d trials: sampled %.4f, square case %.4f",
        trials, float(comparison.empirical), float(comparison.corollary),
    )
    return comparison


def validation_rejection_rate(
    sampler: Sampler,
    expected: RankHistogram,
    runs: int,
    matrices_per_run: int,
    seed: int,
    significance: float = DEFAULT_SIGNIFICANCE,
) -> float:
    """Fraction of seeded runs of ``sampler`` that the test distinguishes from ``expected``."""
    rejected = 0
    for run in range(runs):
        observed = monte_carlo_ranks(sampler, matrices_per_run, seed=seed + run)
        if chi_square_compare(observed, expected, significance).distinguished:
            rejected += 1
    rate = rejected / runs
    logger.info("validation rejection rate %.4f over %d runs", rate, runs)
    return rate


@dataclass(frozen=True)
class RankTableRow:
    rank: int
    formula: Fraction | None
    exhaustive: int | None
    monte_carlo: int


def rank_table(params: EmbeddingParams, rows: int, trials: int, seed: int) -> list[RankTableRow]:
    """Formula, exhaustive (when enumerable) and Monte Carlo counts for rows-row admissible matrices.

    Formula and exhaustive counts are over all (2^m)^(b·rows) matrices; the
    Monte Carlo column is out of ``trials``.
    """
    if params.t != 1:
        raise ValueError("the counting formulas describe ε only")
    c, b = params.q, params.b
    z = params.segment - (b - 1)
    formula: dict[int, Fraction] = {rows: rho_full(rows, c, b, z)}
    if rows >= 2:
        formula[rows - 1] = rho_rank_deficit(rows, c, b, z)
    try:
        exhaustive = exhaustive_rank_histogram(params, rows)
    except ValueError:
        exhaustive = None
    mc = monte_carlo_ranks(admissible_rows_sampler(params, rows), trials, seed)
    seen = set(formula) | set(mc.bins) | (set(exhaustive.bins) if exhaustive else set())
    return [
        RankTableRow(
            rank=k,
            formula=formula.get(k),
            exhaustive=None if exhaustive is None else int(exhaustive.bins.get(k, 0)),
            monte_carlo=int(mc.bins.get(k, 0)),
        )
        for k in sorted(seen, reverse=True)
    ]
