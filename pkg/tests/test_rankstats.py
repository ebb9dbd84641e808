from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from embedlab.embed import EmbeddingParams, admissible_dim, present_params
from embedlab.rankstats import (
    EmptyHistogramError,
    RankHistogram,
    admissible_rows_sampler,
    chi_square_compare,
    constant_rank_sampler,
    corollary_ratio,
    corollary_ratio_formula,
    corollary_two_step_formula,
    deficit_ratio_vs_corollary,
    exhaustive_rank_histogram,
    histogram_of,
    migler_count,
    monte_carlo_ranks,
    q_binomial,
    rank_table,
    rho_full,
    rho_rank_deficit,
    uniform_in_T_sampler,
    uniform_matrix_histogram,
    uniform_matrix_sampler,
    validation_rejection_rate,
    xi,
)

# ---------------------------------------------------------------------
# Exact counts


def test_q_binomial():
    assert q_binomial(4, 2, 2) == 35
    assert q_binomial(5, 0, 3) == 1
    with pytest.raises(ValueError):
        q_binomial(2, 3, 2)


@given(st.sampled_from([2, 4]), st.integers(1, 6), st.integers(1, 6))
def test_rank_counts_sum_to_all_matrices(q, t, n):
    assert sum(migler_count(k, t, n, q) for k in range(min(t, n) + 1)) == q ** (t * n)


def test_two_by_two_counts():
    assert uniform_matrix_histogram(2, 2).bins == {0: 1, 1: 9, 2: 6}


@pytest.mark.parametrize("t, n", [(t, n) for n in range(1, 7) for t in range(1, n + 1)])
def test_ratio_formula_matches_counts(t, n):
    assert corollary_ratio(t, n) == corollary_ratio_formula(t, n)
    if t >= 2:
        two_step = Fraction(migler_count(t - 2, t, n), migler_count(t, t, n))
        assert two_step == corollary_two_step_formula(t, n)


def test_ratio_formula_needs_t_at_most_n():
    with pytest.raises(ValueError):
        corollary_ratio_formula(4, 3)


# ---------------------------------------------------------------------
# Admissible-row estimates (m = 2, b = 2: c = 4, z = 7)


def test_xi_values():
    assert [xi(h, 4, 2, 7) for h in range(3)] == [0, 1, 2]
    assert xi(3, 4, 2, 7) == Fraction(7, 2)
    with pytest.raises(ValueError):
        xi(-1, 4, 2, 7)


def test_rho_values():
    assert rho_full(3, 4, 2, 7) == 3360
    assert rho_rank_deficit(2, 4, 2, 7) == 16
    assert rho_rank_deficit(3, 4, 2, 7) == 720


def test_exhaustive_three_rows(tiny_params):
    hist = exhaustive_rank_histogram(tiny_params, 3)
    assert hist.total == 16**3
    assert hist.bins[3] == 3360
    assert hist.bins[2] == 720
    assert hist.bins[1] == 16


def test_four_row_estimates_within_ten_percent(tiny_params):
    hist = exhaustive_rank_histogram(tiny_params, 4)
    for k, estimate in ((4, rho_full(4, 4, 2, 7)), (3, rho_rank_deficit(4, 4, 2, 7))):
        assert abs(hist.bins.get(k, 0) - estimate) <= estimate / 10


def test_exhaustive_refuses_large_enumeration(gf16):
    with pytest.raises(ValueError):
        exhaustive_rank_histogram(EmbeddingParams(gf16, 4), 3)


# ---------------------------------------------------------------------
# Monte Carlo


def test_monte_carlo_independent_of_workers():
    sampler = uniform_matrix_sampler(6, 6)
    one = monte_carlo_ranks(sampler, 700, seed=5, workers=1)
    four = monte_carlo_ranks(sampler, 700, seed=5, workers=4)
    assert one.bins == four.bins
    assert one.total == 700


def test_monte_carlo_seed_changes_draws():
    sampler = uniform_matrix_sampler(8, 8)
    assert monte_carlo_ranks(sampler, 300, seed=1).bins != monte_carlo_ranks(sampler, 300, seed=2).bins


def test_constant_rank_sampler():
    hist = monte_carlo_ranks(constant_rank_sampler(5, 9, 3), 10, seed=0)
    assert hist.bins == {3: 10}
    with pytest.raises(ValueError):
        constant_rank_sampler(2, 2, 3)


def test_admissible_rows_never_exceed_dimension(tiny_params):
    hist = monte_carlo_ranks(admissible_rows_sampler(tiny_params, 9), 200, seed=3)
    assert max(hist.bins) <= 7


def test_uniform_in_t_sampler(tiny_params):
    space = admissible_dim(tiny_params)
    hist = monte_carlo_ranks(uniform_in_T_sampler(space, 7), 200, seed=4)
    assert max(hist.bins) <= 7
    assert hist.total == 200


# ---------------------------------------------------------------------
# Histograms and the chi-square comparison


def test_histogram_text_format():
    hist = RankHistogram({3: 10, 2: Fraction(5, 2)}, "formula")
    parsed = RankHistogram.from_lines(hist.to_lines())
    assert parsed.bins == hist.bins
    assert parsed.source == "formula"
    assert hist.to_lines().startswith("# source=formula")


def test_histogram_fraction_and_empty():
    hist = histogram_of([1, 1, 2, 3])
    assert hist.fraction(1) == Fraction(1, 2)
    with pytest.raises(EmptyHistogramError):
        RankHistogram().fraction(0)
    with pytest.raises(ValueError):
        RankHistogram({-1: 3})


def test_chi_square_accepts_matching_counts():
    expected = uniform_matrix_histogram(4, 4)
    scaled = RankHistogram({k: c * 3 for k, c in expected.bins.items()})
    result = chi_square_compare(scaled, expected)
    assert result.statistic == pytest.approx(0.0)
    assert not result.distinguished


def test_chi_square_rejects_constant_ranks():
    expected = uniform_matrix_histogram(6, 6)
    observed = RankHistogram({6: 1000})
    result = chi_square_compare(observed, expected)
    assert result.distinguished
    assert result.dof >= 1
    assert result.p_value < 1e-6


def test_chi_square_single_bin_has_no_test():
    result = chi_square_compare(RankHistogram({2: 10}), RankHistogram({2: 40}))
    assert result.dof == 0
    assert not result.distinguished


def test_chi_square_arguments_checked():
    with pytest.raises(ValueError):
        chi_square_compare(RankHistogram({1: 1}), RankHistogram({1: 1}), significance=1.5)
    with pytest.raises(EmptyHistogramError):
        chi_square_compare(RankHistogram(), RankHistogram({1: 1}))


def test_validation_rejection_rate_bounds():
    sampler = uniform_matrix_sampler(5, 5)
    rate = validation_rejection_rate(sampler, uniform_matrix_histogram(5, 5), runs=5, matrices_per_run=200, seed=0)
    assert 0.0 <= rate <= 1.0
    assert validation_rejection_rate(constant_rank_sampler(5, 5, 0), uniform_matrix_histogram(5, 5), 3, 200, 0) == 1.0


@pytest.mark.slow
def test_validation_rejection_rate_is_calibrated():
    # 1000 runs over seeds 5000..5999; the nominal false-positive rate at 0.01
    sampler = uniform_matrix_sampler(5, 5)
    rate = validation_rejection_rate(
        sampler, uniform_matrix_histogram(5, 5), runs=1000, matrices_per_run=200, seed=5000, significance=0.01
    )
    assert 0.005 <= rate <= 0.02


def test_deficit_ratio_near_square_case(tiny_params):
    comparison = deficit_ratio_vs_corollary(tiny_params, trials=20_000, seed=0)
    assert comparison.rows == 7
    assert comparison.corollary == Fraction(127, 64)
    # rows are edges of K_{4,4}: rank 7 needs a spanning tree, so rank 6 is more common
    assert comparison.empirical > comparison.corollary
    assert comparison.factor <= 4


def test_deficit_ratio_needs_eps():
    with pytest.raises(ValueError):
        deficit_ratio_vs_corollary(present_params(3), trials=10, seed=0)


# ---------------------------------------------------------------------
# Table


def test_rank_table(tiny_params):
    rows = {row.rank: row for row in rank_table(tiny_params, 3, 500, seed=0)}
    assert rows[3].formula == 3360
    assert rows[3].exhaustive == 3360
    assert rows[2].formula == 720
    assert sum(row.monte_carlo for row in rows.values()) == 500
