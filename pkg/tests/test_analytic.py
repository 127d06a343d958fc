"""Analytic model: length law, survivor counts, block curves, exponents."""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import enumerate_string_probs
from zipflab import (
    GammaGrowth,
    ModelParams,
    PolynomialGrowth,
    SurvivalProfile,
    SurvivorTable,
    Unfiltered,
    analytic_blocks,
    analytic_rank_frequency,
    cumulative_types,
    expected_word_count,
    format_profile,
    invert_rank,
    parse_profile,
    post_filter_frequency,
    survival_count,
    survival_probability,
    tail_slope,
    theoretical_exponent,
    unfiltered_exponent,
    word_length_pmf,
)
from zipflab.errors import (
    CapExceeded,
    EmptyLengthClass,
    NoSurvivors,
    ParameterError,
    ProfileNotAsymptotic,
)


# ---------------------------------------------------------------------------
# parameters and validation
# ---------------------------------------------------------------------------


def test_params_validation():
    with pytest.raises(ParameterError):
        ModelParams(1, 0.5)
    with pytest.raises(ParameterError):
        ModelParams(26, 0.0)
    with pytest.raises(ParameterError):
        ModelParams(26, 1.0)
    with pytest.raises(ParameterError):
        ModelParams(2, 0.5, symbol_probs=(0.3, 0.3))  # sums to 1.1
    ModelParams(2, 0.5, symbol_probs=(0.25, 0.25))


def test_profile_validation():
    with pytest.raises(ParameterError):
        GammaGrowth(coeff=0.0, gamma=0.5)
    with pytest.raises(ParameterError):
        GammaGrowth(coeff=1.0, gamma=1.5)
    with pytest.raises(ParameterError):
        PolynomialGrowth(c0=-1.0, c1=1.0, beta=2.0)
    with pytest.raises(ParameterError):
        SurvivalProfile(Unfiltered(), k_min=3, k_max=2)


def test_profile_infeasible_survival_probability():
    # T_1 = floor(100 * 2**0.4) = 131 > 2**1: pi_1 > 1 must be rejected
    params = ModelParams(2, 0.5)
    profile = SurvivalProfile(GammaGrowth(coeff=100.0, gamma=0.4), k_max=10)
    with pytest.raises(ParameterError):
        analytic_blocks(params, profile)


# ---------------------------------------------------------------------------
# word length law
# ---------------------------------------------------------------------------


def test_pmf_trivial_values():
    assert word_length_pmf(ModelParams(26, 0.5), 1) == 0.25
    assert word_length_pmf(ModelParams(26, 0.18), 0) == 0.18


def test_pmf_direct_high_precision():
    # oracle: 50-digit evaluation of (0.82)**4 * 0.18
    with mpmath.workdps(50):
        expected = float(mpmath.mpf("0.82") ** 4 * mpmath.mpf("0.18"))
    got = word_length_pmf(ModelParams(26, 0.18), 4)
    assert got == pytest.approx(expected, abs=1e-15)
    assert f"{got:.5f}" == "0.08138"


@given(
    q=st.floats(min_value=0.1, max_value=0.9),
    upto=st.integers(min_value=0, max_value=300),
)
@settings(max_examples=50, deadline=None)
def test_pmf_partial_sums_match_geometric_tail(q, upto):
    # the partial sum identity sum_{l<=L} = 1 - (1-q)**(L+1), exactly
    params = ModelParams(26, q)
    partial = math.fsum(word_length_pmf(params, l) for l in range(upto + 1))
    assert partial == pytest.approx(1.0 - (1.0 - q) ** (upto + 1), abs=1e-12)


def test_pmf_partial_sum_near_one_at_l200():
    # (1-q)**201 < 1e-9 requires q >= 0.098; the q >= 0.1 grid satisfies it
    for q in (0.1, 0.18, 0.5, 0.9):
        params = ModelParams(26, q)
        partial = math.fsum(word_length_pmf(params, l) for l in range(201))
        assert abs(partial - 1.0) < 1e-9


def test_expected_word_count():
    assert expected_word_count(100, ModelParams(26, 0.18)) == 18.0
    assert expected_word_count(1, ModelParams(26, 0.5)) == 0.5
    assert expected_word_count(3_000_000, ModelParams(26, 0.18)) == 540000.0


# ---------------------------------------------------------------------------
# survivor counts
# ---------------------------------------------------------------------------


def test_survival_count_table_probability():
    # a probability entry of 10/26**3 must floor to exactly 10 types
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(SurvivorTable(probs={3: 10 / 26**3}), k_min=3, k_max=3)
    assert survival_count(profile, params, 3) == 10


def test_survival_count_unfiltered():
    params = ModelParams(3, 0.5)
    profile = SurvivalProfile(Unfiltered(), k_max=10)
    assert survival_count(profile, params, 2) == 9


def test_survival_count_gamma_integral_exponent():
    # floor(20 * 26**(0.5*2)) = floor(20 * 26) computed exactly
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(GammaGrowth(coeff=20.0, gamma=0.5), k_max=10)
    assert survival_count(profile, params, 2) == 520


def test_survival_count_gamma_matches_mpmath_oracle():
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(GammaGrowth(coeff=0.03, gamma=0.6), k_max=40)
    for k in (4, 7, 11, 23, 40):
        with mpmath.workdps(60):
            expected = int(mpmath.floor(mpmath.mpf(0.03) * mpmath.mpf(26) ** (mpmath.mpf(0.6) * k)))
        assert survival_count(profile, params, k) == expected


def test_survival_count_huge_values_are_exact_integers():
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(Unfiltered(), k_max=100)
    assert survival_count(profile, params, 100) == 26**100


def test_survival_probability_roundtrip():
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(SurvivorTable(counts={3: 10}), k_min=3, k_max=3)
    assert survival_probability(profile, params, 3) == pytest.approx(10 / 17576, rel=1e-15)


def test_polynomial_growth():
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(PolynomialGrowth(c0=5.0, c1=2.0, beta=2.0), k_min=1, k_max=20)
    assert survival_count(profile, params, 3) == 5 + 2 * 9
    profile_frac = SurvivalProfile(PolynomialGrowth(c0=0.0, c1=1.5, beta=1.5), k_min=1, k_max=20)
    assert survival_count(profile_frac, params, 4) == math.floor(1.5 * 4**1.5)


def test_cumulative_types():
    params3 = ModelParams(3, 0.5)
    assert cumulative_types(SurvivalProfile(Unfiltered(), k_min=1, k_max=5), params3, 2) == 12
    assert cumulative_types(SurvivalProfile(Unfiltered(), k_min=0, k_max=5), params3, 2) == 13
    params26 = ModelParams(26, 0.18)
    table = SurvivalProfile(SurvivorTable(counts={3: 10, 4: 20}), k_min=3, k_max=4)
    assert cumulative_types(table, params26, 4) == 30


# ---------------------------------------------------------------------------
# post-filter frequency
# ---------------------------------------------------------------------------


def test_post_filter_frequency_unnormalized_exact_rational():
    # oracle: exact rational (1-q)**k * q / T_k with q = 18/100
    q = Fraction(18, 100)
    expected = float((1 - q) ** 1 * q / 26)
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(Unfiltered(), k_max=40)
    got = post_filter_frequency(params, profile, 1, mode="unnormalized")
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.005677, abs=5e-7)


def test_post_filter_frequency_single_class_renormalized():
    params = ModelParams(26, 0.5)
    profile = SurvivalProfile(SurvivorTable(counts={1: 1}), k_min=1, k_max=1)
    assert post_filter_frequency(params, profile, 1) == pytest.approx(1.0, abs=1e-15)


def test_post_filter_frequency_table_unnormalized():
    q = Fraction(18, 100)
    expected = float((1 - q) ** 3 * q / 10)
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(SurvivorTable(counts={3: 10}), k_min=3, k_max=3)
    got = post_filter_frequency(params, profile, 3, mode="unnormalized")
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.009926, abs=5e-7)


def test_post_filter_frequency_empty_class():
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(SurvivorTable(counts={3: 10}), k_min=1, k_max=5)
    with pytest.raises(EmptyLengthClass):
        post_filter_frequency(params, profile, 4)


# ---------------------------------------------------------------------------
# analytic tables
# ---------------------------------------------------------------------------


def test_analytic_rank_frequency_small_model():
    params = ModelParams(3, 0.5)
    profile = SurvivalProfile(Unfiltered(), k_min=1, k_max=2)
    table = analytic_rank_frequency(params, profile)
    z = 0.25 + 0.125
    assert len(table) == 12
    np.testing.assert_allclose(table.frequencies[:3], 0.25 / z / 3, rtol=1e-15)
    np.testing.assert_allclose(table.frequencies[3:], 0.125 / z / 9, rtol=1e-15)


def test_analytic_single_class_uniform():
    params = ModelParams(26, 0.3)
    profile = SurvivalProfile(SurvivorTable(counts={4: 5}), k_min=4, k_max=4)
    table = analytic_rank_frequency(params, profile)
    np.testing.assert_allclose(table.frequencies, 0.2, rtol=1e-15)


def test_analytic_filtered_head_structure():
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(
        SurvivorTable(counts={3: 10}, default=GammaGrowth(0.03, 0.6)),
        k_min=3, k_max=12,
    )
    curve = analytic_blocks(params, profile)
    head = curve.blocks[0]
    assert head.length == 3 and head.width == 10 and head.start_rank == 1
    freqs = [b.frequency for b in curve.blocks]
    assert all(a > b for a, b in zip(freqs, freqs[1:]))
    table = curve.expand()
    assert np.all(table.frequencies[:10] == table.frequencies[0])
    assert table.frequencies[10] < table.frequencies[9]


@pytest.mark.parametrize("m,q,k_max", [(3, 0.5, 5), (2, 0.3, 6), (4, 0.18, 4)])
def test_oracle_equivalence_small_models(m, q, k_max):
    # brute-force enumeration of all strings vs the analytic table
    params = ModelParams(m, q)
    profile = SurvivalProfile(Unfiltered(), k_min=1, k_max=k_max)
    table = analytic_rank_frequency(params, profile)
    oracle = enumerate_string_probs(m, q, 1, k_max)
    assert len(table) == len(oracle)
    np.testing.assert_allclose(
        table.frequencies, [float(p) for p in oracle], atol=1e-12, rtol=0
    )


def test_analytic_mass_is_one():
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(
        SurvivorTable(counts={3: 10}, default=GammaGrowth(0.03, 0.6)),
        k_min=3, k_max=40,
    )
    curve = analytic_blocks(params, profile)
    assert abs(curve.total_mass - 1.0) < 1e-9


def test_unnormalized_reduces_to_pure_law():
    # unfiltered + unnormalized: every length-k type has (1-q)**k q / m**k
    params = ModelParams(3, 0.5)
    profile = SurvivalProfile(Unfiltered(), k_min=1, k_max=6)
    curve = analytic_blocks(params, profile, mode="unnormalized")
    by_length = {b.length: b for b in curve.blocks}
    for k in range(0, 7):
        expected = (0.5**k * 0.5) / (3**k if k else 1)
        assert by_length[k].frequency == pytest.approx(expected, rel=1e-15)
    # length 0 contributes the single empty type in this mode
    assert by_length[0].width == 1
    assert curve.total_mass == pytest.approx(1 - 0.5**7, rel=1e-12)


def test_tie_break_shorter_length_first():
    # two classes with identical frequency: (1-q) * T_k ratio contrived
    # f_k ~ (1-q)^k / T_k equal for k=1,2 when T_2 = (1-q) * T_1 * ... use q=0.5, T_1=2, T_2=1
    params = ModelParams(4, 0.5)
    profile = SurvivalProfile(SurvivorTable(counts={1: 2, 2: 1}), k_min=1, k_max=2)
    curve = analytic_blocks(params, profile)
    assert curve.blocks[0].frequency == pytest.approx(curve.blocks[1].frequency)
    assert curve.blocks[0].length == 1
    assert curve.blocks[0].start_rank == 1 and curve.blocks[1].start_rank == 3


def test_cap_exceeded():
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(Unfiltered(), k_max=10)
    with pytest.raises(CapExceeded):
        analytic_rank_frequency(params, profile, cap=1000)


def test_no_survivors():
    params = ModelParams(26, 0.18)
    profile = SurvivalProfile(SurvivorTable(counts={}), k_min=1, k_max=5)
    with pytest.raises(NoSurvivors):
        analytic_blocks(params, profile)


def test_blocks_csv_structure_matches_widths():
    # block widths must equal survivor counts when frequencies are distinct
    params = ModelParams(5, 0.4)
    profile = SurvivalProfile(GammaGrowth(coeff=1.0, gamma=0.8), k_min=1, k_max=8)
    curve = analytic_blocks(params, profile)
    for b in curve.blocks:
        assert b.width == survival_count(profile, params, b.length)
    table = curve.expand()
    # runs of equal frequency in the expanded table equal the block widths
    runs = []
    current = table.frequencies[0]
    size = 0
    for f in table.frequencies:
        if f == current:
            size += 1
        else:
            runs.append(size)
            current = f
            size = 1
    runs.append(size)
    assert runs == [b.width for b in curve.blocks]


@given(
    m=st.integers(min_value=2, max_value=6),
    q=st.floats(min_value=0.1, max_value=0.8),
    k_max=st.integers(min_value=2, max_value=7),
)
@settings(max_examples=40, deadline=None)
def test_property_mass_and_monotonicity(m, q, k_max):
    params = ModelParams(m, q)
    profile = SurvivalProfile(Unfiltered(), k_min=1, k_max=k_max)
    table = analytic_rank_frequency(params, profile)
    assert abs(float(np.sum(table.frequencies)) - 1.0) < 1e-9
    assert np.all(np.diff(table.frequencies) <= 0)


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------


def test_theoretical_exponent_values():
    params = ModelParams(26, 0.18)
    # oracle: high-precision 1 + ln(1/0.82)/ln(26)
    with mpmath.workdps(40):
        expected = float(1 - mpmath.log(mpmath.mpf("0.82")) / mpmath.log(26))
    assert theoretical_exponent(params, 1.0) == pytest.approx(expected, abs=1e-12)
    assert round(theoretical_exponent(params, 1.0), 4) == 1.0609
    assert theoretical_exponent(params, 0.5) == pytest.approx(2 * expected, rel=1e-12)
    assert round(theoretical_exponent(params, 0.5), 4) == 2.1218


def test_theoretical_exponent_q_to_zero_limit():
    assert theoretical_exponent(ModelParams(26, 1e-12), 1.0) == pytest.approx(1.0, abs=1e-9)


def test_unfiltered_exponent_identity():
    for m, q in [(26, 0.18), (2, 0.5), (26, 0.5), (33, 0.1)]:
        params = ModelParams(m, q)
        assert unfiltered_exponent(params) == theoretical_exponent(params, 1.0)
    assert unfiltered_exponent(ModelParams(2, 0.5)) == 2.0
    assert unfiltered_exponent(ModelParams(26, 0.5)) == pytest.approx(1.2127, abs=5e-5)


def test_tail_slope_matches_formula_at_gamma_one():
    params = ModelParams(26, 0.18)
    assert tail_slope(params, 1.0) == theoretical_exponent(params, 1.0)
    # for gamma < 1 the closed form and the actual tail slope part ways
    assert tail_slope(params, 0.6) < theoretical_exponent(params, 0.6)


def test_invert_rank():
    params = ModelParams(26, 0.18)
    gamma1 = SurvivalProfile(GammaGrowth(coeff=1.0, gamma=1.0), k_max=40)
    assert invert_rank(gamma1, params, 26) == pytest.approx(1.0, rel=1e-12)
    gamma05 = SurvivalProfile(GammaGrowth(coeff=1.0, gamma=0.5), k_max=40)
    assert invert_rank(gamma05, params, 676) == pytest.approx(4.0, rel=1e-12)
    gamma06 = SurvivalProfile(GammaGrowth(coeff=1.0, gamma=0.6), k_max=40)
    assert invert_rank(gamma06, params, 10_000) == pytest.approx(
        math.log(10_000) / (0.6 * math.log(26)), rel=1e-12
    )
    assert round(invert_rank(gamma06, params, 10_000), 3) == 4.712
    poly = SurvivalProfile(PolynomialGrowth(c0=0, c1=2, beta=2), k_max=40)
    with pytest.raises(ProfileNotAsymptotic):
        invert_rank(poly, params, 100)


def test_slope_closure_block_fit_recovers_tail_slope():
    # OLS on block midpoints converges to tail_slope (the real asymptote)
    from zipflab import fit_exponent_blocks

    params = ModelParams(26, 0.18)
    for gamma in (1.0, 0.6):
        coeff = 1.0 if gamma == 1.0 else 0.03
        profile = SurvivalProfile(GammaGrowth(coeff=coeff, gamma=gamma), k_min=1, k_max=25)
        curve = analytic_blocks(params, profile)
        fit = fit_exponent_blocks(curve, skip_blocks=8)
        assert fit.alpha_hat == pytest.approx(tail_slope(params, gamma), abs=0.05)


# ---------------------------------------------------------------------------
# profile mini-language
# ---------------------------------------------------------------------------


def test_parse_profile_families():
    assert parse_profile("unfiltered") == Unfiltered()
    assert parse_profile("gamma:C=0.03,g=0.6") == GammaGrowth(0.03, 0.6)
    assert parse_profile("poly:c0=1,c1=5,b=2") == PolynomialGrowth(1.0, 5.0, 2.0)
    table = parse_profile("table:k3=10,k4=74,default=gamma:C=0.03,g=0.6")
    assert table.counts == {3: 10, 4: 74}
    assert table.default == GammaGrowth(0.03, 0.6)
    probs = parse_profile("table:pk3=0.00056894,k4=74")
    assert probs.probs == {3: 0.00056894}


def test_parse_profile_errors():
    for bad in ("nope", "gamma:C=1", "gamma:C=x,g=1", "table:", "table:z3=1", "poly:c0=1,c1=1"):
        with pytest.raises(ParameterError):
            parse_profile(bad)


@given(
    variant=st.one_of(
        st.just(Unfiltered()),
        st.builds(
            GammaGrowth,
            coeff=st.floats(min_value=0.001, max_value=100),
            gamma=st.floats(min_value=0.05, max_value=1.0),
        ),
        st.builds(
            PolynomialGrowth,
            c0=st.floats(min_value=0, max_value=50),
            c1=st.floats(min_value=0.1, max_value=50),
            beta=st.floats(min_value=1.0, max_value=3.0),
        ),
    )
)
@settings(max_examples=60, deadline=None)
def test_profile_roundtrip(variant):
    assert parse_profile(format_profile(variant)) == variant


def test_profile_roundtrip_table():
    variant = SurvivorTable(counts={3: 10}, probs={5: 0.25}, default=GammaGrowth(0.5, 0.9))
    assert parse_profile(format_profile(variant)) == variant
