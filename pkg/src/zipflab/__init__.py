"""zipflab: rank-frequency statistics of filtered random-typing text.

A two-stage generative model of word frequencies: an i.i.d. symbol source
with a terminating space (geometric word lengths over an exponentially
growing type space) followed by a survival filter that thins each length
class down to T_k types. The package provides exact analytic
rank-frequency curves, large-scale stochastic simulation over the
never-materialized type space, Zipf-exponent estimation (log-log OLS and
discrete power-law MLE), ingestion of local text corpora, and a
deterministic CLI with manifest-based re-runs.
"""

__version__ = "0.1.0"

from .analytic import (
    Block,
    BlockCurve,
    GammaGrowth,
    ModelParams,
    PolynomialGrowth,
    RankFrequencyTable,
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
    profile_gamma,
    survival_count,
    survival_count_real,
    survival_probability,
    tail_slope,
    theoretical_exponent,
    unfiltered_exponent,
    word_length_pmf,
)
from .corpus import (
    ComparisonConfig,
    ComparisonReport,
    TokenizationConfig,
    compare_model_to_corpus,
    ingest_text,
    mean_token_length,
    space_prob_from_mean_length,
)
from .estimate import (
    FitResult,
    HeadReport,
    count_tokens,
    default_fit_window,
    empirical_block_points,
    fit_exponent_blocks,
    fit_exponent_mle,
    fit_exponent_ols,
    fit_exponent_points,
    head_mass,
    log_binned_curve,
    rank_frequency,
)
from .generate import (
    GenerationConfig,
    GenerationReport,
    RawStreamReport,
    Speller,
    TypeId,
    count_filtered_tokens,
    generate_symbol_stream,
    realize_spelling,
    run_symbol_stream,
    sample_filtered_tokens,
    segment_words,
)

__all__ = [name for name in dir() if not name.startswith("_")]
