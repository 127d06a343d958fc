"""Closed-form rank-frequency curves for filtered random-typing text.

The generative model has two stages. A symbol source emits letters from an
alphabet of ``alphabet_size`` symbols, each draw ending a word with
probability ``space_prob``, so word lengths are geometric. A survival
profile then thins the combinatorial space of length-k types down to
``T_k`` surviving types; every surviving type of length k is used with the
same probability. The resulting rank-frequency curve is piecewise constant:
one block of ``T_k`` equal-frequency ranks per length class.

Everything here is exact arithmetic on the block structure: survivor
counts are arbitrary-precision integers, block boundaries never require
materializing individual types, and tables only expand to per-rank entries
on demand (and under a cap).

Two normalization modes exist:

* ``"renormalized"`` (default): length classes are restricted to
  ``[k_min, k_max]`` with zero-survivor classes dropped, and frequencies
  are renormalized so the table sums to exactly 1. Empty words cannot
  occur (``k_min >= 1`` by default).
* ``"unnormalized"``: the idealized textbook law ``(1-q)^k q / T_k`` with
  no renormalization, lengths starting at 0 and a single empty type
  (``T_0 = 1``). Total mass is below 1 whenever the profile kills whole
  length classes or the length range is truncated.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Literal, Mapping, Optional, Sequence, Union

import mpmath
import numpy as np

from .errors import (
    CapExceeded,
    EmptyLengthClass,
    NoSurvivors,
    ParameterError,
    ProfileNotAsymptotic,
)

NormalizationMode = Literal["renormalized", "unnormalized"]

#: Near-integer slack for floors of real-valued survivor counts, so that
#: probability tables written in decimal (e.g. 10/17576 entered as a float)
#: land on the intended integer instead of one below it.
FLOOR_SLACK = 1e-9


# ---------------------------------------------------------------------------
# Model parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Symbol-source parameters.

    alphabet_size: number of non-space symbols (m >= 2).
    space_prob: probability of the word-terminating space symbol, in (0, 1).
    symbol_probs: optional per-symbol probabilities; must sum with
        space_prob to 1 within 1e-12. When absent, symbols are uniform at
        (1 - space_prob) / alphabet_size. Only the raw symbol stream uses
        non-uniform symbol probabilities; the filtered law is uniform
        within each length class by construction.
    """

    alphabet_size: int
    space_prob: float
    symbol_probs: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not isinstance(self.alphabet_size, int) or self.alphabet_size < 2:
            raise ParameterError(
                f"alphabet_size must be an integer >= 2, got {self.alphabet_size!r}"
            )
        if not (0.0 < self.space_prob < 1.0):
            raise ParameterError(
                f"space_prob must lie strictly inside (0, 1), got {self.space_prob!r}"
            )
        if self.symbol_probs is not None:
            probs = tuple(float(p) for p in self.symbol_probs)
            object.__setattr__(self, "symbol_probs", probs)
            if len(probs) != self.alphabet_size:
                raise ParameterError(
                    f"symbol_probs has {len(probs)} entries for alphabet_size "
                    f"{self.alphabet_size}"
                )
            if any(p <= 0.0 for p in probs):
                raise ParameterError("all symbol probabilities must be positive")
            total = math.fsum(probs) + self.space_prob
            if abs(total - 1.0) > 1e-12:
                raise ParameterError(
                    f"space_prob + sum(symbol_probs) = {total!r}, must equal 1 "
                    "within 1e-12"
                )

    @property
    def uniform_symbol_prob(self) -> float:
        return (1.0 - self.space_prob) / self.alphabet_size

    def effective_symbol_probs(self) -> tuple[float, ...]:
        if self.symbol_probs is not None:
            return self.symbol_probs
        return (self.uniform_symbol_prob,) * self.alphabet_size


# ---------------------------------------------------------------------------
# Survival profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Unfiltered:
    """No filtering: every length-k string survives, T_k = m**k."""


@dataclass(frozen=True)
class GammaGrowth:
    """Throttled geometric lexicon growth, T_k = floor(coeff * m**(gamma*k)).

    gamma in (0, 1] controls the growth rate relative to the full
    combinatorial space; gamma = 1 with coeff = 1 reproduces Unfiltered.
    """

    coeff: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.coeff > 0.0):
            raise ParameterError(f"coeff must be positive, got {self.coeff!r}")
        if not (0.0 < self.gamma <= 1.0):
            raise ParameterError(f"gamma must lie in (0, 1], got {self.gamma!r}")


@dataclass(frozen=True)
class PolynomialGrowth:
    """Near-polynomial lexicon growth, T_k = floor(c0 + c1 * k**beta)."""

    c0: float
    c1: float
    beta: float

    def __post_init__(self) -> None:
        if self.c0 < 0.0:
            raise ParameterError(f"c0 must be nonnegative, got {self.c0!r}")
        if not (self.c1 > 0.0):
            raise ParameterError(f"c1 must be positive, got {self.c1!r}")
        if not (1.0 <= self.beta <= 3.0):
            raise ParameterError(f"beta must lie in [1, 3], got {self.beta!r}")


@dataclass(frozen=True)
class SurvivorTable:
    """Explicit per-length survivor counts or survival probabilities.

    counts: length -> exact surviving-type count T_k.
    probs: length -> survival probability; yields T_k = floor(m**k * p).
    default: rule for lengths listed in neither mapping (None means zero
        survivors). counts take precedence over probs.
    """

    counts: Mapping[int, int] = field(default_factory=dict)
    probs: Mapping[int, float] = field(default_factory=dict)
    default: Optional["ProfileVariant"] = None

    def __post_init__(self) -> None:
        for k, t in self.counts.items():
            if not isinstance(k, int) or k < 0:
                raise ParameterError(f"table length keys must be integers >= 0, got {k!r}")
            if not isinstance(t, int) or t < 0:
                raise ParameterError(f"survivor count for k={k} must be an integer >= 0")
        for k, p in self.probs.items():
            if not isinstance(k, int) or k < 0:
                raise ParameterError(f"table length keys must be integers >= 0, got {k!r}")
            if not (0.0 <= p <= 1.0):
                raise ParameterError(f"survival probability for k={k} must lie in [0, 1]")


ProfileVariant = Union[Unfiltered, GammaGrowth, PolynomialGrowth, SurvivorTable]


@dataclass(frozen=True)
class SurvivalProfile:
    """A profile variant plus the lexical length range it acts on.

    k_min: smallest admissible word length (0 is allowed but only the
        unnormalized mode gives length-0 words a type).
    k_max: truncation length for analytic enumeration and generation; the
        geometric mass beyond it is reported, never silently dropped.
    """

    variant: ProfileVariant = field(default_factory=Unfiltered)
    k_min: int = 1
    k_max: int = 40

    def __post_init__(self) -> None:
        if not isinstance(self.k_min, int) or self.k_min < 0:
            raise ParameterError(f"k_min must be an integer >= 0, got {self.k_min!r}")
        if not isinstance(self.k_max, int) or self.k_max < self.k_min:
            raise ParameterError(
                f"k_max must be an integer >= k_min={self.k_min}, got {self.k_max!r}"
            )


def _floor_snap_fraction(fr: Fraction) -> int:
    q, r = divmod(fr.numerator, fr.denominator)
    # snap up when within FLOOR_SLACK of the next integer
    if r and (fr.denominator - r) < FLOOR_SLACK * fr.denominator:
        q += 1
    return q


def _floor_snap_mpf(x: mpmath.mpf) -> int:
    fl = int(mpmath.floor(x))
    if x - fl > 1 - FLOOR_SLACK:
        fl += 1
    return fl


def _scaled_power_floor(coeff: float, base: int, rate: float, k: int) -> int:
    """floor(coeff * base**(rate*k)) with exact arithmetic where possible.

    The exponent product rate*k is formed in extended precision, so the
    value is the floor of the true real number defined by the binary
    representations of coeff and rate.
    """
    exponent = rate * k
    nearest = round(exponent)
    if abs(exponent - nearest) <= 1e-9 and nearest >= 0:
        return _floor_snap_fraction(Fraction(coeff) * Fraction(base) ** nearest)
    return _floor_snap_mpf(_mp_power(coeff, base, rate, k))


def _mp_power(coeff: float, base: int, rate: float, k: int) -> mpmath.mpf:
    bits = max(64, int(abs(rate * k) * math.log2(base)) + 80)
    with mpmath.workprec(bits):
        return mpmath.mpf(coeff) * mpmath.power(base, mpmath.mpf(rate) * k)


def _variant_count(variant: ProfileVariant, m: int, k: int) -> int:
    if isinstance(variant, Unfiltered):
        return m**k
    if isinstance(variant, GammaGrowth):
        return _scaled_power_floor(variant.coeff, m, variant.gamma, k)
    if isinstance(variant, PolynomialGrowth):
        nearest = round(variant.beta)
        if abs(variant.beta - nearest) <= 1e-9:
            val = Fraction(variant.c0) + Fraction(variant.c1) * k**nearest
            return _floor_snap_fraction(val)
        x = variant.c0 + variant.c1 * float(k) ** variant.beta
        fl = math.floor(x)
        if x - fl > 1 - FLOOR_SLACK:
            fl += 1
        return fl
    if isinstance(variant, SurvivorTable):
        if k in variant.counts:
            return variant.counts[k]
        if k in variant.probs:
            return _floor_snap_fraction(Fraction(m) ** k * Fraction(variant.probs[k]))
        if variant.default is not None:
            return _variant_count(variant.default, m, k)
        return 0
    raise ParameterError(f"unknown profile variant {variant!r}")


def _variant_count_real(variant: ProfileVariant, m: int, k: int) -> float:
    if isinstance(variant, Unfiltered):
        return float(m**k)
    if isinstance(variant, GammaGrowth):
        return float(_mp_power(variant.coeff, m, variant.gamma, k))
    if isinstance(variant, PolynomialGrowth):
        return variant.c0 + variant.c1 * float(k) ** variant.beta
    if isinstance(variant, SurvivorTable):
        if k in variant.counts:
            return float(variant.counts[k])
        if k in variant.probs:
            return float(Fraction(m) ** k * Fraction(variant.probs[k]))
        if variant.default is not None:
            return _variant_count_real(variant.default, m, k)
        return 0.0
    raise ParameterError(f"unknown profile variant {variant!r}")


def survival_count(profile: SurvivalProfile, params: ModelParams, k: int) -> int:
    """Number of surviving types of length k (exact, arbitrary precision).

    Real-valued growth laws are floored; floors snap up when the real value
    sits within 1e-9 of the next integer (see FLOOR_SLACK).
    """
    if not isinstance(k, int) or k < 0:
        raise ParameterError(f"length k must be an integer >= 0, got {k!r}")
    return _variant_count(profile.variant, params.alphabet_size, k)


def survival_count_real(profile: SurvivalProfile, params: ModelParams, k: int) -> float:
    """Unfloored survivor count for growth-law profiles."""
    if not isinstance(k, int) or k < 0:
        raise ParameterError(f"length k must be an integer >= 0, got {k!r}")
    return _variant_count_real(profile.variant, params.alphabet_size, k)


def survival_probability(profile: SurvivalProfile, params: ModelParams, k: int) -> float:
    """Per-type survival probability at length k: T_k / m**k."""
    t = survival_count(profile, params, k)
    if t == 0:
        return 0.0
    return float(Fraction(t, params.alphabet_size**k))


def cumulative_types(profile: SurvivalProfile, params: ModelParams, k: int) -> int:
    """Total surviving types of lengths k_min..k (0 when k < k_min)."""
    if not isinstance(k, int):
        raise ParameterError(f"length k must be an integer, got {k!r}")
    if k > profile.k_max:
        raise ParameterError(f"k={k} exceeds the profile truncation k_max={profile.k_max}")
    return sum(
        survival_count(profile, params, j) for j in range(profile.k_min, k + 1)
    )


def validate_profile(profile: SurvivalProfile, params: ModelParams) -> None:
    """Check T_k <= m**k across the profile's length range."""
    m = params.alphabet_size
    cap = m**profile.k_min
    for k in range(profile.k_min, profile.k_max + 1):
        t = _variant_count(profile.variant, m, k)
        if t > cap:
            raise ParameterError(
                f"profile yields T_{k} = {t} > m**{k} = {cap}; survival "
                "probabilities must not exceed 1"
            )
        cap *= m


# ---------------------------------------------------------------------------
# Length law
# ---------------------------------------------------------------------------


def word_length_pmf(params: ModelParams, length: int) -> float:
    """Probability that a word has exactly `length` non-space symbols.

    The source ends a word on each space draw, so lengths are geometric:
    (1 - q)**length * q, supported on length = 0, 1, 2, ...
    """
    if not isinstance(length, int) or length < 0:
        raise ParameterError(f"length must be an integer >= 0, got {length!r}")
    q = params.space_prob
    return (1.0 - q) ** length * q


def expected_word_count(n_symbols: int, params: ModelParams) -> float:
    """Expected number of space-terminated words in a stream of n_symbols.

    Every emitted space ends one word (possibly empty), so the count is
    binomial with mean n_symbols * space_prob.
    """
    if not isinstance(n_symbols, int) or n_symbols < 1:
        raise ParameterError(f"n_symbols must be an integer >= 1, got {n_symbols!r}")
    return n_symbols * params.space_prob


# ---------------------------------------------------------------------------
# Block curve
# ---------------------------------------------------------------------------


def _effective_lengths(
    profile: SurvivalProfile, mode: NormalizationMode
) -> tuple[int, int]:
    if mode == "unnormalized":
        return 0, profile.k_max
    return profile.k_min, profile.k_max


def _class_count(
    profile: SurvivalProfile, params: ModelParams, k: int, mode: NormalizationMode
) -> int:
    # the unnormalized mode defines a single empty type at length 0
    if mode == "unnormalized" and k == 0:
        return 1
    return survival_count(profile, params, k)


def length_support(
    profile: SurvivalProfile,
    params: ModelParams,
    mode: NormalizationMode = "renormalized",
) -> list[int]:
    """Lengths in range with at least one surviving type."""
    lo, hi = _effective_lengths(profile, mode)
    return [k for k in range(lo, hi + 1) if _class_count(profile, params, k, mode) >= 1]


def _normalization(
    profile: SurvivalProfile,
    params: ModelParams,
    mode: NormalizationMode,
    support: Sequence[int],
) -> float:
    if mode == "unnormalized":
        return 1.0
    q = params.space_prob
    return math.fsum((1.0 - q) ** k * q for k in support)


def post_filter_frequency(
    params: ModelParams,
    profile: SurvivalProfile,
    k: int,
    mode: NormalizationMode = "renormalized",
) -> float:
    """Usage probability of one surviving type of length k.

    The geometric length mass (1-q)**k * q is split uniformly over the T_k
    survivors; in renormalized mode it is divided by the total mass of the
    surviving length classes so the whole table sums to 1.
    """
    t = _class_count(profile, params, k, mode)
    if t < 1:
        raise EmptyLengthClass(f"no surviving types at length k={k}")
    support = length_support(profile, params, mode)
    if k not in support:
        raise EmptyLengthClass(f"length k={k} lies outside [{support[0]}, {support[-1]}]")
    z = _normalization(profile, params, mode, support)
    q = params.space_prob
    mass = (1.0 - q) ** k * q / z
    return _divide_by_big(mass, t)


def _divide_by_big(mass: float, t: int) -> float:
    ft = float(t) if t < 2**53 else math.inf
    if math.isfinite(ft) and ft:
        return mass / ft
    if mass <= 0.0:
        return 0.0
    log_f = math.log(mass) - _log_big(t)
    try:
        return math.exp(log_f)
    except OverflowError:  # pragma: no cover - mass <= 1 makes this unreachable
        return math.inf


def _log_big(n: int) -> float:
    return math.log(n)


@dataclass(frozen=True)
class Block:
    """One length class: `width` consecutive ranks at equal frequency."""

    length: int
    width: int
    width_real: float
    frequency: float
    start_rank: int

    @property
    def end_rank(self) -> int:
        return self.start_rank + self.width - 1

    @property
    def mass(self) -> float:
        return _block_mass(self.width, self.frequency)

    @property
    def midrank(self) -> float:
        """Geometric midpoint of the block's rank range."""
        return math.exp(0.5 * (math.log(self.start_rank) + math.log(self.end_rank)))


def _block_mass(width: int, frequency: float) -> float:
    fw = float(width) if width < 2**53 else math.inf
    if math.isfinite(fw):
        return fw * frequency
    if frequency <= 0.0:
        return 0.0
    return math.exp(math.log(frequency) + _log_big(width))


@dataclass(frozen=True)
class RankFrequencyTable:
    """Expanded rank-frequency table; ranks are implicitly 1..n.

    frequencies: non-increasing float array.
    counts: occurrence counts for simulated/empirical tables, else None.
    labels: optional per-rank identities (spellings or (length, index)).
    """

    frequencies: np.ndarray
    total_mass: float
    provenance: Literal["analytic", "simulated", "empirical"]
    counts: Optional[np.ndarray] = None
    labels: Optional[tuple] = None

    def __post_init__(self) -> None:
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        freqs.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        if self.counts is not None:
            counts = np.asarray(self.counts, dtype=np.int64)
            counts.setflags(write=False)
            object.__setattr__(self, "counts", counts)
            if counts.shape != freqs.shape:
                raise ParameterError("counts and frequencies must have equal length")
        if self.labels is not None and len(self.labels) != len(freqs):
            raise ParameterError("labels and frequencies must have equal length")

    def __len__(self) -> int:
        return int(self.frequencies.shape[0])

    @property
    def ranks(self) -> np.ndarray:
        return np.arange(1, len(self) + 1, dtype=np.int64)

    def entries(self) -> Iterator[tuple[int, float]]:
        for i, f in enumerate(self.frequencies, start=1):
            yield i, float(f)

    def frequency_at(self, rank: int) -> float:
        if not 1 <= rank <= len(self):
            raise ParameterError(f"rank {rank} outside 1..{len(self)}")
        return float(self.frequencies[rank - 1])

    def validate(self) -> None:
        """Raise if the structural invariants are violated."""
        f = self.frequencies
        if len(f) == 0:
            raise ParameterError("table has no entries")
        if np.any(np.diff(f) > 0):
            raise InternalInvariant("frequencies increase with rank")
        if self.provenance == "analytic":
            if abs(float(np.sum(f)) - 1.0) > 1e-9:
                raise InternalInvariant("analytic table mass differs from 1")


class InternalInvariant(AssertionError):
    """Structural invariant violation inside a table."""


@dataclass(frozen=True)
class BlockCurve:
    """Block-compressed analytic rank-frequency curve.

    Blocks are ordered by decreasing frequency (ties: shorter length
    first), with exact arbitrary-precision rank boundaries.
    """

    params: ModelParams
    profile: SurvivalProfile
    mode: NormalizationMode
    blocks: tuple[Block, ...]
    normalization: float
    tail_mass: float
    excluded_mass: float

    @property
    def total_types(self) -> int:
        return sum(b.width for b in self.blocks)

    @property
    def total_mass(self) -> float:
        return math.fsum(b.mass for b in self.blocks)

    def midpoints(self) -> list[tuple[float, float]]:
        """(geometric midrank, frequency) per block, for log-log fitting."""
        return [(b.midrank, b.frequency) for b in self.blocks]

    def frequency_at(self, rank: int) -> float:
        if rank < 1 or rank > self.total_types:
            raise ParameterError(f"rank {rank} outside 1..{self.total_types}")
        starts = [b.start_rank for b in self.blocks]
        return self.blocks[bisect_right(starts, rank) - 1].frequency

    def head_mass(self, top_n: int) -> float:
        if top_n < 1:
            raise ParameterError("top_n must be >= 1")
        remaining = top_n
        total = 0.0
        for b in self.blocks:
            take = min(remaining, b.width)
            total += _block_mass(take, b.frequency)
            remaining -= take
            if remaining == 0:
                break
        return total

    def expand(self, cap: int = 10_000_000) -> RankFrequencyTable:
        """Materialize per-rank entries; raises CapExceeded above `cap`."""
        n = self.total_types
        if n > cap:
            raise CapExceeded(
                f"expanding would create {n} entries (cap {cap}); use the "
                "block-compressed form (blocks/midpoints) instead"
            )
        widths = np.array([b.width for b in self.blocks], dtype=np.int64)
        freqs = np.array([b.frequency for b in self.blocks], dtype=np.float64)
        return RankFrequencyTable(
            frequencies=np.repeat(freqs, widths),
            total_mass=self.total_mass,
            provenance="analytic",
        )

    def binned(self, bins_per_decade: int = 5) -> list[tuple[float, float]]:
        """Log-binned (geometric midrank, mean frequency) points.

        Matches the binning rule of estimate.log_binned_curve but works on
        the block representation, so it never expands the table.
        """
        if bins_per_decade < 1:
            raise ParameterError("bins_per_decade must be >= 1")
        b = bins_per_decade
        out: list[tuple[float, float]] = []
        n = self.total_types
        i = 0
        lo = 1
        while lo <= n:
            hi = _bin_upper(lo, b)
            hi_here = min(hi, n)
            mass = 0.0
            width = 0
            for blk in self.blocks:
                s = max(blk.start_rank, lo)
                e = min(blk.end_rank, hi_here)
                if s > e:
                    continue
                w = e - s + 1
                mass += _block_mass(w, blk.frequency)
                width += w
            if width:
                mid = math.exp(0.5 * (math.log(lo) + math.log(hi_here)))
                fw = float(width) if width < 2**53 else math.exp(_log_big(width))
                out.append((mid, mass / fw))
            lo = hi + 1
            i += 1
        return out


def _bin_index(rank: int, bins_per_decade: int) -> int:
    return math.floor(bins_per_decade * math.log10(rank))

def _bin_upper(lo: int, bins_per_decade: int) -> int:
    """Largest rank in the same log bin as `lo`."""
    i = _bin_index(lo, bins_per_decade)
    hi = max(lo, math.floor(10 ** ((i + 1) / bins_per_decade)))
    while _bin_index(hi, bins_per_decade) > i:
        hi -= 1
    while _bin_index(hi + 1, bins_per_decade) == i:
        hi += 1
    return hi


def analytic_blocks(
    params: ModelParams,
    profile: SurvivalProfile,
    mode: NormalizationMode = "renormalized",
) -> BlockCurve:
    """Exact block-compressed rank-frequency curve of the filtered model."""
    if mode not in ("renormalized", "unnormalized"):
        raise ParameterError(f"unknown normalization mode {mode!r}")
    validate_profile(profile, params)
    q = params.space_prob
    lo, hi = _effective_lengths(profile, mode)
    support = length_support(profile, params, mode)
    if not support:
        raise NoSurvivors(
            f"every length class in [{lo}, {hi}] has zero surviving types"
        )
    z = _normalization(profile, params, mode, support)
    entries = []
    for k in support:
        t = _class_count(profile, params, k, mode)
        t_real = (
            1.0
            if (mode == "unnormalized" and k == 0)
            else survival_count_real(profile, params, k)
        )
        mass = (1.0 - q) ** k * q / z
        entries.append((k, t, t_real, _divide_by_big(mass, t)))
    # decreasing frequency; ties resolved in favor of the shorter length
    entries.sort(key=lambda e: (-e[3], e[0]))
    blocks = []
    start = 1
    for k, t, t_real, f in entries:
        blocks.append(
            Block(length=k, width=t, width_real=t_real, frequency=f, start_rank=start)
        )
        start += t
    tail_mass = (1.0 - q) ** (profile.k_max + 1)
    excluded = math.fsum(
        (1.0 - q) ** k * q
        for k in range(lo, hi + 1)
        if _class_count(profile, params, k, mode) < 1
    )
    return BlockCurve(
        params=params,
        profile=profile,
        mode=mode,
        blocks=tuple(blocks),
        normalization=z,
        tail_mass=tail_mass,
        excluded_mass=excluded,
    )


def analytic_rank_frequency(
    params: ModelParams,
    profile: SurvivalProfile,
    mode: NormalizationMode = "renormalized",
    cap: int = 10_000_000,
) -> RankFrequencyTable:
    """Expanded analytic table (one entry per rank), capped at `cap` entries."""
    return analytic_blocks(params, profile, mode).expand(cap)


# ---------------------------------------------------------------------------
# Exponents
# ---------------------------------------------------------------------------


def theoretical_exponent(params: ModelParams, gamma: float) -> float:
    """Claimed closed-form exponent (1/gamma) * (1 - ln(1-q)/ln m).

    For gamma < 1 this closed form disagrees with the slope the block
    geometry actually produces; see tail_slope for the asymptote that
    log-log fits converge to. The two coincide at gamma = 1.
    """
    if not (0.0 < gamma <= 1.0):
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma!r}")
    q = params.space_prob
    m = params.alphabet_size
    return (1.0 / gamma) * (1.0 - math.log(1.0 - q) / math.log(m))


def tail_slope(params: ModelParams, gamma: float) -> float:
    """Asymptotic log-log slope magnitude of the filtered curve's tail.

    With T_k growing like m**(gamma*k), per-type frequencies scale as
    ((1-q)/m**gamma)**k while ranks scale as m**(gamma*k), so
    ln f / ln r tends to (ln(1-q) - gamma ln m) / (gamma ln m), giving
    slope magnitude 1 - ln(1-q)/(gamma * ln m).
    """
    if not (0.0 < gamma <= 1.0):
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma!r}")
    q = params.space_prob
    m = params.alphabet_size
    return 1.0 - math.log(1.0 - q) / (gamma * math.log(m))


def unfiltered_exponent(params: ModelParams) -> float:
    """Exponent of the raw (unfiltered) model: 1 - ln(1-q)/ln m."""
    return theoretical_exponent(params, 1.0)


def profile_gamma(profile: SurvivalProfile) -> Optional[float]:
    """Asymptotic growth rate of a profile, when one exists."""
    v = profile.variant
    if isinstance(v, Unfiltered):
        return 1.0
    if isinstance(v, GammaGrowth):
        return v.gamma
    if isinstance(v, SurvivorTable) and v.default is not None:
        inner = SurvivalProfile(v.default, profile.k_min, profile.k_max)
        return profile_gamma(inner)
    return None


def invert_rank(profile: SurvivalProfile, params: ModelParams, rank: int) -> float:
    """Asymptotic word length occupying a given rank: ln R / (gamma ln m).

    Only meaningful for geometric-growth profiles; the estimate ignores
    the leading constant and is documented as asymptotic, not exact.
    """
    if isinstance(profile.variant, GammaGrowth):
        gamma = profile.variant.gamma
    elif isinstance(profile.variant, Unfiltered):
        gamma = 1.0
    else:
        raise ProfileNotAsymptotic(
            "rank inversion requires geometric growth; table and polynomial "
            "profiles have no single growth rate"
        )
    if not isinstance(rank, int) or rank < 1:
        raise ParameterError(f"rank must be an integer >= 1, got {rank!r}")
    return math.log(rank) / (gamma * math.log(params.alphabet_size))


# ---------------------------------------------------------------------------
# Profile mini-language
# ---------------------------------------------------------------------------


def parse_profile(text: str) -> ProfileVariant:
    """Parse a profile spec string.

    Grammar:
      unfiltered
      gamma:C=<float>,g=<float>
      poly:c0=<float>,c1=<float>,b=<float>
      table:k<K>=<int>,...[,pk<K>=<float>,...][,default=<spec>]

    In table specs, k<K>= entries give exact survivor counts, pk<K>=
    entries give survival probabilities, and default= (which must come
    last, since its value may itself contain commas) gives the rule for
    unlisted lengths.
    """
    s = text.strip()
    if s == "unfiltered":
        return Unfiltered()
    head, sep, rest = s.partition(":")
    if not sep:
        raise ParameterError(f"malformed profile spec {text!r}")
    if head == "gamma":
        kv = _parse_kv(rest, "gamma profile")
        _require_keys(kv, {"C", "g"}, "gamma profile")
        return GammaGrowth(coeff=_as_float(kv, "C"), gamma=_as_float(kv, "g"))
    if head == "poly":
        kv = _parse_kv(rest, "poly profile")
        _require_keys(kv, {"c0", "c1", "b"}, "poly profile")
        return PolynomialGrowth(
            c0=_as_float(kv, "c0"), c1=_as_float(kv, "c1"), beta=_as_float(kv, "b")
        )
    if head == "table":
        default: Optional[ProfileVariant] = None
        marker = "default="
        pos = rest.find(marker)
        if pos >= 0:
            default = parse_profile(rest[pos + len(marker):])
            rest = rest[:pos].rstrip(",")
        counts: dict[int, int] = {}
        probs: dict[int, float] = {}
        if rest:
            for key, val in _parse_kv(rest, "table profile").items():
                if key.startswith("pk"):
                    probs[_as_length(key[2:], text)] = float(val)
                elif key.startswith("k"):
                    counts[_as_length(key[1:], text)] = int(val)
                else:
                    raise ParameterError(
                        f"unknown table entry {key!r} in profile spec {text!r}"
                    )
        if not counts and not probs and default is None:
            raise ParameterError(f"empty table profile spec {text!r}")
        return SurvivorTable(counts=counts, probs=probs, default=default)
    raise ParameterError(f"unknown profile family {head!r} in spec {text!r}")


def _parse_kv(text: str, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, sep, val = part.partition("=")
        if not sep:
            raise ParameterError(f"expected key=value in {what}, got {part!r}")
        out[key.strip()] = val.strip()
    return out


def _require_keys(kv: Mapping[str, str], keys: set, what: str) -> None:
    if set(kv) != keys:
        raise ParameterError(f"{what} needs exactly keys {sorted(keys)}, got {sorted(kv)}")


def _as_float(kv: Mapping[str, str], key: str) -> float:
    try:
        return float(kv[key])
    except ValueError as exc:
        raise ParameterError(f"bad numeric value for {key!r}: {kv[key]!r}") from exc


def _as_length(text: str, spec: str) -> int:
    try:
        k = int(text)
    except ValueError as exc:
        raise ParameterError(f"bad length key in profile spec {spec!r}") from exc
    if k < 0:
        raise ParameterError(f"negative length key in profile spec {spec!r}")
    return k


def format_profile(variant: ProfileVariant) -> str:
    """Canonical spec string; round-trips through parse_profile."""
    if isinstance(variant, Unfiltered):
        return "unfiltered"
    if isinstance(variant, GammaGrowth):
        return f"gamma:C={variant.coeff!r},g={variant.gamma!r}"
    if isinstance(variant, PolynomialGrowth):
        return f"poly:c0={variant.c0!r},c1={variant.c1!r},b={variant.beta!r}"
    if isinstance(variant, SurvivorTable):
        parts = [f"k{k}={variant.counts[k]}" for k in sorted(variant.counts)]
        parts += [f"pk{k}={variant.probs[k]!r}" for k in sorted(variant.probs)]
        if variant.default is not None:
            parts.append(f"default={format_profile(variant.default)}")
        return "table:" + ",".join(parts)
    raise ParameterError(f"unknown profile variant {variant!r}")
