"""Stochastic simulation of the symbol stream and the filtered token process.

The type space of length k is never materialized: a surviving type is just
the pair (length, index) with index in 1..T_k, and drawing index uniformly
is distributionally identical to picking one of the T_k survivors, since
usage is uniform within a length class. Spellings are realized on demand
through a deterministic injection into the set of length-k strings.

Reproducibility contract: output is a pure function of the configuration
(seed included) on a fixed build. Work proceeds in chunks of
``chunk_size`` tokens/symbols; chunk c draws from generators seeded by
``SeedSequence(entropy=seed, spawn_key=(c, purpose))`` with one purpose
stream each for symbols, lengths, indices, and acceptance coins. The chunk
plan is part of the configuration, so any chunking (including the default)
is bit-reproducible, and chunks could be produced in parallel without
changing the emitted multiset.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from string import ascii_lowercase, ascii_uppercase, digits
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .analytic import (
    ModelParams,
    SurvivalProfile,
    length_support,
    survival_count,
    survival_probability,
    word_length_pmf,
)
from .errors import DataError, NonTermination, NoSurvivors, ParameterError

_SPELL_ALPHABET = ascii_lowercase + ascii_uppercase + digits

# purpose tags for per-chunk RNG sub-streams
_P_SYMBOLS = 0
_P_LENGTH = 1
_P_INDEX = 2
_P_ACCEPT = 3

HISTOGRAM_CAP = 200


class TypeId(NamedTuple):
    """A surviving word type: its length and its 1-based index in 1..T_k."""

    length: int
    index: int


@dataclass(frozen=True)
class GenerationConfig:
    """One simulation run.

    Exactly one of n_tokens (filtered token mode) and n_symbols (raw
    stream mode) must be set. mode selects the token-sampling semantics:

    * "renormalized" (default): lengths are drawn from the geometric law
      restricted to classes with survivors; every draw emits a token.
    * "rejection": lengths are drawn from the full geometric law and the
      token survives with probability T_k / m**k, else it is rejected and
      redrawn; the realized length law is proportional to
      (1-q)**k * q * pi_k.
    """

    params: ModelParams
    profile: SurvivalProfile = field(default_factory=SurvivalProfile)
    n_tokens: Optional[int] = None
    n_symbols: Optional[int] = None
    seed: int = 0
    mode: str = "renormalized"
    chunk_size: int = 1 << 20
    min_acceptance: float = 1e-9

    def __post_init__(self) -> None:
        if (self.n_tokens is None) == (self.n_symbols is None):
            raise ParameterError("set exactly one of n_tokens and n_symbols")
        target = self.n_tokens if self.n_tokens is not None else self.n_symbols
        if not isinstance(target, int) or target < 1:
            raise ParameterError(f"target size must be an integer >= 1, got {target!r}")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            raise ParameterError("seed must be an integer in [0, 2**64)")
        if self.mode not in ("renormalized", "rejection"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.chunk_size < 1:
            raise ParameterError("chunk_size must be >= 1")


@dataclass
class GenerationReport:
    """Outcome of a filtered-token run."""

    mode: str
    seed: int
    tokens_emitted: int
    rejected_tokens: Optional[int]
    length_histogram: dict[int, int]
    histogram_overflow: int
    distinct_types: int

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "tokens_emitted": self.tokens_emitted,
            "rejected_tokens": self.rejected_tokens,
            "length_histogram": {str(k): v for k, v in sorted(self.length_histogram.items())},
            "histogram_overflow": self.histogram_overflow,
            "distinct_types": self.distinct_types,
        }


@dataclass
class RawStreamReport:
    """Outcome of a raw symbol-stream run."""

    seed: int
    symbols_emitted: int
    space_count: int
    word_count: int
    length_histogram: dict[int, int]
    histogram_overflow: int
    distinct_words: int

    def to_json_dict(self) -> dict:
        return {
            "mode": "symbols",
            "seed": self.seed,
            "symbols_emitted": self.symbols_emitted,
            "space_count": self.space_count,
            "word_count": self.word_count,
            "length_histogram": {str(k): v for k, v in sorted(self.length_histogram.items())},
            "histogram_overflow": self.histogram_overflow,
            "distinct_words": self.distinct_words,
        }


def _rng(seed: int, chunk: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chunk, purpose))
    return np.random.Generator(np.random.PCG64(ss))


def _chunk_sizes(total: int, chunk_size: int) -> Iterator[int]:
    remaining = total
    while remaining > 0:
        yield min(chunk_size, remaining)
        remaining -= chunk_size


# ---------------------------------------------------------------------------
# Raw symbol stream
# ---------------------------------------------------------------------------


def alphabet_chars(alphabet_size: int) -> str:
    """Concrete characters for symbol codes 0..m-1 (text rendering only)."""
    if alphabet_size > len(_SPELL_ALPHABET):
        raise DataError(
            f"text rendering supports alphabets up to {len(_SPELL_ALPHABET)} "
            f"symbols, got {alphabet_size}; use the compact token format"
        )
    return _SPELL_ALPHABET[:alphabet_size]


def generate_symbol_stream(config: GenerationConfig) -> Iterator[np.ndarray]:
    """Yield chunks of symbol codes; code m is the space, 0..m-1 letters.

    Streaming: memory is bounded by chunk_size regardless of n_symbols.
    """
    if config.n_symbols is None:
        raise ParameterError("generate_symbol_stream requires n_symbols mode")
    m = config.params.alphabet_size
    probs = list(config.params.effective_symbol_probs()) + [config.params.space_prob]
    cum = np.cumsum(np.array(probs, dtype=np.float64))
    cum[-1] = 1.0
    for chunk_index, size in enumerate(_chunk_sizes(config.n_symbols, config.chunk_size)):
        rng = _rng(config.seed, chunk_index, _P_SYMBOLS)
        u = rng.random(size)
        yield np.searchsorted(cum, u, side="right").astype(np.int32)


def render_symbols(codes: np.ndarray, alphabet_size: int) -> str:
    """Map symbol codes to text; the space symbol renders as ' '."""
    table = np.frombuffer(
        (alphabet_chars(alphabet_size) + " ").encode("ascii"), dtype=np.uint8
    )
    return table[codes].tobytes().decode("ascii")


def segment_words(text: str, space: str = " ") -> list[str]:
    """Maximal non-space blocks, in order; adjacent spaces yield no word."""
    return [w for w in text.split(space) if w]


def run_symbol_stream(
    config: GenerationConfig,
    text_sink=None,
    count_words: bool = True,
) -> tuple[RawStreamReport, Optional[Counter]]:
    """Drive a raw-stream run; optionally write text and count words.

    Word segmentation is stitched across chunk seams, so results equal a
    single-pass segmentation of the whole stream.
    """
    if config.n_symbols is None:
        raise ParameterError("run_symbol_stream requires n_symbols mode")
    m = config.params.alphabet_size
    space_count = 0
    word_count = 0
    histogram: Counter = Counter()
    overflow = 0
    words: Optional[Counter] = Counter() if count_words else None
    carry = ""
    for codes in generate_symbol_stream(config):
        space_count += int(np.count_nonzero(codes == m))
        text = render_symbols(codes, m)
        if text_sink is not None:
            text_sink.write(text)
        buf = carry + text
        cut = buf.rfind(" ")
        if cut < 0:
            carry = buf
            continue
        piece, carry = buf[: cut + 1], buf[cut + 1 :]
        for w in segment_words(piece):
            word_count += 1
            ln = len(w)
            if ln <= HISTOGRAM_CAP:
                histogram[ln] += 1
            else:
                overflow += 1
            if words is not None:
                words[w] += 1
    for w in segment_words(carry):
        word_count += 1
        ln = len(w)
        if ln <= HISTOGRAM_CAP:
            histogram[ln] += 1
        else:
            overflow += 1
        if words is not None:
            words[w] += 1
    report = RawStreamReport(
        seed=config.seed,
        symbols_emitted=config.n_symbols,
        space_count=space_count,
        word_count=word_count,
        length_histogram=dict(histogram),
        histogram_overflow=overflow,
        distinct_words=len(words) if words is not None else word_count,
    )
    return report, words


# ---------------------------------------------------------------------------
# Filtered token process
# ---------------------------------------------------------------------------


@dataclass
class TokenChunk:
    """Tokens of one chunk, grouped by length.

    groups maps length -> (positions, indices): positions are the token
    slots within the chunk (0-based), indices are the 1-based type indices,
    as a uint64 array when T_k fits, else a list of Python ints.
    """

    size: int
    groups: dict[int, tuple[np.ndarray, object]]

    def iter_tokens(self) -> Iterator[TypeId]:
        out: list[Optional[TypeId]] = [None] * self.size
        for k, (pos, idx) in self.groups.items():
            for p, i in zip(pos.tolist(), _as_int_list(idx)):
                out[p] = TypeId(k, i)
        return iter(out)  # type: ignore[arg-type]


def _as_int_list(idx) -> list[int]:
    if isinstance(idx, np.ndarray):
        return [int(v) for v in idx]
    return idx


class _FilterSampler:
    """Shared machinery for both token-sampling modes."""

    def __init__(self, config: GenerationConfig):
        self.config = config
        params, profile = config.params, config.profile
        self.support = length_support(profile, params, "renormalized")
        if not self.support:
            raise NoSurvivors(
                "no length class in range has surviving types; nothing to emit"
            )
        self.counts = {k: survival_count(profile, params, k) for k in self.support}
        q = params.space_prob
        if config.mode == "renormalized":
            weights = np.array(
                [word_length_pmf(params, k) for k in self.support], dtype=np.float64
            )
            self.cum = np.cumsum(weights / weights.sum())
            self.cum[-1] = 1.0
            self.support_arr = np.array(self.support, dtype=np.int64)
        else:
            # per-draw acceptance probability; lengths outside the range
            # (including those below k_min and beyond k_max) auto-reject
            self.pi = np.zeros(profile.k_max + 1, dtype=np.float64)
            for k in self.support:
                self.pi[k] = survival_probability(profile, params, k)
            accept = math.fsum(
                word_length_pmf(params, k) * self.pi[k] for k in self.support
            )
            if accept < config.min_acceptance:
                raise NonTermination(
                    f"overall acceptance probability {accept:.3e} is below the "
                    f"{config.min_acceptance:.0e} guard; rejection sampling "
                    "would effectively never terminate"
                )

    def lengths_renormalized(self, chunk_index: int, size: int) -> np.ndarray:
        rng = _rng(self.config.seed, chunk_index, _P_LENGTH)
        u = rng.random(size)
        return self.support_arr[np.searchsorted(self.cum, u, side="right")]

    def lengths_rejection(
        self, chunk_index: int, need: int
    ) -> tuple[np.ndarray, int]:
        """Draw geometric lengths until `need` acceptances; count rejections."""
        cfg = self.config
        q = cfg.params.space_prob
        len_rng = _rng(cfg.seed, chunk_index, _P_LENGTH)
        acc_rng = _rng(cfg.seed, chunk_index, _P_ACCEPT)
        kept: list[np.ndarray] = []
        rejected = 0
        got = 0
        while got < need:
            batch = cfg.chunk_size
            # numpy geometric counts trials to first success (support >= 1);
            # the word-length law wants failures before success, hence -1
            ks = len_rng.geometric(q, size=batch).astype(np.int64) - 1
            coins = acc_rng.random(batch)
            pk = np.where(ks <= cfg.profile.k_max, self.pi[np.minimum(ks, cfg.profile.k_max)], 0.0)
            mask = coins < pk
            hits = np.cumsum(mask)
            if hits[-1] >= need - got:
                stop = int(np.searchsorted(hits, need - got))
                mask = mask[: stop + 1]
                ks = ks[: stop + 1]
                rejected += int(mask.size - np.count_nonzero(mask))
                kept.append(ks[mask])
                got = need
            else:
                rejected += int(batch - hits[-1])
                kept.append(ks[mask])
                got += int(hits[-1])
        return np.concatenate(kept), rejected

    def draw_indices(self, chunk_index: int, ks: np.ndarray) -> TokenChunk:
        rng = _rng(self.config.seed, chunk_index, _P_INDEX)
        groups: dict[int, tuple[np.ndarray, object]] = {}
        for k in sorted(np.unique(ks).tolist()):
            pos = np.nonzero(ks == k)[0]
            t = self.counts[int(k)]
            if t <= np.iinfo(np.uint64).max:
                idx = rng.integers(1, t, size=pos.size, dtype=np.uint64, endpoint=True)
            else:
                # arbitrary-precision uniform draw; 8 extra bytes make the
                # modulo bias below 2**-64
                nbytes = (t.bit_length() + 7) // 8 + 8
                raw = rng.bytes(int(pos.size) * nbytes)
                idx = [
                    int.from_bytes(raw[i * nbytes : (i + 1) * nbytes], "little") % t + 1
                    for i in range(pos.size)
                ]
            groups[int(k)] = (pos, idx)
        return TokenChunk(size=int(ks.size), groups=groups)


def filtered_token_chunks(config: GenerationConfig) -> Iterator[TokenChunk]:
    """Yield chunks of filtered tokens per the configured sampling mode.

    In rejection mode each chunk also carries its rejection count via the
    `rejections` attribute patched onto the TokenChunk.
    """
    if config.n_tokens is None:
        raise ParameterError("filtered token generation requires n_tokens mode")
    sampler = _FilterSampler(config)
    for chunk_index, size in enumerate(_chunk_sizes(config.n_tokens, config.chunk_size)):
        if config.mode == "renormalized":
            ks = sampler.lengths_renormalized(chunk_index, size)
            rejections = 0
        else:
            ks, rejections = sampler.lengths_rejection(chunk_index, size)
        chunk = sampler.draw_indices(chunk_index, ks)
        chunk.rejections = rejections  # type: ignore[attr-defined]
        yield chunk


def _token_key(k: int, index: int) -> int:
    # single-integer encoding: cheap dict keys for counting
    return index * 65536 + k


def token_key_to_id(key: int) -> TypeId:
    return TypeId(key % 65536, key // 65536)


def count_filtered_tokens(config: GenerationConfig) -> tuple[Counter, GenerationReport]:
    """Run a filtered-token simulation and count type occurrences.

    Returns (counter keyed by TypeId, report). Memory scales with the
    number of distinct types, not with n_tokens.
    """
    counts: Counter = Counter()
    histogram: Counter = Counter()
    overflow = 0
    rejected = 0
    emitted = 0
    for chunk in filtered_token_chunks(config):
        rejected += chunk.rejections  # type: ignore[attr-defined]
        emitted += chunk.size
        for k, (pos, idx) in chunk.groups.items():
            n = len(pos)
            if k <= HISTOGRAM_CAP:
                histogram[k] += n
            else:
                overflow += n
            if isinstance(idx, np.ndarray):
                uniq, c = np.unique(idx, return_counts=True)
                for i, n_i in zip(uniq.tolist(), c.tolist()):
                    counts[_token_key(k, int(i))] += n_i
            else:
                for i in idx:
                    counts[_token_key(k, i)] += 1
    typed = Counter({token_key_to_id(key): n for key, n in counts.items()})
    report = GenerationReport(
        mode=config.mode,
        seed=config.seed,
        tokens_emitted=emitted,
        rejected_tokens=rejected if config.mode == "rejection" else None,
        length_histogram=dict(histogram),
        histogram_overflow=overflow,
        distinct_types=len(typed),
    )
    return typed, report


def sample_filtered_tokens(config: GenerationConfig) -> tuple[list[TypeId], GenerationReport]:
    """Materialize the full token sequence (order preserved).

    Convenience for moderate n_tokens; memory grows linearly with the run.
    """
    tokens: list[TypeId] = []
    histogram: Counter = Counter()
    overflow = 0
    rejected = 0
    distinct = set()
    for chunk in filtered_token_chunks(config):
        rejected += chunk.rejections  # type: ignore[attr-defined]
        for tid in chunk.iter_tokens():
            tokens.append(tid)
            if tid.length <= HISTOGRAM_CAP:
                histogram[tid.length] += 1
            else:
                overflow += 1
            distinct.add(tid)
    report = GenerationReport(
        mode=config.mode,
        seed=config.seed,
        tokens_emitted=len(tokens),
        rejected_tokens=rejected if config.mode == "rejection" else None,
        length_histogram=dict(histogram),
        histogram_overflow=overflow,
        distinct_types=len(distinct),
    )
    return tokens, report


# ---------------------------------------------------------------------------
# Spelling realization
# ---------------------------------------------------------------------------


class Speller:
    """Deterministic injection from (length, index) to concrete strings.

    index-1 is written in base m over the alphabet, most significant digit
    first, zero-padded to the length. Distinct indices give distinct
    strings, and an unfiltered class enumerates all m**k strings exactly
    once. The map never consumes randomness, so it is trivially stable
    across runs.
    """

    def __init__(self, params: ModelParams, profile: SurvivalProfile):
        self.params = params
        self.profile = profile
        self.chars = alphabet_chars(params.alphabet_size)
        self._codes = np.frombuffer(self.chars.encode("ascii"), dtype=np.uint8)
        self._count_cache: dict[int, int] = {}

    def _t(self, k: int) -> int:
        if k not in self._count_cache:
            self._count_cache[k] = survival_count(self.profile, self.params, k)
        return self._count_cache[k]

    def spell(self, type_id: TypeId) -> str:
        k, index = type_id
        if k < 1:
            raise ParameterError(f"spellings need length >= 1, got {k}")
        t = self._t(k)
        if not 1 <= index <= t:
            raise ParameterError(f"index {index} outside 1..T_{k}={t}")
        m = self.params.alphabet_size
        value = index - 1
        out = []
        for _ in range(k):
            value, digit = divmod(value, m)
            out.append(self.chars[digit])
        return "".join(reversed(out))

    def spell_group(self, k: int, indices) -> list[str]:
        """Spell many indices of one length; vectorized when they fit int64."""
        m = self.params.alphabet_size
        if isinstance(indices, np.ndarray) and m**k <= 2**62:
            vals = indices.astype(np.int64) - 1
            digit_cols = np.empty((k, vals.size), dtype=np.uint8)
            for j in range(k - 1, -1, -1):
                vals, dig = np.divmod(vals, m)
                digit_cols[j] = dig.astype(np.uint8)
            blob = self._codes[digit_cols.T].tobytes().decode("ascii")
            return [blob[i * k : (i + 1) * k] for i in range(len(indices))]
        return [self.spell(TypeId(k, int(i))) for i in _as_int_list(indices)]


def realize_spelling(
    type_id: TypeId, params: ModelParams, profile: SurvivalProfile
) -> str:
    """Spell one surviving type; see Speller for the mapping."""
    return Speller(params, profile).spell(type_id)
