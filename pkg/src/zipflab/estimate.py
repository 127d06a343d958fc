"""Rank-frequency construction and Zipf-exponent estimation.

Fitting comes in three flavors, all recorded in the FitResult so numbers
stay reproducible:

* OLS on per-rank log-log points over a rank window. On piecewise-constant
  curves this is biased toward block plateaus, hence the alternatives.
* OLS on block midpoints (one point per length class), for tables whose
  block structure is known: analytic curves, or simulations where each
  token carries its length.
* Discrete power-law maximum likelihood on the tail, p(r) proportional to
  r**-alpha for r >= r_min, normalized by the Hurwitz zeta function (or a
  finite zeta sum when an upper support bound is given).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import mpmath
import numpy as np
from scipy.optimize import brentq
from scipy.special import zeta as _hurwitz_zeta

from .analytic import BlockCurve, ModelParams, RankFrequencyTable, SurvivalProfile
from .errors import (
    DataError,
    EmptyInput,
    NoConvergence,
    ParameterError,
    TailTooThin,
    WindowTooSmall,
)


@dataclass(frozen=True)
class FitResult:
    """A fitted exponent plus everything needed to reproduce it.

    gof is R-squared for OLS fits and the Kolmogorov-Smirnov distance
    between fitted and empirical tail for MLE. points records which
    representation was fitted: per-rank entries, block midpoints, or
    log-binned means. degenerate flags an all-equal window (slope 0).
    """

    alpha_hat: float
    method: str
    r_min: int
    r_max: Optional[int]
    stderr: float
    gof: float
    points: str = "ranks"
    n_points: int = 0
    degenerate: bool = False

    def to_json_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "method": self.method,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "stderr": self.stderr,
            "gof": self.gof,
            "points": self.points,
            "n_points": self.n_points,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class HeadReport:
    """Token-frequency share of the top_n ranked types."""

    top_n: int
    mass: float

    def to_json_dict(self) -> dict:
        return {"top_n": self.top_n, "mass": self.mass}


# ---------------------------------------------------------------------------
# Counting and ranking
# ---------------------------------------------------------------------------


def count_tokens(tokens: Iterable) -> Counter:
    """Exact occurrence counts; memory scales with distinct tokens only."""
    return Counter(tokens)


def rank_frequency(
    counts: Mapping,
    total: Optional[int] = None,
    provenance: str = "empirical",
) -> RankFrequencyTable:
    """Sort a frequency map into a rank-frequency table.

    Ordering is by count descending with ties broken by the natural sort
    order of the keys (lexicographic for spellings, (length, index) for
    TypeIds), so permuting the input leaves the output unchanged.
    """
    if not counts:
        raise EmptyInput("empty frequency map")
    actual = sum(counts.values())
    if total is None:
        total = actual
    elif total != actual:
        raise ParameterError(f"total={total} but counts sum to {actual}")
    items = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    arr = np.array([c for _, c in items], dtype=np.int64)
    freqs = arr / float(total)
    return RankFrequencyTable(
        frequencies=freqs,
        total_mass=float(arr.sum() / total),
        provenance=provenance,  # type: ignore[arg-type]
        counts=arr,
        labels=tuple(k for k, _ in items),
    )


def default_fit_window(table: RankFrequencyTable, r_min: int = 50, min_count: int = 5) -> tuple[int, int]:
    """Default tail window: skip the flattened head, stop where counts
    drop below min_count (rarest-rank noise)."""
    n = len(table)
    if table.counts is None:
        return min(r_min, n), n
    ge = np.nonzero(table.counts >= min_count)[0]
    r_max = int(ge[-1]) + 1 if ge.size else n
    return min(r_min, n), r_max


# ---------------------------------------------------------------------------
# OLS fits
# ---------------------------------------------------------------------------


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Least squares y = a + b x; returns (b, a, stderr_b, r_squared)."""
    n = x.size
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    sxx = float(dx @ dx)
    sxy = float(dx @ dy)
    b = sxy / sxx
    a = my - b * mx
    resid = y - (a + b * x)
    ssr = float(resid @ resid)
    syy = float(dy @ dy)
    r2 = 1.0 if syy == 0.0 else 1.0 - ssr / syy
    stderr = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else 0.0
    return b, a, stderr, r2


def fit_exponent_ols(
    table: RankFrequencyTable,
    r_min: int,
    r_max: Optional[int] = None,
    min_entries: int = 10,
) -> FitResult:
    """OLS of ln p(r) on ln r over ranks [r_min, r_max]; alpha = -slope.

    An all-equal window (a single block plateau) yields a degenerate
    result with alpha_hat = 0 and the degenerate flag set, not an error.
    """
    n = len(table)
    if r_max is None:
        r_max = n
    if not (1 <= r_min < r_max <= n):
        raise ParameterError(f"window [{r_min}, {r_max}] invalid for table of {n} ranks")
    window = table.frequencies[r_min - 1 : r_max]
    if window.size < min_entries:
        raise WindowTooSmall(
            f"window [{r_min}, {r_max}] has {window.size} entries; need >= {min_entries}"
        )
    if np.any(window <= 0.0):
        raise DataError("window contains zero frequencies; shrink r_max")
    ranks = np.arange(r_min, r_max + 1, dtype=np.float64)
    if float(window.max()) == float(window.min()):
        return FitResult(
            alpha_hat=0.0, method="ols", r_min=r_min, r_max=r_max,
            stderr=0.0, gof=1.0, points="ranks", n_points=int(window.size),
            degenerate=True,
        )
    slope, _, stderr, r2 = _ols(np.log(ranks), np.log(window))
    return FitResult(
        alpha_hat=-slope, method="ols", r_min=r_min, r_max=r_max,
        stderr=stderr, gof=r2, points="ranks", n_points=int(window.size),
    )


def fit_exponent_points(
    points: Sequence[tuple[float, float]],
    r_min: Optional[int] = None,
    r_max: Optional[int] = None,
    points_kind: str = "block_midpoints",
    min_points: int = 3,
) -> FitResult:
    """OLS over explicit (rank, frequency) points (block midpoints or
    log-binned means), optionally restricted to a rank window."""
    sel = [
        (r, f)
        for r, f in points
        if (r_min is None or r >= r_min) and (r_max is None or r <= r_max) and f > 0.0
    ]
    if len(sel) < min_points:
        raise WindowTooSmall(
            f"{len(sel)} points in window; need >= {min_points}"
        )
    x = np.log([r for r, _ in sel])
    y = np.log([f for _, f in sel])
    lo = int(math.floor(min(r for r, _ in sel)))
    hi = int(math.ceil(max(r for r, _ in sel)))
    if float(y.max()) == float(y.min()):
        return FitResult(
            alpha_hat=0.0, method="ols", r_min=max(lo, 1), r_max=hi,
            stderr=0.0, gof=1.0, points=points_kind, n_points=len(sel),
            degenerate=True,
        )
    slope, _, stderr, r2 = _ols(x, y)
    return FitResult(
        alpha_hat=-slope, method="ols", r_min=max(lo, 1), r_max=hi,
        stderr=stderr, gof=r2, points=points_kind, n_points=len(sel),
    )


def fit_exponent_blocks(
    curve: BlockCurve,
    r_min: Optional[int] = None,
    r_max: Optional[int] = None,
    skip_blocks: int = 0,
) -> FitResult:
    """Block-midpoint OLS on an analytic curve (one point per length)."""
    pts = curve.midpoints()[skip_blocks:]
    return fit_exponent_points(pts, r_min=r_min, r_max=r_max)


def empirical_block_points(
    length_counts: Mapping[int, int],
    total_tokens: int,
    curve: BlockCurve,
) -> list[tuple[float, float]]:
    """Per-length (theoretical midrank, empirical mean frequency) points.

    For simulated runs where each token carries its length: the mean
    per-type frequency in class k is (tokens of length k) / (N * T_k),
    an unbiased estimate of the block height even when most types of the
    class were never observed.
    """
    if total_tokens < 1:
        raise ParameterError("total_tokens must be >= 1")
    pts = []
    for block in curve.blocks:
        n_k = length_counts.get(block.length, 0)
        if n_k > 0:
            width = float(block.width) if block.width < 2**53 else math.inf
            if math.isfinite(width):
                f = n_k / (total_tokens * width)
            else:
                f = math.exp(
                    math.log(n_k) - math.log(total_tokens) - math.log(block.width)
                )
            pts.append((block.midrank, f))
    return pts


# ---------------------------------------------------------------------------
# Discrete power-law MLE
# ---------------------------------------------------------------------------


def _zeta_stats_unbounded(alpha: float, r_min: int) -> tuple[float, float]:
    """(mean, variance) of ln r under p(r) ~ r**-alpha, r >= r_min."""
    with mpmath.workdps(30):
        z = mpmath.zeta(alpha, r_min)
        dz = mpmath.zeta(alpha, r_min, 1)
        ddz = mpmath.zeta(alpha, r_min, 2)
        mean = -dz / z
        var = ddz / z - (dz / z) ** 2
    return float(mean), float(var)


class _BoundedModel:
    def __init__(self, r_min: int, r_max: int):
        self.r = np.arange(r_min, r_max + 1, dtype=np.float64)
        self.log_r = np.log(self.r)

    def stats(self, alpha: float) -> tuple[float, float]:
        w = self.r ** (-alpha)
        w /= w.sum()
        mean = float(w @ self.log_r)
        var = float(w @ (self.log_r - mean) ** 2)
        return mean, var


def fit_exponent_mle(
    table: RankFrequencyTable,
    r_min: int = 1,
    r_max: Optional[int] = None,
    tol: float = 1e-8,
    min_tail_tokens: int = 100,
) -> FitResult:
    """Maximum-likelihood alpha for p(r) ~ r**-alpha on ranks >= r_min.

    Requires occurrence counts. With r_max = None the model support is
    unbounded and normalized by the Hurwitz zeta function (alpha > 1);
    with a finite r_max the normalizer is a finite sum and alpha may take
    any real value. The likelihood equation (model mean of ln r equals
    the empirical mean) is solved by bracketed root finding to `tol`;
    stderr comes from observed Fisher information, gof is the KS distance
    between fitted and empirical tail CDFs.
    """
    if table.counts is None:
        raise DataError("MLE requires a table with occurrence counts")
    n = len(table)
    if not 1 <= r_min <= n:
        raise ParameterError(f"r_min={r_min} outside 1..{n}")
    if r_max is not None and r_max < r_min:
        raise ParameterError("r_max must be >= r_min")
    hi = n if r_max is None else min(r_max, n)
    counts = np.asarray(table.counts[r_min - 1 : hi], dtype=np.float64)
    ranks = np.arange(r_min, hi + 1, dtype=np.float64)
    n_tail = float(counts.sum())
    if n_tail < min_tail_tokens:
        raise TailTooThin(
            f"tail holds {int(n_tail)} tokens; need >= {min_tail_tokens}"
        )
    if np.count_nonzero(counts) < 2:
        raise TailTooThin("tail is concentrated on a single rank")
    emp_mean = float((counts @ np.log(ranks)) / n_tail)

    if r_max is None:
        lo_a, hi_a = 1.0 + 1e-9, 60.0
        def f(alpha: float) -> float:
            return _zeta_stats_unbounded(alpha, r_min)[0] - emp_mean
        stats = lambda a: _zeta_stats_unbounded(a, r_min)
    else:
        model = _BoundedModel(r_min, r_max)
        lo_a, hi_a = -60.0, 60.0
        def f(alpha: float) -> float:
            return model.stats(alpha)[0] - emp_mean
        stats = model.stats

    try:
        alpha_hat = float(brentq(f, lo_a, hi_a, xtol=tol, maxiter=200))
    except ValueError as exc:
        raise NoConvergence(
            f"likelihood equation has no root in [{lo_a}, {hi_a}]: {exc}"
        ) from exc

    _, var = stats(alpha_hat)
    stderr = 1.0 / math.sqrt(n_tail * var) if var > 0 else math.inf

    # KS distance between fitted and empirical tail CDFs
    if r_max is None:
        z0 = float(_hurwitz_zeta(alpha_hat, r_min))
        model_cdf = 1.0 - np.array(
            [float(_hurwitz_zeta(alpha_hat, r + 1)) for r in ranks]
        ) / z0
    else:
        w = ranks ** (-alpha_hat)
        model_cdf = np.cumsum(w) / w.sum()
    emp_cdf = np.cumsum(counts) / n_tail
    ks = float(np.max(np.abs(emp_cdf - model_cdf)))

    return FitResult(
        alpha_hat=alpha_hat, method="mle", r_min=r_min, r_max=r_max,
        stderr=stderr, gof=ks, points="ranks", n_points=int(np.count_nonzero(counts)),
    )


# ---------------------------------------------------------------------------
# Head mass and binned curves
# ---------------------------------------------------------------------------


def head_mass(table: RankFrequencyTable, top_n: int) -> HeadReport:
    """Total frequency share of the top_n ranks."""
    if not 1 <= top_n <= len(table):
        raise ParameterError(f"top_n={top_n} outside 1..{len(table)}")
    mass = math.fsum(table.frequencies[:top_n].tolist())
    return HeadReport(top_n=top_n, mass=mass)


def log_binned_curve(
    table: RankFrequencyTable, bins_per_decade: int = 5
) -> list[tuple[float, float]]:
    """Geometric rank binning: per-bin mean frequency at the geometric
    midpoint of the ranks present; empty bins are omitted."""
    if bins_per_decade < 1:
        raise ParameterError("bins_per_decade must be >= 1")
    n = len(table)
    ranks = np.arange(1, n + 1, dtype=np.float64)
    bins = np.floor(bins_per_decade * np.log10(ranks)).astype(np.int64)
    out = []
    for b in np.unique(bins):
        sel = bins == b
        r = ranks[sel]
        f = table.frequencies[sel]
        mid = math.sqrt(float(r[0]) * float(r[-1]))
        out.append((mid, float(f.mean())))
    return out
