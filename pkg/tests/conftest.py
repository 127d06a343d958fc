"""Shared oracles and the acceptance-report collector.

Oracles here are deliberately independent of the library code paths they
check: string probabilities come from per-symbol products over an explicit
enumeration, expected values from high-precision arithmetic.
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest


def enumerate_string_probs(m: int, q, k_min: int, k_max: int, renormalize=True):
    """Exact per-string probabilities by brute-force enumeration.

    Walks every string over an m-letter alphabet for lengths k_min..k_max
    and multiplies per-symbol probabilities (uniform (1-q)/m each) times
    the terminating space probability q. Exact rational arithmetic.
    """
    q = Fraction(q)
    per_symbol = (1 - q) / m
    probs = []
    alphabet = range(m)
    for k in range(k_min, k_max + 1):
        for string in itertools.product(alphabet, repeat=k):
            p = q
            for _ in string:
                p *= per_symbol
            probs.append(p)
    if renormalize:
        z = sum(probs)
        probs = [p / z for p in probs]
    return sorted(probs, reverse=True)


def power_law_sample_counts(alpha, r_max, n, seed):
    """Independent discrete power-law sampler: inverse CDF over 1..r_max."""
    ranks = np.arange(1, r_max + 1, dtype=np.float64)
    w = ranks**-alpha
    cdf = np.cumsum(w / w.sum())
    cdf[-1] = 1.0
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = np.searchsorted(cdf, rng.random(n), side="right") + 1
    return np.bincount(draws, minlength=r_max + 1)[1:]


def chi_square_pvalue(observed, expected):
    """Plain chi-square goodness-of-fit p-value (no fitted parameters)."""
    from scipy.stats import chi2

    observed = np.asarray(observed, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    stat = float(np.sum((observed - expected) ** 2 / expected))
    return float(chi2.sf(stat, df=len(observed) - 1))


def lump_tail(observed, expected, min_expected=5.0):
    """Merge trailing bins until every expected count is >= min_expected."""
    obs = list(observed)
    exp = list(expected)
    while len(exp) > 2 and exp[-1] < min_expected:
        exp[-2] += exp[-1]
        obs[-2] += obs[-1]
        exp.pop()
        obs.pop()
    return np.array(obs), np.array(exp)


# ---------------------------------------------------------------------------
# acceptance reporting
# ---------------------------------------------------------------------------

_ACCEPTANCE_LINES: list = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE_LINES.append(f"[{status}] {name}" + (f" -- {detail}" if detail else ""))


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
