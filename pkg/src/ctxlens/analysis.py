"""Headline measurements over paired (K, 2K) comparisons and sweep records.

Everything here is a pure fold over immutable inputs: direction-of-change
ratios, word-class means of the token-perplexity drop, the first-vs-latter
subword gap, Spearman rank correlations (with p-values), the correlation of
N-gram recurrence with the drop, frequency-prior correlations stratified by
recurrence group, and confidence statistics (entropy / max probability) for
correctly vs incorrectly predicted tokens.
"""

import itertools
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

from .corpus import PosClass
from .errors import ConstantInputError, EmptyInputError, UsageError
from .sweep import PairedComparison, SweepResult

SIGNIFICANCE_LEVEL = 0.005
EXACT_PERMUTATION_MAX_N = 10


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE_LEVEL


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=np.float64)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(np.dot(xc, xc)) * float(np.dot(yc, yc)))
    return float(np.dot(xc, yc)) / denom


def spearman(xs: Sequence[float], ys: Sequence[float],
             method: str = "auto") -> CorrelationResult:
    """Spearman rank correlation with a two-sided p-value.

    rho is the Pearson correlation of the average-rank vectors. The p-value
    comes from the t statistic rho*sqrt((n-2)/(1-rho^2)) against Student-t
    with n-2 degrees of freedom; with ``method="exact"`` (the default for
    n <= 10) it is instead the exact permutation tail probability
    P(|rho_perm| >= |rho|). Constant inputs have no defined rank
    correlation and raise ``ConstantInputError``.
    """
    if len(xs) != len(ys):
        raise UsageError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 3:
        raise UsageError(f"need at least 3 observations, got {n}")
    if method not in ("auto", "t", "exact"):
        raise UsageError(f"unknown method {method!r}")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ConstantInputError("rank correlation undefined for a constant input")
    rx = average_ranks(x)
    ry = average_ranks(y)
    rho = _pearson(rx, ry)
    rho = max(-1.0, min(1.0, rho))
    if method == "exact" or (method == "auto" and n <= EXACT_PERMUTATION_MAX_N):
        if n > EXACT_PERMUTATION_MAX_N:
            raise UsageError(f"exact permutation test limited to n <= {EXACT_PERMUTATION_MAX_N}")
        p = _exact_permutation_p(rx, ry, rho)
    else:
        if abs(rho) >= 1.0:
            p = 0.0
        else:
            t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
            p = 2.0 * float(_scipy_stats.t.sf(abs(t), n - 2))
    return CorrelationResult(rho=rho, p_value=min(p, 1.0), n=n)


def _exact_permutation_p(rx: np.ndarray, ry: np.ndarray, rho_obs: float) -> float:
    """Tail probability of |rho| under all permutations of one rank vector.

    With both rank vectors' marginals fixed, rho is an affine function of
    sum(rx * ry_perm), so the permutation distribution of that inner product
    gives the exact null distribution of rho.
    """
    n = len(rx)
    xc = rx - rx.mean()
    yc = ry - ry.mean()
    scale = math.sqrt(float(np.dot(xc, xc)) * float(np.dot(yc, yc)))
    # Map the observed rho onto the inner-product scale.
    threshold = abs(rho_obs) * scale - 1e-9
    offset = n * rx.mean() * ry.mean()
    hits = 0
    total = 0
    it = itertools.permutations(range(n))
    while True:
        batch = list(itertools.islice(it, 100_000))
        if not batch:
            break
        idx = np.asarray(batch, dtype=np.int8)
        dots = ry[idx] @ rx
        hits += int(np.count_nonzero(np.abs(dots - offset) >= threshold))
        total += len(batch)
    return hits / total


@dataclass(frozen=True)
class ChangeRatios:
    decrease: float
    increase: float
    unchanged: float
    n: int


def decrease_increase_ratios(pairs: Sequence[PairedComparison],
                             epsilon: float = 0.0) -> ChangeRatios:
    """Fraction of tokens whose token-perplexity dropped / rose / stayed put.

    A drop beyond ``epsilon`` counts as a decrease, a rise beyond it as an
    increase, anything within it as unchanged; the three fractions sum to 1.
    """
    if not pairs:
        raise EmptyInputError("no comparison pairs")
    n = len(pairs)
    dec = sum(1 for p in pairs if p.delta_nll > epsilon)
    inc = sum(1 for p in pairs if p.delta_nll < -epsilon)
    return ChangeRatios(dec / n, inc / n, (n - dec - inc) / n, n)


def pos_class_decrements(pairs: Sequence[PairedComparison]) -> dict[PosClass, float]:
    """Mean token-perplexity drop per word class; empty classes are absent."""
    sums: dict[PosClass, list[float]] = {}
    for p in pairs:
        sums.setdefault(p.pos_class, []).append(p.delta_nll)
    return {cls: math.fsum(v) / len(v) for cls, v in sums.items()}


def delta_d(pairs: Sequence[PairedComparison], *, by_class: bool = False,
            warn: Callable[[str], None] | None = None):
    """Gap between word-initial and continuation subwords' mean drop.

    Returns mean(drop over first subwords) - mean(drop over latter
    subwords), either overall (float) or per word class (dict). The
    ``other`` class is never reported per-class: its words are single
    tokens, so it has no continuation stratum. Strata missing one side are
    omitted with a warning.
    """
    def gap(subset: list[PairedComparison]) -> float | None:
        fir = [p.delta_nll for p in subset if p.is_first_subword]
        lat = [p.delta_nll for p in subset if not p.is_first_subword]
        if not fir or not lat:
            return None
        return math.fsum(fir) / len(fir) - math.fsum(lat) / len(lat)

    if not by_class:
        g = gap(list(pairs))
        if g is None:
            raise EmptyInputError("need both first-subword and latter-subword tokens")
        return g
    out: dict[PosClass, float] = {}
    for cls in PosClass:
        if cls is PosClass.OTHER:
            continue
        subset = [p for p in pairs if p.pos_class is cls]
        g = gap(subset)
        if g is None:
            if warn is not None:
                warn(f"class {cls.value}: missing a subword stratum; omitted")
            continue
        out[cls] = g
    return out


def ngram_correlation(pairs: Sequence[PairedComparison], n: int,
                      method: str = "auto") -> CorrelationResult:
    """Spearman correlation of N-gram recurrence ratio with the drop."""
    xs, ys = [], []
    for p in pairs:
        if p.delta_n is None or p.ngram_n != n:
            raise UsageError(
                f"pair at index {p.token_index} lacks recurrence annotation at N={n}"
            )
        xs.append(p.delta_n)
        ys.append(p.delta_nll)
    try:
        return spearman(xs, ys, method=method)
    except ConstantInputError:
        raise ConstantInputError(
            f"no recurrence-ratio variation at N={n}: correlation undefined"
        ) from None


# Recurrence-ratio groups: below 1 the N-gram got rarer in the new context,
# exactly 1 (equal integer counts) it stayed put, above 1 it got commoner.
def _group_label(p: PairedComparison, extra_breakpoint: float | None) -> str:
    if p.ngram_count_new < p.ngram_count_original:
        return "A(<1)"
    if p.ngram_count_new == p.ngram_count_original:
        return "B(=1)"
    if extra_breakpoint is not None and extra_breakpoint > 1.0:
        if p.delta_n <= extra_breakpoint:
            return f"C(1,{extra_breakpoint:g}]"
        return f"D(>{extra_breakpoint:g})"
    return "C(>1)"


def grouped_frequency_correlation(
    pairs: Sequence[PairedComparison], *,
    extra_breakpoint: float | None = None,
    method: str = "auto",
    warn: Callable[[str], None] | None = None,
) -> dict[str, CorrelationResult]:
    """Per recurrence group, Spearman correlation of token frequency with
    the magnitude of the token-perplexity change.

    Group membership uses exact integer count comparison, so "ratio = 1" is
    never a float judgement. Groups with fewer than 3 pairs or with no
    variation are omitted (with a warning); if nothing is reportable the
    whole call raises.
    """
    groups: dict[str, list[PairedComparison]] = {}
    for p in pairs:
        if p.ngram_count_new is None or p.freq is None:
            raise UsageError("pairs must carry recurrence counts and frequency")
        groups.setdefault(_group_label(p, extra_breakpoint), []).append(p)
    out: dict[str, CorrelationResult] = {}
    for label in sorted(groups):
        members = groups[label]
        if len(members) < 3:
            if warn is not None:
                warn(f"group {label}: only {len(members)} pair(s); omitted")
            continue
        try:
            out[label] = spearman([p.freq for p in members],
                                  [p.abs_delta_nll for p in members], method=method)
        except ConstantInputError:
            if warn is not None:
                warn(f"group {label}: constant input; correlation undefined")
    if not out:
        raise ConstantInputError("no recurrence group has a defined correlation")
    return out


@dataclass(frozen=True)
class GroupConfidence:
    entropy_mean: float
    max_prob_mean: float
    n: int


def confidence_stats(sweeps: Iterable[SweepResult]) -> dict[int, dict[str, GroupConfidence]]:
    """Mean entropy and max probability per tier, split by prediction outcome.

    Group "T" holds tokens whose argmax matched the truth, "F" the rest;
    documents at the same tier are pooled. Empty groups are absent.
    """
    acc: dict[int, dict[str, list]] = {}
    for res in sweeps:
        tiers = acc.setdefault(res.k, {"T": [], "F": []})
        for rec in res.records:
            tiers["T" if rec.correct else "F"].append(rec)
    out: dict[int, dict[str, GroupConfidence]] = {}
    for k in sorted(acc):
        groups = {}
        for label, recs in acc[k].items():
            if not recs:
                continue
            groups[label] = GroupConfidence(
                entropy_mean=math.fsum(r.entropy for r in recs) / len(recs),
                max_prob_mean=math.fsum(r.max_prob for r in recs) / len(recs),
                n=len(recs),
            )
        out[k] = groups
    return out
