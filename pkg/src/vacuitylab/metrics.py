"""From-scratch detection and calibration metrics.

AUROC is the probability-of-correct-ranking form (ties get half credit),
computed via rank sums with midranks in O(n log n). AUPR is step-wise
average precision with tie groups collapsed to a single threshold; no
trapezoidal interpolation, which can be optimistic.

``auroc_bruteforce`` and ``aupr_reference`` are deliberately naive
(O(n^2) pairwise / full recount per threshold) and exist as oracles for
the fast paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ScoredSample:
    """One scored instance; label 1 marks the positive class."""

    score: float
    label: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"score must be finite, got {self.score}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class DetectionResult:
    """AUROC/AUPR of one detection run plus the context needed to read them."""

    auroc: float
    aupr: float
    aupr_baseline: float
    n_positive: int
    n_negative: int
    metric_name: str
    k_id: int
    k_ood: int


def _scores_labels(samples: Sequence[ScoredSample]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.array([s.score for s in samples], dtype=float)
    labels = np.array([s.label for s in samples], dtype=int)
    return scores, labels


def _midranks(sorted_scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    n = len(sorted_scores)
    ranks = np.empty(n, dtype=float)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[i : j + 1] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(samples: Sequence[ScoredSample]) -> float:
    """Probability a random positive outranks a random negative (ties half)."""
    scores, labels = _scores_labels(samples)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auroc needs at least one positive and one negative sample")
    order = np.argsort(scores, kind="mergesort")
    ranks = _midranks(scores[order])
    rank_sum = float(ranks[labels[order] == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def aupr(samples: Sequence[ScoredSample]) -> float:
    """Step-wise average precision over descending-score thresholds."""
    scores, labels = _scores_labels(samples)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("aupr needs at least one positive sample")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    l = labels[order]
    n = len(s)
    ap = 0.0
    tp = 0
    seen = 0
    prev_recall = 0.0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        tp += int(l[i : j + 1].sum())
        seen += j - i + 1
        recall = tp / n_pos
        precision = tp / seen
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return ap


def aupr_baseline(n_positive: int, n_negative: int) -> float:
    """Random-ranking AUPR baseline: the positive-class prevalence."""
    if n_positive <= 0 or n_negative <= 0:
        raise ValueError("both counts must be positive")
    return n_positive / (n_positive + n_negative)


def evaluate_detection(
    samples: Sequence[ScoredSample],
    metric_name: str,
    k_id: int,
    k_ood: int,
) -> DetectionResult:
    """Compute AUROC, AUPR and the prevalence baseline for one sample set."""
    _, labels = _scores_labels(samples)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    return DetectionResult(
        auroc=auroc(samples),
        aupr=aupr(samples),
        aupr_baseline=aupr_baseline(n_pos, n_neg),
        n_positive=n_pos,
        n_negative=n_neg,
        metric_name=metric_name,
        k_id=k_id,
        k_ood=k_ood,
    )


def ece(confidences, correctness, bins: int = 15) -> float:
    """Expected calibration error over equal-width bins on (0, 1].

    Bin b covers (b/B, (b+1)/B]; a confidence of exactly 0 lands in the
    first bin; empty bins contribute nothing.
    """
    conf = np.asarray(confidences, dtype=float)
    corr = np.asarray(correctness, dtype=float)
    if conf.shape != corr.shape or conf.ndim != 1:
        raise ValueError("confidences and correctness must be equal-length vectors")
    if len(conf) == 0:
        raise ValueError("ece needs at least one sample")
    if (conf < 0).any() or (conf > 1).any() or np.isnan(conf).any():
        raise ValueError("confidences must lie in [0, 1]")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    idx = np.clip(np.ceil(conf * bins).astype(int) - 1, 0, bins - 1)
    total = 0.0
    n = len(conf)
    for b in range(bins):
        mask = idx == b
        n_b = int(mask.sum())
        if n_b == 0:
            continue
        total += (n_b / n) * abs(float(corr[mask].mean()) - float(conf[mask].mean()))
    return total


_NLL_FLOOR = 1e-12


def nll(probabilities, gold_labels) -> float:
    """Mean negative log-likelihood of the gold class, floored at 1e-12."""
    labels = list(gold_labels)
    rows = [np.asarray(p, dtype=float) for p in probabilities]
    if len(rows) != len(labels) or not rows:
        raise ValueError("probabilities and gold_labels must be equal-length and non-empty")
    total = 0.0
    for row, g in zip(rows, labels):
        if not 0 <= g < len(row):
            raise ValueError(f"gold label {g} out of range for {len(row)} classes")
        total += -math.log(max(float(row[g]), _NLL_FLOOR))
    return total / len(rows)


def accuracy(predictions, gold_labels) -> float:
    """Fraction of samples whose argmax probability matches the gold label."""
    labels = list(gold_labels)
    rows = [np.asarray(p, dtype=float) for p in predictions]
    if len(rows) != len(labels) or not rows:
        raise ValueError("predictions and gold_labels must be equal-length and non-empty")
    hits = 0
    for row, g in zip(rows, labels):
        if not 0 <= g < len(row):
            raise ValueError(f"gold label {g} out of range for {len(row)} classes")
        hits += int(int(np.argmax(row)) == g)
    return hits / len(rows)


def auroc_bruteforce(samples: Sequence[ScoredSample]) -> float:
    """O(n^2) pairwise AUROC with half credit for ties (oracle)."""
    scores, labels = _scores_labels(samples)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("auroc needs at least one positive and one negative sample")
    credit = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                credit += 1.0
            elif p == q:
                credit += 0.5
    return credit / (len(pos) * len(neg))


def aupr_reference(samples: Sequence[ScoredSample]) -> float:
    """AUPR by explicit threshold sweep with full recounting (oracle)."""
    scores, labels = _scores_labels(samples)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("aupr needs at least one positive sample")
    thresholds = sorted(set(scores.tolist()), reverse=True)
    ap = 0.0
    prev_recall = 0.0
    for t in thresholds:
        tp = int(((scores >= t) & (labels == 1)).sum())
        fp = int(((scores >= t) & (labels == 0)).sum())
        recall = tp / n_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap
