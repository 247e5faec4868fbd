"""Accuracy, macro-F1, one-vs-rest macro AUC-ROC and feature-correlation diagnostics."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DomainError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_f1: float
    auc_roc: float
    per_class_f1: tuple
    n_eval: int


def accuracy(pred, truth):
    pred, truth = np.asarray(pred), np.asarray(truth)
    if len(truth) == 0:
        raise DomainError("accuracy of an empty set")
    if pred.shape != truth.shape:
        raise DomainError("pred and truth differ in length")
    return float(np.mean(pred == truth))


def per_class_f1(pred, truth, m):
    """F1 = 2TP / (2TP + FP + FN) per class, 0 where the denominator is 0."""
    pred, truth = np.asarray(pred), np.asarray(truth)
    out = np.zeros(m)
    for c in range(m):
        tp = np.sum((pred == c) & (truth == c))
        fp = np.sum((pred == c) & (truth != c))
        fn = np.sum((pred != c) & (truth == c))
        denom = 2 * tp + fp + fn
        out[c] = 2 * tp / denom if denom else 0.0
    return out


def macro_f1(pred, truth, m):
    return float(per_class_f1(pred, truth, m).mean())


def binary_auc(scores, positive):
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DomainError("AUC needs both positive and negative samples")
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auc_roc_macro(scores, truth):
    """Unweighted mean of one-vs-rest AUCs.

    A 1-D ``scores`` is treated as the positive-class score of a binary
    problem with ``truth`` in {0, 1}. Classes missing from ``truth`` are
    skipped with a log warning.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if len(np.unique(truth)) < 2:
        raise DomainError("AUC undefined when truth holds a single class")
    if scores.ndim == 1:
        return binary_auc(scores, truth == 1)
    aucs = []
    for c in range(scores.shape[1]):
        pos = truth == c
        if not pos.any():
            log.warning("class %d absent from truth; skipped in macro AUC", c)
            continue
        aucs.append(binary_auc(scores[:, c], pos))
    return float(np.mean(aucs))


def evaluate(probs, truth, m):
    probs = np.asarray(probs)
    truth = np.asarray(truth)
    pred = probs.argmax(axis=1)
    f1s = per_class_f1(pred, truth, m)
    try:
        auc = auc_roc_macro(probs, truth)
    except DomainError:
        auc = float("nan")
    return MetricsReport(accuracy(pred, truth), float(f1s.mean()), auc,
                         tuple(float(x) for x in f1s), len(truth))


def feature_correlation(H):
    """Absolute Pearson correlation between columns.

    Zero-variance columns correlate 0 with everything else; the diagonal
    is always 1.
    """
    H = np.asarray(H, dtype=np.float64)
    X = H - H.mean(axis=0)
    norm = np.sqrt((X * X).sum(axis=0))
    ok = norm > 1e-12
    Xn = np.zeros_like(X)
    Xn[:, ok] = X[:, ok] / norm[ok]
    C = np.abs(Xn.T @ Xn)
    np.clip(C, 0.0, 1.0, out=C)
    np.fill_diagonal(C, 1.0)
    return C


def block_correlation_contrast(C, block_size):
    """Mean |corr| inside diagonal blocks vs outside them, diagonal excluded."""
    D = C.shape[0]
    block = np.arange(D) // block_size
    same = block[:, None] == block[None, :]
    off = ~np.eye(D, dtype=bool)
    return float(C[same & off].mean()), float(C[~same].mean())
