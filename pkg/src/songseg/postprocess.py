"""From logit curves to boundary predictions.

Peak picking keeps strict local maxima above a threshold, then greedily
suppresses any peak within six seconds of a stronger one.  The threshold
sweep scores a whole split at every candidate threshold and reports the
best-scoring one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annotations import BoundarySet
from .evaluation import score_corpus

SUPPRESSION_SECONDS = 6.0
SWEEP_STEP = 0.005


@dataclass
class PredictionCurve:
    """Per-frame boundary probabilities for one padded network input."""

    probs: np.ndarray
    frame_rate: float
    pad_frames: int


def from_logits(logits, frame_rate: float, pad_frames: int) -> PredictionCurve:
    z = np.asarray(logits, dtype=np.float64)
    probs = np.empty_like(z)
    pos = z >= 0
    probs[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    probs[~pos] = ez / (1.0 + ez)
    return PredictionCurve(probs=probs, frame_rate=frame_rate, pad_frames=pad_frames)


def _peak_frames(probs: np.ndarray) -> list:
    """Strict local maxima; for plateaus the first frame counts.

    A run of equal values is a peak when every existing neighbor is
    strictly lower; a run spanning the whole curve is not a peak.
    """
    n = probs.size
    peaks = []
    start = 0
    for i in range(1, n + 1):
        if i < n and probs[i] == probs[start]:
            continue
        # run is [start, i-1]
        left_lower = start == 0 or probs[start - 1] < probs[start]
        right_lower = i == n or probs[i] < probs[start]
        whole_curve = start == 0 and i == n
        if left_lower and right_lower and not whole_curve:
            peaks.append(start)
        start = i
    return peaks


def pick_peaks(curve: PredictionCurve, threshold: float) -> BoundarySet:
    """Thresholded peak picking with six-second non-maximum suppression.

    Candidates are processed strongest-first (ties: earlier frame wins) and
    accepted only when no already-accepted peak lies within six seconds.
    Accepted frames convert to seconds relative to the padding offset;
    negative times are dropped.
    """
    candidates = [f for f in _peak_frames(curve.probs)
                  if curve.probs[f] >= threshold]
    candidates.sort(key=lambda f: (-curve.probs[f], f))
    accepted = []
    min_gap = SUPPRESSION_SECONDS * curve.frame_rate
    for f in candidates:
        if all(abs(f - a) >= min_gap for a in accepted):
            accepted.append(f)
    times = [(f - curve.pad_frames) / curve.frame_rate for f in accepted]
    return BoundarySet(t for t in times if t >= 0.0)


@dataclass
class SweepRow:
    threshold: float
    precision: float
    recall: float
    f_score: float


def sweep_threshold(pairs, tolerance: float = 0.5, beta: float = 1.0,
                    step: float = SWEEP_STEP):
    """Score every threshold on a grid over [0, 1] and return the optimum.

    ``pairs`` is a list of ``(PredictionCurve, BoundarySet)`` items.  Returns
    ``(best_threshold, rows)`` where rows hold mean precision/recall/F per
    threshold; ties on F go to the smallest threshold.
    """
    if not pairs:
        raise ValueError("need at least one (curve, reference) pair")
    n_steps = int(round(1.0 / step))
    rows = []
    best_threshold, best_f = 0.0, -1.0
    for i in range(n_steps + 1):
        threshold = i * step
        scored = [(ref, pick_peaks(curve, threshold)) for curve, ref in pairs]
        report = score_corpus(scored, tolerance=tolerance, beta=beta)
        rows.append(SweepRow(threshold, report.mean_precision,
                             report.mean_recall, report.mean_f))
        if report.mean_f > best_f:
            best_f = report.mean_f
            best_threshold = threshold
    return best_threshold, rows


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("threshold,precision,recall,f_beta\n")
        for r in rows:
            fh.write(f"{r.threshold:.3f},{r.precision:.6f},"
                     f"{r.recall:.6f},{r.f_score:.6f}\n")
