"""Tolerance-window boundary scoring.

A predicted boundary counts as a hit when it can be paired with a reference
boundary within the tolerance window, each side used at most once; pairing
is a maximum-cardinality bipartite matching, not a greedy pass (greedy can
under-count, see the tests).  Scores aggregate per track first; corpus
numbers are the mean and population standard deviation of per-track scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .annotations import BoundarySet


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: list = field(default_factory=list)  # [(ref_time, est_time), ...]


@dataclass
class ScoreReport:
    per_track: list  # [(precision, recall, f), ...]
    mean_precision: float
    mean_recall: float
    mean_f: float
    std_precision: float
    std_recall: float
    std_f: float
    beta: float
    tolerance: float


def match_boundaries(ref: BoundarySet, est: BoundarySet,
                     tolerance: float) -> MatchResult:
    """Maximum matching between reference and estimated boundaries.

    Edges connect pairs with ``|ref - est| <= tolerance``; the matching is
    grown with augmenting paths so its size is maximal.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    ref_times = ref.times
    est_times = est.times
    adjacency = [
        [j for j, e in enumerate(est_times) if abs(r - e) <= tolerance]
        for r in ref_times
    ]
    est_match = [-1] * len(est_times)

    def augment(i, visited):
        for j in adjacency[i]:
            if visited[j]:
                continue
            visited[j] = True
            if est_match[j] < 0 or augment(est_match[j], visited):
                est_match[j] = i
                return True
        return False

    tp = 0
    for i in range(len(ref_times)):
        if augment(i, [False] * len(est_times)):
            tp += 1
    pairs = [(float(ref_times[i]), float(est_times[j]))
             for j, i in enumerate(est_match) if i >= 0]
    pairs.sort()
    return MatchResult(tp=tp, fp=len(est_times) - tp, fn=len(ref_times) - tp,
                       pairs=pairs)


def prf(m: MatchResult, beta: float = 1.0):
    """Precision, recall and F_beta; 0/0 cases are defined as 0."""
    p = m.tp / (m.tp + m.fp) if (m.tp + m.fp) else 0.0
    r = m.tp / (m.tp + m.fn) if (m.tp + m.fn) else 0.0
    denom = beta * beta * p + r
    f = (1.0 + beta * beta) * p * r / denom if denom else 0.0
    return p, r, f


def score_corpus(pairs, tolerance: float, beta: float = 1.0) -> ScoreReport:
    """Per-track scores plus their mean and population std.

    ``pairs`` is a list of ``(reference, estimate)`` boundary sets.  Note
    that averaging per-track F differs from computing F of the averaged
    precision/recall; the former is reported.
    """
    if not pairs:
        raise ValueError("need at least one (reference, estimate) pair")
    per_track = [prf(match_boundaries(ref, est, tolerance), beta)
                 for ref, est in pairs]
    arr = np.asarray(per_track, dtype=np.float64)
    means = arr.mean(axis=0)
    stds = arr.std(axis=0)  # population std: deterministic even for one track
    return ScoreReport(
        per_track=per_track,
        mean_precision=float(means[0]), mean_recall=float(means[1]),
        mean_f=float(means[2]),
        std_precision=float(stds[0]), std_recall=float(stds[1]),
        std_f=float(stds[2]),
        beta=beta, tolerance=tolerance,
    )


def report_csv_lines(report: ScoreReport, track_ids=None) -> list:
    lines = ["track,precision,recall,f_beta"]
    for i, (p, r, f) in enumerate(report.per_track):
        tid = track_ids[i] if track_ids else f"track{i:03d}"
        lines.append(f"{tid},{p:.6f},{r:.6f},{f:.6f}")
    lines.append(f"mean,{report.mean_precision:.6f},"
                 f"{report.mean_recall:.6f},{report.mean_f:.6f}")
    lines.append(f"std,{report.std_precision:.6f},"
                 f"{report.std_recall:.6f},{report.std_f:.6f}")
    return lines


def format_score_table(reports, row_labels) -> str:
    """Aligned text table of corpus scores, one report per row.

    Columns: label, tolerance, P, R, ``F<beta> (std)``.
    """
    header = ["Input", "Tol.", "P", "R"]
    betas = []
    for rep in reports:
        tag = f"F{rep.beta:g} (std)"
        if tag not in betas:
            betas.append(tag)
    header.extend(betas)
    rows = [header]
    by_label = {}
    for rep, label in zip(reports, row_labels):
        by_label.setdefault((label, rep.tolerance), {})[f"F{rep.beta:g} (std)"] = rep
    for (label, tol), cells in by_label.items():
        any_rep = next(iter(cells.values()))
        row = [label, f"±{tol:g}s",
               f"{any_rep.mean_precision:.3f}", f"{any_rep.mean_recall:.3f}"]
        for tag in betas:
            rep = cells.get(tag)
            row.append(f"{rep.mean_f:.3f} ({rep.std_f:.3f})" if rep else "-")
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
