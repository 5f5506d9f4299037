"""Independent reference implementations used only by the test suite.

Everything here recomputes a production quantity through a different route:
definitional DFT/DCT summations, the full self-similarity matrix with lag
extraction (instead of direct per-lag distances), sort-and-interpolate
quantiles, scipy distance/sigmoid primitives, central finite differences,
and exhaustive boundary matching.  None of it shares code with the
production paths it checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

# Guard constants mirrored from the documented recurrence contract.
_EPS_MIN = 1e-9
_RATIO_LARGE = 50.0


def dft_direct(x) -> np.ndarray:
    """Definitional DFT: X[k] = sum_n x[n] exp(-2*pi*i*k*n/N)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    grid = np.arange(n)
    basis = np.exp(-2j * np.pi * np.outer(grid, grid) / n)
    return basis @ x


def dct2_direct(frame) -> np.ndarray:
    """Orthonormal type-II DCT by direct summation, first coefficient dropped."""
    x = np.asarray(frame, dtype=np.float64)
    n = x.size
    out = np.empty(n - 1)
    for k in range(1, n):
        acc = 0.0
        for i in range(n):
            acc += x[i] * np.cos(np.pi * (i + 0.5) * k / n)
        out[k - 1] = np.sqrt(2.0 / n) * acc
    return out


def pairwise_ssm(vectors, metric: str) -> np.ndarray:
    """Full pairwise distance matrix over frame vectors (columns).

    Cosine distances involving a zero vector are defined as 0, matching the
    documented NaN guard.
    """
    pts = np.asarray(vectors, dtype=np.float64).T
    if metric == "euclidean":
        return cdist(pts, pts, metric="euclidean")
    if metric == "cosine":
        with np.errstate(invalid="ignore", divide="ignore"):
            ssm = cdist(pts, pts, metric="cosine")
        ssm = np.nan_to_num(ssm, nan=0.0)
        norms = np.linalg.norm(pts, axis=1)
        zero = norms == 0.0
        ssm[zero, :] = 0.0
        ssm[:, zero] = 0.0
        return ssm
    raise ValueError(f"unknown metric {metric!r}")


def ssm_to_sslm(ssm: np.ndarray) -> np.ndarray:
    """Lag view of a square similarity matrix with wraparound indexing.

    ``out[i, j] = ssm[(i + j) % n, j]``: row ``i`` relates each frame to
    the frame ``i`` steps ahead, modulo the length.
    """
    n = ssm.shape[0]
    ii = np.arange(n)[:, None]
    jj = np.arange(n)[None, :]
    return ssm[(ii + jj) % n, jj]


def causal_lag_view(ssm: np.ndarray, lag_bins: int) -> np.ndarray:
    """Causal lag extraction: ``out[i, l-1] = ssm[i, i-l]``, clamped at 0.

    This is the no-wraparound reading the pipeline uses: references before
    the first frame resolve to frame 0, which lies inside the noise pad.
    """
    n = ssm.shape[0]
    ii = np.arange(n)[:, None]
    ll = np.arange(1, lag_bins + 1)[None, :]
    prev = np.maximum(ii - ll, 0)
    return ssm[ii, prev]


def quantile_sorted(values, q: float) -> float:
    """Linear-interpolation quantile via an explicit sort."""
    v = sorted(float(x) for x in values)
    if not v:
        raise ValueError("empty value set")
    h = q * (len(v) - 1)
    lo = int(np.floor(h))
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (h - lo) * (v[hi] - v[lo])


def equalize_by_sort(d: np.ndarray, kappa: float) -> np.ndarray:
    """Quantile equalization recomputed with np.sort plus manual interpolation."""
    n, lag_bins = d.shape
    eps = np.empty_like(d)
    n_vals = 2 * lag_bins
    h = kappa * (n_vals - 1)
    lo = int(np.floor(h))
    hi = min(lo + 1, n_vals - 1)
    frac = h - lo
    base = np.arange(n)
    for lag in range(1, lag_bins + 1):
        prev = base - lag
        prev[prev < 0] = base[prev < 0]
        merged = np.sort(np.concatenate([d, d[prev]], axis=1), axis=1)
        eps[:, lag - 1] = merged[:, lo] + frac * (merged[:, hi] - merged[:, lo])
    return eps


def sslm_via_ssm(vectors, lag_bins: int, metric: str, kappa: float,
                 pool_post: int = 1) -> np.ndarray:
    """Lag-matrix reference path: full SSM, lag view, quantile, sigmoid.

    Takes the same stacked feature vectors the pipeline feeds its distance
    stage and returns a ``(lag_bins, frames)`` matrix directly comparable
    to the pipeline output.
    """
    ssm = pairwise_ssm(vectors, metric)
    d = causal_lag_view(ssm, lag_bins)
    eps = equalize_by_sort(d, kappa)
    d = d[lag_bins:]
    eps = eps[lag_bins:]
    ratio = np.where(
        eps >= _EPS_MIN,
        np.minimum(d / np.where(eps >= _EPS_MIN, eps, 1.0), _RATIO_LARGE),
        np.where(d < _EPS_MIN, 0.0, _RATIO_LARGE),
    )
    r = np.nan_to_num(expit(1.0 - ratio), nan=0.0).T
    if pool_post > 1:
        n_out = -(-r.shape[1] // pool_post)
        pooled = np.empty((r.shape[0], n_out))
        for j in range(n_out):
            pooled[:, j] = r[:, j * pool_post : (j + 1) * pool_post].max(axis=1)
        r = pooled
    return r


def finite_difference(func, x, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of a scalar function at x."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat, gflat = x.ravel(), grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        f_plus = func(x)
        flat[i] = orig - step
        f_minus = func(x)
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2.0 * step)
    return grad


def finite_difference_at(func, x, flat_indices, step: float = 1e-5) -> np.ndarray:
    """Central differences at selected coordinates only (for big tensors)."""
    x = np.array(x, dtype=np.float64)
    flat = x.ravel()
    out = np.empty(len(flat_indices))
    for pos, i in enumerate(flat_indices):
        orig = flat[i]
        flat[i] = orig + step
        f_plus = func(x)
        flat[i] = orig - step
        f_minus = func(x)
        flat[i] = orig
        out[pos] = (f_plus - f_minus) / (2.0 * step)
    return out


def exhaustive_match_count(ref, est, tolerance: float) -> int:
    """Maximum hit count by trying every injective pairing."""
    ref = [float(t) for t in ref]
    est = [float(t) for t in est]
    used = [False] * len(est)

    def best(i):
        if i == len(ref):
            return 0
        score = best(i + 1)
        for j, e in enumerate(est):
            if not used[j] and abs(ref[i] - e) <= tolerance:
                used[j] = True
                score = max(score, 1 + best(i + 1))
                used[j] = False
        return score

    return best(0)


def relative_error(analytic, reference, floor: float = 1e-6) -> float:
    """Max elementwise |a - b| / max(|a|, |b|, floor)."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    b = np.asarray(reference, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


@dataclass
class OracleReport:
    case_id: str
    max_abs_err: float
    max_rel_err: float
    tolerance: float
    passed: bool


def _report(case_id, analytic, reference, tolerance, relative=False) -> OracleReport:
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(reference, dtype=np.float64)
    abs_err = float(np.max(np.abs(a - b))) if a.size else 0.0
    rel_err = relative_error(a, b)
    err = rel_err if relative else abs_err
    return OracleReport(case_id=case_id, max_abs_err=abs_err,
                        max_rel_err=rel_err, tolerance=tolerance,
                        passed=bool(err < tolerance))


def oracle_suite(seed: int = 0) -> list:
    """Run every registered oracle-vs-implementation comparison."""
    from .audio import AudioBuffer
    from .layers import (bce_with_logits, conv2d_backward, conv2d_forward,
                         maxpool2d_backward, maxpool2d_forward)
    from .params import PipelineParams
    from .spectral import FeatureMatrix, stft_magnitude
    from .sslm import (SslmConfig, compute_sslm, dct_features, equalize,
                       lag_distances, LagFeatureSeries)
    from .evaluation import match_boundaries
    from .annotations import BoundarySet

    rng = np.random.default_rng(seed)
    params = PipelineParams()
    reports = []

    # STFT frame vs definitional DFT.
    audio = AudioBuffer(rng.uniform(-0.5, 0.5, params.window + 3 * params.hop),
                        params.sr)
    stft = stft_magnitude(audio, params)
    frame = audio.samples[params.hop : params.hop + params.window] * np.hanning(
        params.window)
    ref_mag = np.abs(dft_direct(frame))[: params.window // 2 + 1]
    reports.append(_report("stft_vs_direct_dft", stft.values[:, 1], ref_mag, 1e-6))

    # DCT features vs direct summation.
    mls_col = rng.uniform(-70.0, 0.0, (params.n_mels, 1))
    fm = FeatureMatrix(values=mls_col, hop_seconds=params.base_hop_seconds,
                       kind="mls")
    got = dct_features(fm).vectors[:, 0]
    reports.append(_report("dct_vs_direct_sum", got, dct2_direct(mls_col[:, 0]),
                           1e-9))

    # Per-lag distances vs the full-SSM route.
    series = LagFeatureSeries(vectors=rng.standard_normal((6, 10)), origin="dct_of_mls")
    for metric in ("euclidean", "cosine"):
        got = lag_distances(series, 3, metric)
        ref = causal_lag_view(pairwise_ssm(series.vectors, metric), 3)
        reports.append(_report(f"lag_distances_vs_ssm_{metric}", got, ref, 1e-9))

    # Quantile equalization vs sort-and-interpolate.
    d = rng.uniform(0.0, 5.0, (12, 4))
    reports.append(_report("equalize_vs_sorted_quantile",
                           equalize(d, 0.1), equalize_by_sort(d, 0.1), 1e-12))

    # Full pipeline vs SSM route, every feature/metric pair, 5 s of audio.
    clip = AudioBuffer(rng.uniform(-0.5, 0.5, 5 * params.sr), params.sr)
    for feature in ("mfcc", "chroma"):
        for metric in ("euclidean", "cosine"):
            config = SslmConfig(feature=feature, metric=metric,
                                pooling="pool6", params=params)
            got = compute_sslm(clip, config)
            stacked = front_end_series(clip, config)
            ref = sslm_via_ssm(stacked.vectors, params.lag_frames // 6,
                               metric, params.quantile)
            reports.append(_report(f"sslm_pipeline_{feature}_{metric}",
                                   got.values, ref, 1e-6))

    # Layer gradients vs central differences.
    x = rng.standard_normal((1, 2, 8, 10))
    w = rng.standard_normal((3, 2, 3, 3)) * 0.5
    b = rng.standard_normal(3) * 0.1
    up = rng.standard_normal((1, 3, 8, 10))

    def conv_loss_x(xv):
        y, _ = conv2d_forward(xv, w, b, (1, 1), (1, 1), (1, 1))
        return float((y * up).sum())

    def conv_loss_w(wv):
        y, _ = conv2d_forward(x, wv, b, (1, 1), (1, 1), (1, 1))
        return float((y * up).sum())

    y, cache = conv2d_forward(x, w, b, (1, 1), (1, 1), (1, 1))
    gx, gw, _ = conv2d_backward(up, cache)
    fd_x = finite_difference(conv_loss_x, x)
    fd_w = finite_difference(conv_loss_w, w)
    err = max(relative_error(gx, fd_x), relative_error(gw, fd_w))
    reports.append(OracleReport(
        "conv2d_grad_vs_fd",
        max(float(np.max(np.abs(gx - fd_x))), float(np.max(np.abs(gw - fd_w)))),
        err, 1e-4, err < 1e-4))

    def pool_loss(xv):
        y, _ = maxpool2d_forward(xv, (5, 3), (5, 1), (1, 1))
        return float((y * up_pool).sum())

    up_pool = rng.standard_normal((1, 2, 2, 10))
    y, cache = maxpool2d_forward(x, (5, 3), (5, 1), (1, 1))
    gx = maxpool2d_backward(up_pool, cache)
    fd = finite_difference(pool_loss, x)
    reports.append(OracleReport("maxpool_grad_vs_fd",
                                float(np.max(np.abs(gx - fd))),
                                relative_error(gx, fd),
                                1e-4, relative_error(gx, fd) < 1e-4))

    z = rng.standard_normal(40)
    targets = rng.uniform(0.0, 1.0, 40)

    def bce_loss(zv):
        loss, _ = bce_with_logits(zv, targets)
        return loss

    _, grad = bce_with_logits(z, targets)
    fd = finite_difference(bce_loss, z)
    reports.append(OracleReport("bce_grad_vs_fd",
                                float(np.max(np.abs(grad - fd))),
                                relative_error(grad, fd),
                                1e-4, relative_error(grad, fd) < 1e-4))

    # Matching vs exhaustive search on random instances.
    worst = 0
    for _ in range(25):
        ref_times = np.sort(rng.uniform(0.0, 20.0, rng.integers(0, 6)))
        est_times = np.sort(rng.uniform(0.0, 20.0, rng.integers(0, 6)))
        got = match_boundaries(BoundarySet(ref_times), BoundarySet(est_times), 1.0).tp
        want = exhaustive_match_count(ref_times, est_times, 1.0)
        worst = max(worst, abs(got - want))
    reports.append(OracleReport("matching_vs_exhaustive", float(worst),
                                float(worst), 0.5, worst == 0))

    return reports


def front_end_series(audio, config):
    """Front half of the pipeline, up to the stacked feature series.

    Shared input for comparing the production lag path against the
    full-SSM route; the comparison replaces everything downstream of it.
    """
    from .spectral import chroma_project, max_pool_time, mel_log_spectrogram, \
        stft_magnitude
    from .sslm import chroma_features, dct_features, pad_noise_floor, stack_frames

    p = config.params
    if config.feature == "mfcc":
        front = mel_log_spectrogram(audio, p)
    else:
        front = stft_magnitude(audio, p)
    pooled = max_pool_time(pad_noise_floor(front, p), config.pool_pre)
    if config.feature == "mfcc":
        series = dct_features(pooled)
    else:
        series = chroma_features(chroma_project(pooled, p))
    return stack_frames(series, p.stacking)


def format_tap(reports) -> str:
    """Render oracle reports as TAP-style text."""
    lines = [f"1..{len(reports)}"]
    for i, rep in enumerate(reports, start=1):
        status = "ok" if rep.passed else "not ok"
        lines.append(
            f"{status} {i} - {rep.case_id} "
            f"(abs={rep.max_abs_err:.3g} rel={rep.max_rel_err:.3g} "
            f"tol={rep.tolerance:g})"
        )
    return "\n".join(lines)
