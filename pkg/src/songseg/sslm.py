"""Self-similarity lag matrices.

The chain implemented here turns a spectral front end into a recurrence
score between each time frame and its recent past:

1. prepend a constant noise-floor pad spanning the lag window,
2. max-pool time (by 6 up front, or by 2 now and 3 at the very end),
3. reduce frames to timbre (DCT of the mel bands, first coefficient
   dropped) or harmony (chroma) vectors,
4. stack each frame with a frame a fixed offset ahead,
5. compute per-lag distances, equalize them by a local quantile, drop the
   frames that lie inside the pad, and squash through a sigmoid.

Outputs are in (0, 1): values near 1 mean a frame closely repeats material
from that many frames ago.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .audio import AudioBuffer
from .errors import InputTooShortError
from .params import PipelineParams
from .spectral import (
    FeatureMatrix,
    chroma_project,
    max_pool_time,
    mel_log_spectrogram,
    stft_magnitude,
)

FEATURES = ("mfcc", "chroma")
METRICS = ("euclidean", "cosine")

# Below this the equalization factor is treated as zero and the distance
# ratio is pinned instead of divided.
EPSILON_MIN = 1e-9
# Cap on the distance ratio: also assigned when the equalizer is zero but
# the distance is not.  sigmoid(1 - 50) ~ 5e-22, small but still nonzero,
# so outputs stay strictly inside (0, 1) instead of underflowing to 0.
RATIO_LARGE = 50.0

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class SslmConfig:
    """One lag-matrix variant: feature type, distance metric, pooling plan."""

    feature: str
    metric: str
    pooling: str
    params: PipelineParams

    def __post_init__(self):
        if self.feature not in FEATURES:
            raise ValueError(f"unknown feature {self.feature!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.pooling not in ("pool6", "pool2_3"):
            raise ValueError(f"unknown pooling {self.pooling!r}")

    @property
    def pool_pre(self) -> int:
        """Time-pool factor applied before distances are computed."""
        return (self.params.pool_single if self.pooling == "pool6"
                else self.params.pool_pre)


@dataclass
class LagFeatureSeries:
    """Per-frame feature vectors feeding the distance stage."""

    vectors: np.ndarray  # (dim, frames)
    origin: str          # "dct_of_mls" or "chroma_of_stft"
    stacking: int = 1

    @property
    def n_frames(self) -> int:
        return self.vectors.shape[1]


def pad_noise_floor(features: FeatureMatrix, params: PipelineParams) -> FeatureMatrix:
    """Prepend a constant noise-floor pad covering the lag span.

    The pad is ``round(lag_seconds * sr / hop)`` frames at the matrix's
    un-pooled rate: the dB floor for mel input, its linear-magnitude
    equivalent for STFT input.
    """
    if features.kind not in ("mls", "stft_mag"):
        raise ValueError(f"cannot pad feature kind {features.kind!r}")
    n_pad = params.lag_frames
    if n_pad == 0:
        return replace(features, values=features.values.copy())
    fill = params.floor_db if features.kind == "mls" else params.floor_amplitude
    pad = np.full((features.n_bins, n_pad), fill)
    return replace(
        features,
        values=np.hstack([pad, features.values]),
        pad_frames=features.pad_frames + n_pad,
    )


def dct_basis(n_bands: int) -> np.ndarray:
    """Orthonormal type-II DCT rows 2..n_bands (the DC row is dropped)."""
    k = np.arange(1, n_bands)[:, None]
    n = np.arange(n_bands)[None, :]
    return np.sqrt(2.0 / n_bands) * np.cos(np.pi * (n + 0.5) * k / n_bands)


def dct_features(mls_frames: FeatureMatrix) -> LagFeatureSeries:
    """Per-frame orthonormal DCT-II of the mel bands, first coefficient dropped.

    A constant frame therefore maps to the zero vector, which is what the
    noise-floor pad produces.
    """
    if mls_frames.kind != "mls":
        raise ValueError(f"DCT features expect mls input, got {mls_frames.kind!r}")
    basis = dct_basis(mls_frames.n_bins)
    return LagFeatureSeries(vectors=basis @ mls_frames.values, origin="dct_of_mls")


def chroma_features(chroma: FeatureMatrix) -> LagFeatureSeries:
    if chroma.kind != "chroma":
        raise ValueError(f"expected chroma input, got {chroma.kind!r}")
    return LagFeatureSeries(vectors=np.asarray(chroma.values, dtype=np.float64),
                            origin="chroma_of_stft")


def stack_frames(series: LagFeatureSeries, m: int) -> LagFeatureSeries:
    """Concatenate each frame with the frame ``m`` steps ahead.

    Column ``i`` of the output is ``[v_i; v_{i+m}]``; the series loses its
    last ``m`` columns.  Too-short input yields zero columns, which the
    distance stage rejects.
    """
    if m < 1:
        raise ValueError("stacking factor must be >= 1")
    v = series.vectors
    n_out = max(v.shape[1] - m, 0)
    stacked = np.vstack([v[:, :n_out], v[:, m : m + n_out]])
    return LagFeatureSeries(vectors=stacked, origin=series.origin, stacking=m)


def distance(u, v, metric: str) -> float:
    """Distance between two equal-length vectors.

    Cosine distance of any zero vector is defined as 0 so that constant
    (pad) frames never produce NaN.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("vectors must have equal length")
    if metric == "euclidean":
        return float(np.linalg.norm(u - v))
    if metric == "cosine":
        nu = np.linalg.norm(u)
        nv = np.linalg.norm(v)
        if nu == 0.0 or nv == 0.0:
            return 0.0
        return float(1.0 - (u @ v) / (nu * nv))
    raise ValueError(f"unknown metric {metric!r}")


def lag_distances(series: LagFeatureSeries, lag_bins: int, metric: str) -> np.ndarray:
    """Distance from every frame to each of its ``lag_bins`` predecessors.

    Returns ``D`` of shape ``(frames, lag_bins)`` with
    ``D[i, l-1] = distance(v_i, v_{i-l})``.  References before the first
    frame clamp to frame 0, which lies inside the noise-floor pad whenever
    the series was padded.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if lag_bins < 1:
        raise ValueError("lag_bins must be >= 1")
    v = np.asarray(series.vectors, dtype=np.float64)
    n = v.shape[1]
    if n < lag_bins + 1:
        raise InputTooShortError(
            f"series has {n} frames, need at least {lag_bins + 1} for "
            f"{lag_bins} lag bins"
        )
    d = np.empty((n, lag_bins))
    if metric == "cosine":
        norms = np.linalg.norm(v, axis=0)
    base = np.arange(n)
    for lag in range(1, lag_bins + 1):
        prev = np.maximum(base - lag, 0)
        if metric == "euclidean":
            d[:, lag - 1] = np.linalg.norm(v - v[:, prev], axis=0)
        else:
            dots = np.einsum("ij,ij->j", v, v[:, prev])
            denom = norms * norms[prev]
            with np.errstate(divide="ignore", invalid="ignore"):
                cos = np.where(denom > 0.0, 1.0 - dots / denom, 0.0)
            d[:, lag - 1] = cos
    return d


def equalize(d: np.ndarray, kappa: float) -> np.ndarray:
    """Per-entry equalization factor: a quantile of two distance rows.

    ``eps[i, l-1]`` is the ``kappa``-quantile (linear interpolation) of the
    multiset formed by row ``i`` and row ``i-l`` of ``d``; when ``i-l`` is
    before the first row, row ``i`` is used twice.
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie in (0, 1)")
    n, lag_bins = d.shape
    eps = np.empty_like(d)
    base = np.arange(n)
    for lag in range(1, lag_bins + 1):
        prev = base - lag
        prev[prev < 0] = base[prev < 0]
        stacked = np.hstack([d, d[prev]])
        eps[:, lag - 1] = np.quantile(stacked, kappa, axis=1, method="linear")
    return eps


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def recurrence(d: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Sigmoid of one minus the equalized distance ratio.

    Where the equalizer underflows (all-identical frames), the ratio is
    pinned to 0 for a near-zero distance and to a large constant otherwise,
    so uniform input produces sigmoid(1) rather than NaN.  Any residual NaN
    is mapped to 0.
    """
    if d.shape != eps.shape:
        raise ValueError("distance and equalization arrays must align")
    ratio = np.empty_like(d)
    ok = eps >= EPSILON_MIN
    ratio[ok] = np.minimum(d[ok] / eps[ok], RATIO_LARGE)
    degenerate = ~ok
    ratio[degenerate] = np.where(d[degenerate] < EPSILON_MIN, 0.0, RATIO_LARGE)
    r = _sigmoid(1.0 - ratio)
    return np.nan_to_num(r, nan=0.0)


def compute_sslm(audio: AudioBuffer, config: SslmConfig) -> FeatureMatrix:
    """Full lag-matrix pipeline for one (feature, metric, pooling) variant.

    Output is ``(lag_bins, frames)`` with values in (0, 1) at the final
    pooled frame rate ``sr / (hop * 6)`` for either pooling strategy.
    """
    p = config.params
    p_pre = config.pool_pre

    if config.feature == "mfcc":
        front = mel_log_spectrogram(audio, p)
    else:
        front = stft_magnitude(audio, p)
    pooled = max_pool_time(pad_noise_floor(front, p), p_pre)
    if config.feature == "mfcc":
        series = dct_features(pooled)
    else:
        series = chroma_features(chroma_project(pooled, p))
    stacked = stack_frames(series, p.stacking)

    lag_bins = p.lag_frames // p_pre
    d = lag_distances(stacked, lag_bins, config.metric)
    eps = equalize(d, p.quantile)
    # The first lag_bins frames sit inside the noise-floor pad; drop them.
    r = recurrence(d[lag_bins:], eps[lag_bins:])

    out = FeatureMatrix(
        values=r.T,
        hop_seconds=p.base_hop_seconds * p_pre,
        pool_factor=p_pre,
        pad_frames=0,
        kind="sslm",
    )
    if config.pooling == "pool2_3":
        out = max_pool_time(out, p.pool_post)
    return out


def pink_noise(n: int, rng: np.random.Generator, generators: int = 16) -> np.ndarray:
    """Voss-McCartney pink noise: summed generators updated at halving rates.

    At step ``i`` the generator indexed by the number of trailing zero bits
    of ``i`` is redrawn, so generator ``k`` changes every ``2**k`` steps.
    """
    if n <= 0:
        return np.zeros(0)
    held = rng.standard_normal(generators)
    total = held.sum()
    out = np.empty(n)
    out[0] = total
    for i in range(1, n):
        k = min((i & -i).bit_length() - 1, generators - 1)
        total -= held[k]
        held[k] = rng.standard_normal()
        total += held[k]
        out[i] = total
    return out


def finalize_input(m: FeatureMatrix, gamma: int, seed: int) -> FeatureMatrix:
    """Pad with pink noise and standardize each band.

    ``gamma`` pink-noise frames are prepended and appended (per band, scaled
    into that band's empirical value range), then every band is normalized
    to zero mean and unit variance.  Bands whose padded variance is below
    ``VARIANCE_FLOOR`` are zeroed instead of divided.
    """
    if m.kind not in ("mls", "sslm"):
        raise ValueError(f"cannot finalize feature kind {m.kind!r}")
    rng = np.random.default_rng(seed)
    n_bins, n_frames = m.values.shape
    out = np.empty((n_bins, n_frames + 2 * gamma))
    out[:, gamma : gamma + n_frames] = m.values
    for row in range(n_bins):
        noise = pink_noise(2 * gamma, rng)
        lo = m.values[row].min() if n_frames else 0.0
        hi = m.values[row].max() if n_frames else 0.0
        span = hi - lo
        n_lo, n_hi = noise.min(), noise.max()
        if span > 0.0 and n_hi > n_lo:
            scaled = lo + (noise - n_lo) / (n_hi - n_lo) * span
        else:
            scaled = np.full(2 * gamma, lo)
        out[row, :gamma] = scaled[:gamma]
        out[row, gamma + n_frames :] = scaled[gamma:]

    mean = out.mean(axis=1, keepdims=True)
    var = out.var(axis=1, keepdims=True)
    centered = out - mean
    dead = var[:, 0] < VARIANCE_FLOOR
    centered[dead] = 0.0
    scale = np.sqrt(np.where(var < VARIANCE_FLOOR, 1.0, var))
    return FeatureMatrix(
        values=centered / scale,
        hop_seconds=m.hop_seconds,
        pool_factor=m.pool_factor,
        pad_frames=gamma,
        kind="net_input",
    )


def align_frames(matrices: list) -> list:
    """Truncate a group of matrices to their common frame count.

    The pooling arithmetic of the MLS and SSLM paths can disagree by a
    frame or two at the tail; inputs stacked for the network must agree
    exactly, so everything is cut to the shortest (frames are dropped from
    the end, keeping time zero aligned).
    """
    if not matrices:
        return []
    n = min(m.n_frames for m in matrices)
    return [replace(m, values=m.values[:, :n].copy()) for m in matrices]
