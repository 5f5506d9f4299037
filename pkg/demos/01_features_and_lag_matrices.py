"""Front end walkthrough: from raw audio to network-ready matrices.

Synthesizes one track with known section boundaries, then shows each stage
of the feature pipeline: the mel-log spectrogram, a self-similarity lag
matrix, and the padded/standardized input the network actually consumes.
"""

import numpy as np

from songseg import RunConfig, SslmConfig, compute_sslm, extract_inputs, synth_corpus
from songseg.spectral import max_pool_time, mel_log_spectrogram

# ---------------------------------------------------------------------------
# A synthetic track: three contrasting segments, boundaries known exactly.
# ---------------------------------------------------------------------------
(track,) = synth_corpus(seed=7, n_tracks=1, segments_per_track=(3, 3),
                        segment_duration=(8.0, 8.0))
print(f"track: {track.audio.duration:.1f} s at {track.audio.sample_rate} Hz")
print(f"true boundaries (s): {track.boundaries.times}")
print(f"segments: {[(round(d, 2), rid) for d, rid in track.segment_specs]}")

run = RunConfig()
params = run.params

# ---------------------------------------------------------------------------
# Mel-log spectrogram: 80 bands, dB scale, floored at -70.
# ---------------------------------------------------------------------------
mls = mel_log_spectrogram(track.audio, params)
print(f"\nmel-log spectrogram: {mls.values.shape} (bands x frames), "
      f"range [{mls.values.min():.1f}, {mls.values.max():.1f}] dB")

pooled = max_pool_time(mls, params.pool_single)
print(f"after x{params.pool_single} time pooling: {pooled.values.shape} "
      f"({1 / pooled.hop_seconds:.2f} frames/s)")

# The boundary frames should show a visible novelty: compare the mean
# absolute frame-to-frame difference at boundaries vs elsewhere.
diffs = np.abs(np.diff(pooled.values, axis=1)).mean(axis=0)
frame_rate = 1 / pooled.hop_seconds
boundary_frames = [round(t * frame_rate) for t in track.boundaries]
at_bounds = np.mean([diffs[f - 1] for f in boundary_frames])
print(f"novelty at boundaries {at_bounds:.2f} vs median {np.median(diffs):.2f}")

# ---------------------------------------------------------------------------
# Self-similarity lag matrices: one per (feature, metric) pair.
# Values near 1 mean "this moment closely repeats material from lag frames
# ago"; values near 0 mean it does not.
# ---------------------------------------------------------------------------
for feature, metric in (("mfcc", "euclidean"), ("chroma", "cosine")):
    config = SslmConfig(feature=feature, metric=metric, pooling="pool6",
                        params=params)
    sslm = compute_sslm(track.audio, config)
    print(f"\nSSLM {feature}/{metric}: {sslm.values.shape} (lags x frames), "
          f"values in ({sslm.values.min():.3f}, {sslm.values.max():.3f})")

# ---------------------------------------------------------------------------
# Network inputs: every selected matrix pink-noise padded by 50 frames per
# side and standardized per band, then truncated to a common frame count.
# ---------------------------------------------------------------------------
run_all = RunConfig(include_mls=True,
                    sslm_inputs=("mfcc-euclidean", "chroma-cosine"))
inputs = extract_inputs(track.audio, run_all)
for name, matrix in inputs.items():
    live = matrix.values.std(axis=1) > 0
    print(f"net input {name:16s} {str(matrix.values.shape):12s} "
          f"band means ~{matrix.values[live].mean():.1e}")
total_height = sum(m.n_bins for m in inputs.values())
print(f"stacked input height for this selection: {total_height}")
