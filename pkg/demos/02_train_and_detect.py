"""Miniature end-to-end run: synthesize, train, sweep, detect, score.

Three short tracks are enough for the detector to learn the boundary shape;
training takes a few seconds. The same flow is available from the command
line (see the README), this script stays in memory.
"""

import numpy as np

from songseg import (BoundaryNet, RunConfig, extract_inputs, pick_peaks,
                     score_corpus, synth_corpus, to_target_curve, train)
from songseg.postprocess import from_logits, sweep_threshold
from songseg.training import TrackExample

run = RunConfig(include_mls=True)  # mel spectrogram only, pool6

# ---------------------------------------------------------------------------
# Corpus and features. Boundaries are exact, targets are unit Gaussians.
# ---------------------------------------------------------------------------
tracks = synth_corpus(seed=5, n_tracks=3, segments_per_track=(2, 3),
                      segment_duration=(5.0, 7.0))
examples = []
for i, track in enumerate(tracks):
    mls = extract_inputs(track.audio, run)["mls"]
    target = to_target_curve(track.boundaries, mls.n_frames,
                             run.params.frame_rate, run.params.final_pad)
    examples.append(TrackExample(f"track{i}", mls.values, target,
                                 track.boundaries))
    print(f"track{i}: {track.audio.duration:5.1f} s, "
          f"{len(track.boundaries)} boundaries, input {mls.values.shape}")

train_set, heldout = examples[:2], examples[2]

# ---------------------------------------------------------------------------
# Train. Batch size is one whole track; loss is BCE on the logit curve.
# ---------------------------------------------------------------------------
model = BoundaryNet(input_height=80, seed=0)
result = train(model, train_set, epochs=60, seed=0)
losses = [r.loss for r in result.log if r.split == "train"]
print(f"\ntrain loss: {losses[0]:.4f} -> {losses[-1]:.4f} "
      f"over {len(losses)} epochs")

# ---------------------------------------------------------------------------
# Threshold sweep on the training tracks, then detect on the held-out one.
# ---------------------------------------------------------------------------
pairs = []
for ex in train_set:
    curve = from_logits(model.forward(ex.inputs), ex.target.frame_rate,
                        ex.target.pad_frames)
    pairs.append((curve, ex.boundaries))
threshold, rows = sweep_threshold(pairs, tolerance=0.5)
print(f"optimum threshold {threshold:.3f} "
      f"(train F1 {max(r.f_score for r in rows):.3f})")

held_curve = from_logits(model.forward(heldout.inputs),
                         heldout.target.frame_rate, heldout.target.pad_frames)
detected = pick_peaks(held_curve, threshold)
print(f"\nheld-out truth:    {np.round(heldout.boundaries.times, 2)}")
print(f"held-out detected: {np.round(detected.times, 2)}")

report = score_corpus([(heldout.boundaries, detected)], tolerance=0.5)
print(f"held-out F1 at +/-0.5 s: {report.mean_f:.3f}")
