"""songseg: music structure boundary detection at desk scale.

Feature extraction (mel-log spectrograms, self-similarity lag matrices),
a from-scratch fully-convolutional detector trained on Gaussian boundary
targets, peak-picking post-processing, and tolerance-window hit-rate
evaluation.
"""

from .annotations import (BoundarySet, DatasetSplit, TargetCurve,
                          parse_functions_file, split_dataset, to_target_curve)
from .audio import AudioBuffer, read_wav, resample, write_wav
from .errors import CompatibilityError, FormatError, InputTooShortError
from .evaluation import MatchResult, ScoreReport, match_boundaries, prf, score_corpus
from .model import BoundaryNet
from .params import PipelineParams, RunConfig
from .pipeline import extract_inputs
from .postprocess import PredictionCurve, from_logits, pick_peaks, sweep_threshold
from .spectral import (FeatureMatrix, chroma_project, max_pool_time,
                       mel_log_spectrogram, stft_magnitude)
from .sslm import SslmConfig, compute_sslm, finalize_input
from .synth import SyntheticTrack, synth_corpus
from .training import TrackExample, train

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "BoundaryNet", "BoundarySet", "CompatibilityError",
    "DatasetSplit", "FeatureMatrix", "FormatError", "InputTooShortError",
    "MatchResult", "PipelineParams", "PredictionCurve", "RunConfig",
    "ScoreReport", "SslmConfig", "SyntheticTrack", "TargetCurve",
    "TrackExample", "chroma_project", "compute_sslm", "extract_inputs",
    "finalize_input", "from_logits", "match_boundaries", "max_pool_time",
    "mel_log_spectrogram", "parse_functions_file", "pick_peaks", "prf",
    "read_wav", "resample", "score_corpus", "split_dataset", "stft_magnitude",
    "sweep_threshold", "synth_corpus", "to_target_curve", "train", "write_wav",
]
