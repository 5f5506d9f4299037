"""Pipeline parameters and run configuration.

``PipelineParams`` owns every analysis constant (sample rate, STFT geometry,
lag span, pooling factors, stacking, quantile, final padding).  ``RunConfig``
adds the experiment-level choices: which input matrices feed the network,
pooling strategy, training seeds and the peak-picking threshold.  A run
configuration serializes to a plain ``key = value`` text file, and its
canonical form is hashed so that feature files and checkpoints can be checked
for compatibility.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, fields, replace

from .errors import FormatError

# Names of the four self-similarity lag matrix variants, in canonical order.
# This order also fixes how matrices are stacked into the network input.
SSLM_VARIANTS = (
    "mfcc-euclidean",
    "mfcc-cosine",
    "chroma-euclidean",
    "chroma-cosine",
)

POOLINGS = ("pool6", "pool2_3")

# Default peak-picking threshold for a detector trained on the mel
# spectrogram alone.
DEFAULT_MLS_THRESHOLD = 0.205


@dataclass(frozen=True)
class PipelineParams:
    """Analysis constants for the feature pipeline.

    Defaults give a 46 ms Hann window with 50% overlap at 44.1 kHz, an
    80-band mel front end between 80 Hz and 16 kHz, a 14 s lag span, a
    total time-pool factor of 6 (either in one step or split 2 then 3),
    frame stacking of 2, a 0.1 equalization quantile and 50 frames of
    pink-noise padding around every network input.
    """

    sr: int = 44100
    window: int = 2048
    hop: int = 1024
    n_mels: int = 80
    fmin: float = 80.0
    fmax: float = 16000.0
    lag_seconds: float = 14.0
    pool_single: int = 6
    pool_pre: int = 2
    pool_post: int = 3
    stacking: int = 2
    quantile: float = 0.1
    final_pad: int = 50
    floor_db: float = -70.0

    def __post_init__(self):
        if self.sr <= 0 or self.window <= 0 or self.hop <= 0:
            raise ValueError("sr, window and hop must be positive")
        if self.pool_single != self.pool_pre * self.pool_post:
            raise ValueError(
                "pool_single must equal pool_pre * pool_post so both pooling "
                "strategies land on the same final frame rate"
            )
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must lie in (0, 1)")

    @property
    def base_hop_seconds(self) -> float:
        return self.hop / self.sr

    @property
    def lag_frames(self) -> int:
        """Lag span in un-pooled frames."""
        return round(self.lag_seconds * self.sr / self.hop)

    @property
    def frame_rate(self) -> float:
        """Frames per second of fully pooled matrices and network inputs."""
        return self.sr / (self.hop * self.pool_single)

    @property
    def floor_amplitude(self) -> float:
        """Linear-magnitude equivalent of the dB floor."""
        return 10.0 ** (self.floor_db / 20.0)


@dataclass(frozen=True)
class RunConfig:
    """One experiment: pipeline constants plus input/training choices."""

    params: PipelineParams = field(default_factory=PipelineParams)
    pooling: str = "pool6"
    include_mls: bool = True
    sslm_inputs: tuple = ()
    epochs: int = 100
    seed: int = 0
    split_seed: int = 0
    threshold: float = DEFAULT_MLS_THRESHOLD

    def __post_init__(self):
        if self.pooling not in POOLINGS:
            raise ValueError(f"unknown pooling strategy {self.pooling!r}")
        for name in self.sslm_inputs:
            if name not in SSLM_VARIANTS:
                raise ValueError(f"unknown SSLM variant {name!r}")
        if not self.include_mls and not self.sslm_inputs:
            raise ValueError("at least one input matrix must be selected")

    def input_names(self) -> list:
        """Selected input matrices in canonical stacking order (MLS first)."""
        names = ["mls"] if self.include_mls else []
        names.extend(v for v in SSLM_VARIANTS if v in self.sslm_inputs)
        return names

    def canonical_lines(self) -> list:
        """Deterministic ``key = value`` rendering of the full configuration."""
        items = {}
        for f in fields(self.params):
            items[f.name] = getattr(self.params, f.name)
        items["pooling"] = self.pooling
        items["include_mls"] = self.include_mls
        items["sslm_inputs"] = ",".join(self.input_names()[1:] if self.include_mls
                                        else self.input_names())
        items["epochs"] = self.epochs
        items["seed"] = self.seed
        items["split_seed"] = self.split_seed
        items["threshold"] = self.threshold
        return [f"{k} = {_render(v)}" for k, v in sorted(items.items())]

    def pipeline_hash(self) -> str:
        """Hex digest identifying everything that shapes the network input.

        Training-only knobs (epochs, seeds, threshold) are excluded: features
        extracted once remain valid across training reruns.
        """
        skip = {"epochs", "seed", "split_seed", "threshold"}
        lines = [ln for ln in self.canonical_lines()
                 if ln.split(" = ")[0] not in skip]
        return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.canonical_lines()) + "\n")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        raw = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise FormatError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (part.strip() for part in line.split("=", 1))
                raw[key] = value
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: dict) -> "RunConfig":
        pp_kwargs = {}
        for f in fields(PipelineParams):
            if f.name in raw:
                pp_kwargs[f.name] = _parse(raw[f.name], f.type)
        params = PipelineParams(**pp_kwargs)
        kwargs = {"params": params}
        if "pooling" in raw:
            kwargs["pooling"] = raw["pooling"]
        if "include_mls" in raw:
            kwargs["include_mls"] = _parse(raw["include_mls"], "bool")
        if "sslm_inputs" in raw:
            value = raw["sslm_inputs"].strip()
            kwargs["sslm_inputs"] = tuple(s.strip() for s in value.split(",") if s.strip())
        for key in ("epochs", "seed", "split_seed"):
            if key in raw:
                kwargs[key] = _parse(raw[key], "int")
        if "threshold" in raw:
            kwargs["threshold"] = _parse(raw["threshold"], "float")
        return cls(**kwargs)

    def with_params(self, **changes) -> "RunConfig":
        return replace(self, params=replace(self.params, **changes))


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str, type_name: str):
    if type_name == "bool":
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise FormatError(f"cannot parse boolean from {text!r}")
    if type_name == "int":
        return int(text)
    if type_name == "float":
        return float(text)
    return text


def path_from_env(cli_value, env_name: str, default=None):
    """Resolve a path argument: explicit CLI value, then environment, then default."""
    if cli_value is not None:
        return cli_value
    return os.environ.get(env_name, default)
