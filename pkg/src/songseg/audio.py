"""WAV ingestion and resampling.

Reads RIFF/WAVE files carrying 16-bit integer PCM or 32-bit float samples,
downmixes stereo to mono by channel mean, and resamples with linear
interpolation.  Higher-fidelity decoding and windowed-sinc resampling are
deliberately out of scope.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError


@dataclass
class AudioBuffer:
    """Mono sample sequence plus its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def read_wav(path) -> AudioBuffer:
    """Read a PCM WAV file into a mono :class:`AudioBuffer`.

    Supports 16-bit integer and 32-bit float encodings with 1 or 2
    channels.  16-bit samples are scaled by 1/32768; stereo is downmixed
    by the per-frame channel mean.

    Raises
    ------
    FormatError
        If the file is not a RIFF/WAVE container or uses an unsupported
        encoding.
    OSError
        If the declared data payload is truncated.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body_start + 16 > len(data):
                raise FormatError(f"{path}: malformed fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", data, body_start)
        elif chunk_id == b"data":
            if body_start + chunk_size > len(data):
                raise OSError(f"{path}: data chunk truncated "
                              f"({len(data) - body_start} of {chunk_size} bytes)")
            payload = data[body_start : body_start + chunk_size]
        # chunks are word-aligned
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None or payload is None:
        raise FormatError(f"{path}: missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels not in (1, 2):
        raise FormatError(f"{path}: unsupported channel count {channels}")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise FormatError(
            f"{path}: unsupported encoding (format {audio_format}, {bits}-bit)"
        )

    if channels == 2:
        if samples.size % 2:
            raise OSError(f"{path}: stereo payload has an odd sample count")
        samples = samples.reshape(-1, 2).mean(axis=1)

    return AudioBuffer(samples=samples, sample_rate=sample_rate)


def write_wav(path, audio: AudioBuffer, bits: int = 16) -> None:
    """Write a mono AudioBuffer as 16-bit PCM or 32-bit float WAV."""
    if bits == 16:
        fmt_code, block = 1, 2
        clipped = np.clip(np.round(audio.samples * 32768.0), -32768, 32767)
        payload = clipped.astype("<i2").tobytes()
    elif bits == 32:
        fmt_code, block = 3, 4
        payload = audio.samples.astype("<f4").tobytes()
    else:
        raise ValueError("bits must be 16 or 32")

    sr = audio.sample_rate
    header = b"".join([
        b"RIFF", struct.pack("<I", 36 + len(payload)), b"WAVE",
        b"fmt ", struct.pack("<IHHIIHH", 16, fmt_code, 1, sr, sr * block, block, bits),
        b"data", struct.pack("<I", len(payload)),
    ])
    with open(path, "wb") as fh:
        fh.write(header + payload)


def resample(audio: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Resample by linear interpolation between source samples.

    Output duration matches the input within one sample period; positions
    past the last source sample clamp to it.  Equal rates return an exact
    copy.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == audio.sample_rate:
        return AudioBuffer(audio.samples.copy(), audio.sample_rate)

    n_in = audio.samples.size
    n_out = int(round(n_in * target_rate / audio.sample_rate))
    positions = np.arange(n_out) * (audio.sample_rate / target_rate)
    samples = np.interp(positions, np.arange(n_in), audio.samples)
    return AudioBuffer(samples=samples, sample_rate=target_rate)
