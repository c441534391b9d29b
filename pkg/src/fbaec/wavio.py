"""Mono WAV I/O: PCM 16-bit and IEEE float 32-bit at 16/48 kHz.

File samples are converted to double precision on read; writing quantizes
per the requested format.
"""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

from .spectral import AudioBuffer, SUPPORTED_RATES


def read_wav(path) -> AudioBuffer:
    rate, data = wavfile.read(path)
    if rate not in SUPPORTED_RATES:
        raise ValueError(f"unsupported sample rate {rate} in {path}")
    if data.ndim != 1:
        raise ValueError(f"{path} is not mono")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype}")
    return AudioBuffer(samples, int(rate))


def write_wav(path, buf: AudioBuffer, fmt: str = "float32"):
    if fmt == "float32":
        wavfile.write(path, buf.sample_rate, buf.samples.astype(np.float32))
    elif fmt == "pcm16":
        clipped = np.clip(buf.samples, -1.0, 32767.0 / 32768.0)
        wavfile.write(path, buf.sample_rate,
                      np.round(clipped * 32768.0).astype(np.int16))
    else:
        raise ValueError(f"unknown WAV format {fmt!r}")
