"""Signal-representation substrate: framing, sqrt-Hann DFT analysis/synthesis,
overlap-add, first-order high-pass pre-filter and upper-band zeroing.

All spectral math runs in double precision. The frame grid uses a periodic
(DFT-even) Hann window before the square root so the squared analysis windows
of 50%-overlapped frames sum to exactly 1 (perfect OLA reconstruction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

SUPPORTED_RATES = (16000, 48000)
WB_EDGE_HZ = 8000.0
HPF_CUTOFF_HZ = 50.0


@dataclass
class AudioBuffer:
    """Mono full-scale audio: float samples plus a sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioBuffer expects a 1-D sample array")
        if self.sample_rate not in SUPPORTED_RATES:
            raise ValueError(f"unsupported sample rate {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("AudioBuffer samples must be finite")

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class FrameGrid:
    """Analysis/synthesis frame geometry.

    frame_shift is pinned to frame_len/2; wb_cut_bin is the last bin at or
    below 8 kHz on the dft_size-point grid.
    """

    frame_len: int
    dft_size: int
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate not in SUPPORTED_RATES:
            raise ValueError(f"unsupported sample rate {self.sample_rate}")
        if self.frame_len % 2 != 0:
            raise ValueError("frame_len must be even (50% shift)")
        if self.dft_size < self.frame_len:
            raise ValueError("dft_size must be >= frame_len")

    @property
    def frame_shift(self) -> int:
        return self.frame_len // 2

    @property
    def wb_cut_bin(self) -> int:
        return round(WB_EDGE_HZ * self.dft_size / self.sample_rate)

    @property
    def num_onesided_bins(self) -> int:
        return self.dft_size // 2 + 1

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.dft_size

    @classmethod
    def for_rate(cls, sample_rate: int) -> "FrameGrid":
        """Default grid covering a 26.5 ms frame span at either rate."""
        if sample_rate == 48000:
            return cls(frame_len=1272, dft_size=1536, sample_rate=48000)
        if sample_rate == 16000:
            return cls(frame_len=424, dft_size=512, sample_rate=16000)
        raise ValueError(f"unsupported sample rate {sample_rate}")


@dataclass
class SpectralFrame:
    """One-sided complex DFT bins of one analysis frame."""

    bins: np.ndarray
    frame_index: int
    grid: FrameGrid

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        if len(self.bins) != self.grid.num_onesided_bins:
            raise ValueError(
                f"expected {self.grid.num_onesided_bins} bins, got {len(self.bins)}"
            )


def sqrt_hann_window(length: int) -> np.ndarray:
    """Square root of the periodic Hann window of the given length."""
    n = np.arange(length)
    hann = 0.5 * (1.0 - np.cos(2.0 * np.pi * n / length))
    return np.sqrt(hann)


def highpass_coeffs(sample_rate: int, cutoff_hz: float = HPF_CUTOFF_HZ):
    """Bilinear-transform one-pole/one-zero high-pass, unity gain at Nyquist.

    Returns (b0, b1, a1) for y[n] = b0*x[n] + b1*x[n-1] - a1*y[n-1].
    """
    if sample_rate not in SUPPORTED_RATES:
        raise ValueError(f"unsupported sample rate {sample_rate}")
    c = math.tan(math.pi * cutoff_hz / sample_rate)
    b0 = 1.0 / (1.0 + c)
    b1 = -b0
    a1 = (c - 1.0) / (c + 1.0)
    return b0, b1, a1


def highpass_response_db(sample_rate: int, freq_hz: float,
                         cutoff_hz: float = HPF_CUTOFF_HZ) -> float:
    """Magnitude response (dB) of the designed high-pass at one frequency."""
    b0, b1, a1 = highpass_coeffs(sample_rate, cutoff_hz)
    z = np.exp(1j * 2.0 * np.pi * freq_hz / sample_rate)
    h = (b0 + b1 / z) / (1.0 + a1 / z)
    return 20.0 * math.log10(abs(h))


class HighpassFilter:
    """Streaming 50 Hz high-pass; carries per-stream filter state."""

    def __init__(self, sample_rate: int, cutoff_hz: float = HPF_CUTOFF_HZ):
        self.b0, self.b1, self.a1 = highpass_coeffs(sample_rate, cutoff_hz)
        self.sample_rate = sample_rate
        self._x1 = 0.0
        self._y1 = 0.0

    def process(self, samples: np.ndarray) -> np.ndarray:
        y, self._x1, self._y1 = kernels.iir_first_order(
            samples, self.b0, self.b1, self.a1, self._x1, self._y1
        )
        return y

    def reset(self):
        self._x1 = 0.0
        self._y1 = 0.0


def highpass_50hz(signal: AudioBuffer) -> AudioBuffer:
    """Apply the 50 Hz first-order high-pass to a whole buffer."""
    filt = HighpassFilter(signal.sample_rate)
    return AudioBuffer(filt.process(signal.samples), signal.sample_rate)


def stft_analyze(samples: np.ndarray, grid: FrameGrid) -> np.ndarray:
    """Array-level analysis: windowed, zero-padded one-sided DFT frames.

    Returns shape (num_frames, num_onesided_bins). Frame l covers samples
    [l*shift, l*shift + frame_len).
    """
    samples = np.asarray(samples, dtype=np.float64)
    L, hop, K = grid.frame_len, grid.frame_shift, grid.dft_size
    if len(samples) < L:
        raise ValueError(f"signal shorter than one frame ({len(samples)} < {L})")
    n_frames = (len(samples) - L) // hop + 1
    idx = hop * np.arange(n_frames)[:, None] + np.arange(L)[None, :]
    frames = samples[idx] * sqrt_hann_window(L)[None, :]
    return np.fft.rfft(frames, n=K, axis=1)


def stft_synthesize(frames: np.ndarray, grid: FrameGrid) -> np.ndarray:
    """Array-level synthesis: IDFT, truncate to frame_len, window, overlap-add."""
    frames = np.asarray(frames, dtype=np.complex128)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise ValueError("empty frame sequence")
    L, hop, K = grid.frame_len, grid.frame_shift, grid.dft_size
    segs = np.fft.irfft(frames, n=K, axis=1)[:, :L]
    segs *= sqrt_hann_window(L)[None, :]
    return kernels.overlap_add(segs, hop)


def analyze(signal: AudioBuffer, grid: FrameGrid) -> list[SpectralFrame]:
    """Frame, window and transform a signal into SpectralFrames."""
    if signal.sample_rate != grid.sample_rate:
        raise ValueError("grid sample rate does not match signal")
    spec = stft_analyze(signal.samples, grid)
    return [SpectralFrame(bins, i, grid) for i, bins in enumerate(spec)]


def synthesize(frames: list[SpectralFrame], grid: FrameGrid) -> AudioBuffer:
    """Inverse transform and overlap-add consecutive frames."""
    if not frames:
        raise ValueError("empty frame sequence")
    for i, f in enumerate(frames):
        if f.grid != grid:
            raise ValueError("all frames must share the synthesis grid")
        if f.frame_index != frames[0].frame_index + i:
            raise ValueError("frames must be consecutive")
    spec = np.stack([f.bins for f in frames])
    return AudioBuffer(stft_synthesize(spec, grid), grid.sample_rate)


def zero_upper_band_array(frames: np.ndarray, grid: FrameGrid) -> np.ndarray:
    """Zero all bins above wb_cut_bin (rows are frames)."""
    out = np.array(frames, dtype=np.complex128, copy=True)
    out[..., grid.wb_cut_bin + 1:] = 0.0
    return out


def zero_upper_band(frame: SpectralFrame) -> SpectralFrame:
    """Project a frame onto the wideband bin set (upper band set to zero)."""
    bins = frame.bins.copy()
    bins[frame.grid.wb_cut_bin + 1:] = 0.0
    return SpectralFrame(bins, frame.frame_index, frame.grid)
