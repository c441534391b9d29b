"""Dynamic delay compensation: smoothed GCC-PHAT over long frames, a
stability-gated active-delay rule with a 200 ms causality back-off, and a
ringbuffer that realigns the far-end reference stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PHAT_EPS = 1e-12


@dataclass
class DdcConfig:
    """Long-frame delay estimator configuration.

    Defaults at 48 kHz: 50880-sample frames (1.06 s) with a 25% shift,
    smoothing 0.7, band restriction 200 Hz..8 kHz, update after 2 stable
    frames, 200 ms back-off, +-1 ms stability tolerance.
    """

    sample_rate: int = 48000
    frame_len: int = 0
    frame_shift: int = 0
    alpha: float = 0.7
    band_lo_hz: float = 200.0
    band_hi_hz: float = 8000.0
    stability_frames: int = 2
    backoff_ms: float = 200.0
    stability_tol: int = 0
    max_delay_s: float = 1.0

    def __post_init__(self):
        if self.frame_len == 0:
            self.frame_len = round(1.06 * self.sample_rate)
        if self.frame_shift == 0:
            self.frame_shift = self.frame_len // 4
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if not 0.0 < self.band_lo_hz < self.band_hi_hz <= self.sample_rate / 2:
            raise ValueError("band limits must satisfy 0 < lo < hi <= Nyquist")
        if self.backoff_ms < 0:
            raise ValueError("backoff must be >= 0")
        if self.stability_tol == 0:
            self.stability_tol = round(0.001 * self.sample_rate)

    @property
    def backoff_samples(self) -> int:
        return round(self.backoff_ms * self.sample_rate / 1000.0)

    @property
    def max_lag(self) -> int:
        return min(round(self.max_delay_s * self.sample_rate), self.frame_len - 1)

    def band_mask(self) -> np.ndarray:
        """Boolean mask of one-sided DFT bins inside [band_lo, band_hi]."""
        freqs = np.arange(self.frame_len // 2 + 1) * (self.sample_rate / self.frame_len)
        return (freqs >= self.band_lo_hz) & (freqs <= self.band_hi_hz)


@dataclass
class DelayState:
    """Smoothed cross-power accumulator plus the active-delay state machine."""

    phi: np.ndarray
    tau_inst: int = 0
    tau_active: int = 0
    stable_run: int = 0
    frame_index: int = -1
    _tau_prev_inst: int | None = None
    _tau_basis: int | None = None

    @classmethod
    def fresh(cls, cfg: DdcConfig) -> "DelayState":
        return cls(phi=np.zeros(cfg.frame_len // 2 + 1, dtype=np.complex128))


def estimate_instantaneous_delay(state: DelayState, mic_frame, ref_frame,
                                 cfg: DdcConfig):
    """One GCC-PHAT update: smooth the band-limited cross-power spectrum,
    phase-normalize, and pick the causal-lag correlation maximum.

    Returns (state, tau_inst). Bins outside the restricted band stay zero;
    bins whose smoothed magnitude is below 1e-12 contribute nothing.
    """
    mic_frame = np.asarray(mic_frame, dtype=np.float64)
    ref_frame = np.asarray(ref_frame, dtype=np.float64)
    if len(mic_frame) != cfg.frame_len or len(ref_frame) != cfg.frame_len:
        raise ValueError("DDC frames must have length frame_len")

    band = cfg.band_mask()
    cross = np.fft.rfft(mic_frame) * np.conj(np.fft.rfft(ref_frame))
    phi = cfg.alpha * state.phi
    phi[band] += (1.0 - cfg.alpha) * cross[band]
    phi[~band] = 0.0

    mag = np.abs(phi)
    weight = np.zeros_like(phi)
    nz = mag > PHAT_EPS
    weight[nz] = phi[nz] / mag[nz]
    corr = np.fft.irfft(weight, n=cfg.frame_len)
    tau = int(np.argmax(corr[: cfg.max_lag + 1]))

    state.phi = phi
    state.tau_inst = tau
    state.frame_index += 1
    return state, tau


def update_active_delay(state: DelayState, cfg: DdcConfig) -> DelayState:
    """Advance the stability gate and, on a newly stabilized estimate,
    move the active delay to tau_inst minus the back-off (floored at 0)."""
    tol = cfg.stability_tol
    if (state._tau_prev_inst is not None
            and abs(state.tau_inst - state._tau_prev_inst) <= tol):
        state.stable_run += 1
    else:
        state.stable_run = 1
    state._tau_prev_inst = state.tau_inst

    if state.stable_run >= cfg.stability_frames:
        if state._tau_basis is None or abs(state.tau_inst - state._tau_basis) > tol:
            state._tau_basis = state.tau_inst
            state.tau_active = max(0, state.tau_inst - cfg.backoff_samples)
    return state


class ReferenceRingbuffer:
    """Single-writer/single-reader delay line over the raw far-end stream.

    The reader walks an output timeline; ``read_aligned(tau, n)`` returns the
    next ``n`` timeline samples delayed by ``tau`` (zeros before stream
    start). Reads must stay within the retained history.
    """

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._buf = np.zeros(capacity, dtype=np.float64)
        self.total_written = 0
        self.read_pos = 0

    def write(self, samples):
        samples = np.asarray(samples, dtype=np.float64)
        n = len(samples)
        if n >= self.capacity:
            # keep the index -> slot mapping phase-consistent
            tail = samples[n - self.capacity:]
            start = (self.total_written + n - self.capacity) % self.capacity
            first = self.capacity - start
            self._buf[start:] = tail[:first]
            self._buf[:start] = tail[first:]
        else:
            pos = self.total_written % self.capacity
            first = min(n, self.capacity - pos)
            self._buf[pos:pos + first] = samples[:first]
            if first < n:
                self._buf[: n - first] = samples[first:]
        self.total_written += n

    def history(self, n: int) -> np.ndarray:
        """Last ``n`` written samples, zero-padded at the front if short."""
        if n > self.capacity:
            raise ValueError("requested history exceeds capacity")
        avail = min(n, self.total_written)
        out = np.zeros(n, dtype=np.float64)
        if avail:
            start = (self.total_written - avail) % self.capacity
            idx = (start + np.arange(avail)) % self.capacity
            out[n - avail:] = self._buf[idx]
        return out

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Samples at absolute stream indices [lo, hi); zeros before start."""
        if hi > self.total_written:
            raise ValueError("window ahead of written data")
        out = np.zeros(hi - lo, dtype=np.float64)
        start = max(lo, 0)
        if start < hi:
            oldest = self.total_written - self.capacity
            if start < oldest:
                raise ValueError("window precedes retained history")
            idx = (start + np.arange(hi - start)) % self.capacity
            out[start - lo:] = self._buf[idx]
        return out

    def read_aligned(self, tau: int, n_samples: int) -> np.ndarray:
        if tau < 0:
            raise ValueError("delay must be non-negative")
        if tau > self.capacity:
            raise ValueError(f"delay {tau} exceeds ringbuffer capacity {self.capacity}")
        out = np.zeros(n_samples, dtype=np.float64)
        src_lo = self.read_pos - tau
        src_hi = src_lo + n_samples
        if src_hi > self.total_written:
            raise ValueError("aligned read ahead of written data")
        lo = max(src_lo, 0)
        if lo < src_hi:
            oldest = self.total_written - self.capacity
            if lo < oldest:
                raise ValueError("aligned read precedes retained history")
            idx = (lo + np.arange(src_hi - lo)) % self.capacity
            out[lo - src_lo:] = self._buf[idx]
        self.read_pos += n_samples
        return out


def align_reference(buf: ReferenceRingbuffer, tau: int, n_samples: int) -> np.ndarray:
    """Next ``n_samples`` of the far-end stream delayed by ``tau``."""
    return buf.read_aligned(tau, n_samples)
