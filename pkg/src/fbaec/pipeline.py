"""End-to-end streaming orchestration: high-pass -> delay compensation ->
band-limited analysis -> echo-cancellation mask -> postfilter mask ->
optional bandwidth extension -> overlap-add synthesis.

Output samples for the region covered by frame l are released one frame
shift after that frame's input completes, so the algorithmic delay is
frame_len + frame_shift samples (39.75 ms at 48 kHz). Chunked and whole-file
processing are bit-identical because all state advances strictly per frame.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .spectral import AudioBuffer, FrameGrid, HighpassFilter, SpectralFrame, \
    sqrt_hann_window
from .ddc import DdcConfig, DelayState, ReferenceRingbuffer, \
    estimate_instantaneous_delay, update_active_delay
from .masking import MaskEstimator, apply_mask, aec_estimate, pf_estimate
from .bwe import BweWeights, extend_frame
from .evalkit import MaskTrace


@dataclass
class PipelineConfig:
    sample_rate: int = 48000
    grid: FrameGrid | None = None
    ddc: DdcConfig | None = None
    aec_estimator: MaskEstimator | None = None
    pf_estimator: MaskEstimator | None = None
    bwe_weights: BweWeights | None = None
    emit_mask_trace: bool = False

    def __post_init__(self):
        if self.grid is None:
            self.grid = FrameGrid.for_rate(self.sample_rate)
        if self.grid.sample_rate != self.sample_rate:
            raise ValueError("grid sample rate does not match pipeline")
        if self.ddc is not None and self.ddc.sample_rate != self.sample_rate:
            raise ValueError("DDC sample rate does not match pipeline")
        if self.bwe_weights is not None and self.sample_rate != 48000:
            raise ValueError("bandwidth extension requires 48 kHz")

    def digest(self) -> str:
        def describe(est):
            if est is None:
                return None
            d = {"kind": type(est).__name__}
            d.update({k: repr(v) for k, v in vars(est).items()
                      if not k.startswith("_") and np.isscalar(v)})
            return d

        doc = {
            "sample_rate": self.sample_rate,
            "grid": [self.grid.frame_len, self.grid.dft_size],
            "ddc": None if self.ddc is None else vars(self.ddc),
            "aec": describe(self.aec_estimator),
            "pf": describe(self.pf_estimator),
            "bwe_theta": None if self.bwe_weights is None else self.bwe_weights.theta,
        }
        blob = json.dumps(doc, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def latency_report(grid: FrameGrid) -> dict:
    """Total algorithmic delay: one frame of buffering plus one frame shift."""
    samples = grid.frame_len + grid.frame_shift
    return {
        "algorithmic_delay_samples": samples,
        "algorithmic_delay_ms": 1000.0 * samples / grid.sample_rate,
    }


class _StreamBuf:
    """Append-only sample stream addressed by absolute index, with trimming."""

    def __init__(self):
        self.data = np.zeros(0, dtype=np.float64)
        self.offset = 0

    @property
    def end(self) -> int:
        return self.offset + len(self.data)

    def append(self, x):
        self.data = np.concatenate([self.data, np.asarray(x, dtype=np.float64)])

    def add_at(self, start: int, seg):
        need = start + len(seg) - self.end
        if need > 0:
            self.data = np.concatenate([self.data, np.zeros(need)])
        i = start - self.offset
        if i < 0:
            raise ValueError("write before trimmed region")
        self.data[i:i + len(seg)] += seg

    def window(self, lo: int, hi: int) -> np.ndarray:
        if lo < self.offset:
            raise ValueError("read before trimmed region")
        out = np.zeros(hi - lo, dtype=np.float64)
        avail = min(hi, self.end) - lo
        if avail > 0:
            out[:avail] = self.data[lo - self.offset: lo - self.offset + avail]
        return out

    def drop_before(self, abs_idx: int):
        cut = abs_idx - self.offset
        if cut > 0:
            self.data = self.data[cut:]
            self.offset = abs_idx


class StreamSession:
    """Single-stream processing state; frames advance strictly in order."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        grid = cfg.grid
        self.grid = grid
        self.L = grid.frame_len
        self.hop = grid.frame_shift
        self.K = grid.dft_size
        self.win = sqrt_hann_window(self.L)

        self.mic_hpf = HighpassFilter(cfg.sample_rate)
        self.ref_hpf = HighpassFilter(cfg.sample_rate)
        self.mic_hp = _StreamBuf()
        self.aligned_hp = _StreamBuf()
        self.aligned_hp_end = 0
        self.ola = _StreamBuf()

        if cfg.ddc is not None:
            cap = cfg.ddc.max_lag + cfg.ddc.frame_len + self.L
            self.delay_state = DelayState.fresh(cfg.ddc)
            self.mic_raw = _StreamBuf()
            self._ddc_keep = cfg.ddc.frame_len + cfg.ddc.frame_shift
        else:
            cap = self.L + 8 * self.hop
            self.delay_state = None
            self.mic_raw = None
            self._ddc_keep = 0
        self.ring = ReferenceRingbuffer(cap)

        self.total_in = 0        # includes flush padding
        self.real_total = 0      # genuine input samples
        self.frames_done = 0
        self.ddc_frames_done = 0
        self.emitted = 0
        self._flushed = False
        self._slice = 4 * self.hop

        self.aec_masks: list = []
        self.pf_masks: list = []
        self.delay_trace: list = []

        for est in (cfg.aec_estimator, cfg.pf_estimator):
            if est is not None:
                est.reset()

    # -- ingest ------------------------------------------------------------

    def push(self, mic_chunk, far_chunk) -> np.ndarray:
        """Feed equal-length mic/far-end chunks; returns released output."""
        mic_chunk = np.asarray(mic_chunk, dtype=np.float64)
        far_chunk = np.asarray(far_chunk, dtype=np.float64)
        if len(mic_chunk) != len(far_chunk):
            raise ValueError("mic and far-end chunks must have equal length")
        if self._flushed:
            raise RuntimeError("session already flushed")
        self.real_total += len(mic_chunk)
        return self._ingest(mic_chunk, far_chunk)

    def flush(self) -> np.ndarray:
        """Pad with zeros until every genuine input sample is covered and
        released; total session output length equals total genuine input."""
        self._flushed = True
        target = self.real_total
        parts = []
        zeros = np.zeros(self.hop)
        while self.emitted < target:
            parts.append(self._ingest(zeros, zeros))
        out = np.concatenate(parts) if parts else np.zeros(0)
        excess = self.emitted - target
        if excess > 0:
            out = out[:len(out) - excess]
            self.emitted = target
        return out

    def _ingest(self, mic_chunk, far_chunk) -> np.ndarray:
        released = []
        pos = 0
        n = len(mic_chunk)
        while pos < n or pos == 0:
            hi = min(pos + self._slice, n)
            mic_part = mic_chunk[pos:hi]
            far_part = far_chunk[pos:hi]
            self.mic_hp.append(self.mic_hpf.process(mic_part))
            if self.mic_raw is not None:
                self.mic_raw.append(mic_part)
            self.ring.write(far_part)
            self.total_in += hi - pos
            self._process_ready_frames()
            released.append(self._release())
            pos = hi
            if n == 0:
                break
        return np.concatenate(released) if released else np.zeros(0)

    # -- frame machinery ---------------------------------------------------

    def _process_ready_frames(self):
        while self.frames_done * self.hop + self.L <= self.total_in:
            self._process_frame(self.frames_done)

    def _run_ddc(self, frame_end: int):
        cfg = self.cfg.ddc
        while (self.ddc_frames_done * cfg.frame_shift + cfg.frame_len
               + cfg.frame_shift) <= frame_end:
            end = self.ddc_frames_done * cfg.frame_shift + cfg.frame_len
            mic_win = self.mic_raw.window(end - cfg.frame_len, end)
            ref_win = self.ring.window(end - cfg.frame_len, end)
            self.delay_state, tau_inst = estimate_instantaneous_delay(
                self.delay_state, mic_win, ref_win, cfg)
            update_active_delay(self.delay_state, cfg)
            self.delay_trace.append({
                "ddc_frame": self.ddc_frames_done,
                "input_samples": end,
                "tau_inst": tau_inst,
                "tau_active": self.delay_state.tau_active,
            })
            self.ddc_frames_done += 1
            self.mic_raw.drop_before(max(0, end - self._ddc_keep))

    def _process_frame(self, ell: int):
        start = ell * self.hop
        end = start + self.L
        if self.cfg.ddc is not None:
            self._run_ddc(end)
            tau = self.delay_state.tau_active
        else:
            tau = 0

        # extend the aligned reference stream to cover this frame; the active
        # delay only affects newly generated samples
        if self.aligned_hp_end < end:
            raw = self.ring.read_aligned(tau, end - self.aligned_hp_end)
            self.aligned_hp.append(self.ref_hpf.process(raw))
            self.aligned_hp_end = end

        wb = self.grid.wb_cut_bin
        y_bins = np.fft.rfft(self.mic_hp.window(start, end) * self.win, n=self.K)
        x_bins = np.fft.rfft(self.aligned_hp.window(start, end) * self.win, n=self.K)
        y_bins[wb + 1:] = 0.0
        x_bins[wb + 1:] = 0.0
        y_frame = SpectralFrame(y_bins, ell, self.grid)
        x_frame = SpectralFrame(x_bins, ell, self.grid)

        aec_mask = None
        if self.cfg.aec_estimator is not None:
            aec_mask = aec_estimate(self.cfg.aec_estimator, y_frame, x_frame)
            residual = apply_mask(y_frame, aec_mask)
        else:
            residual = y_frame

        pf_mask = None
        if self.cfg.pf_estimator is not None:
            pf_mask = pf_estimate(self.cfg.pf_estimator, residual, aec_mask)
            enhanced = apply_mask(residual, pf_mask)
        else:
            enhanced = residual

        if self.cfg.bwe_weights is not None:
            enhanced = extend_frame(self.cfg.bwe_weights, enhanced)

        if self.cfg.emit_mask_trace:
            self.aec_masks.append(None if aec_mask is None else aec_mask.values)
            self.pf_masks.append(None if pf_mask is None else pf_mask.values)

        seg = np.fft.irfft(enhanced.bins, n=self.K)[:self.L] * self.win
        self.ola.add_at(start, seg)
        self.frames_done += 1

        keep_from = max(0, (self.frames_done - 1) * self.hop)
        self.mic_hp.drop_before(keep_from)
        self.aligned_hp.drop_before(keep_from)

    def _release(self) -> np.ndarray:
        avail = max(0, (self.frames_done - 1) * self.hop)
        if avail <= self.emitted:
            return np.zeros(0)
        out = self.ola.window(self.emitted, avail)
        self.ola.drop_before(avail)
        self.emitted = avail
        return out

    # -- results -----------------------------------------------------------

    def mask_trace(self) -> MaskTrace | None:
        if not self.cfg.emit_mask_trace:
            return None

        def stack(masks):
            if not masks or masks[0] is None:
                return None
            return np.stack(masks)

        return MaskTrace(aec=stack(self.aec_masks), pf=stack(self.pf_masks))


@dataclass
class ProcessResult:
    output: AudioBuffer
    mask_trace: MaskTrace | None
    delay_trace: list
    report: dict


def process_stream(cfg: PipelineConfig, mic: AudioBuffer,
                   farend: AudioBuffer) -> ProcessResult:
    """Whole-file processing: equivalent to streaming the file through a
    session in one push plus a flush. Output length equals input length."""
    if mic.sample_rate != farend.sample_rate:
        raise ValueError("mic and far-end sample rates differ")
    if mic.sample_rate != cfg.sample_rate:
        raise ValueError("input sample rate does not match pipeline config")
    n = min(len(mic), len(farend))
    if abs(len(mic) - len(farend)) > 0:
        warnings.warn(
            f"mic/far-end length mismatch; processing first {n} samples",
            stacklevel=2,
        )
    session = StreamSession(cfg)
    head = session.push(mic.samples[:n], farend.samples[:n])
    tail = session.flush()
    out = np.concatenate([head, tail])
    report = latency_report(cfg.grid)
    report.update({
        "frames": session.frames_done,
        "samples": n,
        "sample_rate": cfg.sample_rate,
        "config_digest": cfg.digest(),
    })
    return ProcessResult(
        output=AudioBuffer(out, cfg.sample_rate),
        mask_trace=session.mask_trace(),
        delay_trace=session.delay_trace,
        report=report,
    )
