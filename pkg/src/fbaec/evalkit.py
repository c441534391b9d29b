"""Seedable synthetic scenario generation (echo path, delay, SER/SNR mixing,
clipping nonlinearity) and component-based black-box metrics computed by
shadow-processing isolated components through a recorded mask trace.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .spectral import AudioBuffer, FrameGrid, highpass_50hz, stft_analyze, \
    stft_synthesize, zero_upper_band_array
from .masking import compress_mask_values

ERLE_CAP_DB = 100.0


@dataclass
class ScenarioSpec:
    """Seedable description of one synthetic test condition."""

    seed: int
    ser_db: float = 0.0
    snr_db: float = 20.0
    delay_ms: float = 100.0
    echo_fir_len: int = 2048
    echo_decay: float = 0.0      # 0 -> default 60 dB amplitude decay per 100 ms
    clip_level: float | None = 0.8
    duration_s: float = 4.0
    sample_rate: int = 48000

    def __post_init__(self):
        if not -10.0 <= self.ser_db <= 10.0:
            raise ValueError("ser_db must lie in [-10, 10]")
        if not 0.0 <= self.snr_db <= 40.0:
            raise ValueError("snr_db must lie in [0, 40]")
        if not 0.0 <= self.delay_ms <= 500.0:
            raise ValueError("delay_ms must lie in [0, 500]")
        if self.echo_fir_len < 1:
            raise ValueError("echo_fir_len must be >= 1")
        if self.clip_level is not None and not 0.0 < self.clip_level <= 1.0:
            raise ValueError("clip_level must lie in (0, 1]")
        if self.echo_decay == 0.0:
            self.echo_decay = 10.0 ** (-3.0 / (0.1 * self.sample_rate))

    @property
    def delay_samples(self) -> int:
        return round(self.delay_ms * self.sample_rate / 1000.0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScenarioComponents:
    """Sample-exact decomposition mic = nearend + echo + noise."""

    mic: AudioBuffer
    nearend: AudioBuffer
    echo: AudioBuffer
    noise: AudioBuffer
    farend: AudioBuffer
    true_delay: int


@dataclass
class MaskTrace:
    """Per-frame masks recorded from a pipeline run (None = stage disabled)."""

    aec: np.ndarray | None
    pf: np.ndarray | None

    @property
    def num_frames(self) -> int:
        for m in (self.aec, self.pf):
            if m is not None:
                return len(m)
        return 0


def make_source(kind: str, seed: int, duration_s: float, sample_rate: int,
                rms: float = 0.1) -> AudioBuffer:
    """Deterministic synthetic source material.

    Kinds: ``white`` noise, band-limited ``lowband`` (100 Hz..2.5 kHz) and
    ``highband`` (2.5..7.5 kHz) noise, and ``speechlike`` (lowband noise with
    syllabic 4 Hz amplitude modulation).
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    x = rng.standard_normal(n)
    if kind == "white":
        pass
    elif kind in ("lowband", "highband", "speechlike"):
        lo, hi = (100.0, 2500.0) if kind != "highband" else (2500.0, 7500.0)
        spec = np.fft.rfft(x)
        freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
        spec[(freqs < lo) | (freqs > hi)] = 0.0
        x = np.fft.irfft(spec, n=n)
        if kind == "speechlike":
            t = np.arange(n) / sample_rate
            x *= 0.55 - 0.45 * np.cos(2.0 * np.pi * 4.0 * t)
    else:
        raise ValueError(f"unknown source kind {kind!r}")
    scale = np.sqrt(np.mean(x ** 2))
    if scale > 0:
        x *= rms / scale
    return AudioBuffer(x, sample_rate)


def _scaled_to_ratio(reference, target, ratio_db: float) -> np.ndarray:
    """Scale ``target`` so 10*log10(E_ref/E_target) equals ratio_db."""
    e_ref = np.sum(reference ** 2)
    e_tgt = np.sum(target ** 2)
    if e_tgt == 0:
        raise ValueError("cannot scale an all-zero component")
    return target * np.sqrt(e_ref / (e_tgt * 10.0 ** (ratio_db / 10.0)))


def generate_scenario(spec: ScenarioSpec, nearend_src: AudioBuffer,
                      farend_src: AudioBuffer,
                      noise_src: AudioBuffer) -> ScenarioComponents:
    """Mix a seeded synthetic scene.

    The echo is the (optionally clipped) far-end convolved with a seeded
    exponentially decaying random FIR whose direct-path tap is fixed at 1,
    delayed by the true delay and scaled to the requested SER; noise is
    scaled to the requested SNR; mic = nearend + echo + noise exactly.
    """
    fs = spec.sample_rate
    n = int(round(spec.duration_s * fs))
    for name, src in (("nearend", nearend_src), ("farend", farend_src),
                      ("noise", noise_src)):
        if src.sample_rate != fs:
            raise ValueError(f"{name} source sample rate mismatch")
        if len(src) < n:
            raise ValueError(f"{name} source shorter than duration")
    rng = np.random.default_rng(spec.seed)

    s = nearend_src.samples[:n].copy()
    x_far = farend_src.samples[:n].copy()
    noise = noise_src.samples[:n].copy()

    x_clip = x_far
    if spec.clip_level is not None:
        x_clip = np.clip(x_far, -spec.clip_level, spec.clip_level)

    fir = rng.standard_normal(spec.echo_fir_len)
    fir *= 0.5 * spec.echo_decay ** np.arange(spec.echo_fir_len)
    fir[0] = 1.0  # normalized dominant direct path
    echo = np.convolve(x_clip, fir)[:n]
    d = spec.delay_samples
    if d:
        echo = np.concatenate([np.zeros(d), echo[:n - d]])
    echo = _scaled_to_ratio(s, echo, spec.ser_db)
    noise = _scaled_to_ratio(s, noise, spec.snr_db)
    mic = s + echo + noise

    return ScenarioComponents(
        mic=AudioBuffer(mic, fs),
        nearend=AudioBuffer(s, fs),
        echo=AudioBuffer(echo, fs),
        noise=AudioBuffer(noise, fs),
        farend=AudioBuffer(x_far, fs),
        true_delay=d,
    )


def shadow_process(component: AudioBuffer, trace: MaskTrace,
                   grid: FrameGrid, num_frames: int | None = None) -> AudioBuffer:
    """Pass one isolated component through high-pass, band-limited analysis,
    the recorded masks, and synthesis. Linear given a fixed trace."""
    samples = component.samples
    if num_frames is None:
        num_frames = trace.num_frames
    need = (num_frames - 1) * grid.frame_shift + grid.frame_len
    if len(samples) < need:
        # pad before filtering so the high-pass tail rings into the padding
        # exactly as it does in a streaming run
        samples = np.concatenate([samples, np.zeros(need - len(samples))])
    samples = highpass_50hz(AudioBuffer(samples, grid.sample_rate)).samples
    frames = zero_upper_band_array(stft_analyze(samples, grid), grid)
    if len(frames) < num_frames:
        raise ValueError("component shorter than the recorded mask trace")
    frames = frames[:num_frames]
    wb = grid.wb_cut_bin + 1
    for stage in (trace.aec, trace.pf):
        if stage is None:
            continue
        if len(stage) != len(frames):
            raise ValueError("mask trace frame count mismatch")
        for ell in range(len(frames)):
            frames[ell, :wb] *= compress_mask_values(stage[ell])
    return AudioBuffer(stft_synthesize(frames, grid), grid.sample_rate)


def _interior(samples: np.ndarray, grid: FrameGrid) -> np.ndarray:
    """OLA-valid region: drop the first and last frame spans."""
    L = grid.frame_len
    if len(samples) <= 2 * L:
        raise ValueError("signal too short for an interior region")
    return samples[L:-L]


def _capped_ratio_db(num: float, den: float) -> float:
    if num <= 0.0:
        return 0.0
    if den <= num * 10.0 ** (-ERLE_CAP_DB / 10.0):
        return ERLE_CAP_DB
    return min(ERLE_CAP_DB, 10.0 * np.log10(num / den))


def _bandlimited(component: AudioBuffer, trace: MaskTrace,
                 grid: FrameGrid) -> np.ndarray:
    """The metric input domain: the component after high-pass and band-limited
    analysis/synthesis, but before any masking."""
    return shadow_process(component, MaskTrace(aec=None, pf=None), grid,
                          num_frames=trace.num_frames).samples


def erle_bb(components: ScenarioComponents, trace: MaskTrace,
            grid: FrameGrid, per_frame: bool = False):
    """Black-box echo return loss enhancement in dB (capped at 100).

    The echo component alone is shadow-processed through the recorded masks;
    the ratio of residual to original echo energy is taken on the OLA-valid
    interior. With ``per_frame`` a per-frame dB trace is returned as well.
    """
    d = _bandlimited(components.echo, trace, grid)
    d_res = shadow_process(components.echo, trace, grid).samples
    n = min(len(d), len(d_res))
    d_in = _interior(d[:n], grid)
    d_out = _interior(d_res[:n], grid)
    total = _capped_ratio_db(float(np.sum(d_in ** 2)), float(np.sum(d_out ** 2)))
    if not per_frame:
        return total
    hop = grid.frame_shift
    rows = []
    for start in range(0, len(d_in) - hop + 1, hop):
        rows.append(_capped_ratio_db(float(np.sum(d_in[start:start + hop] ** 2)),
                                     float(np.sum(d_out[start:start + hop] ** 2))))
    return total, np.array(rows)


def delta_snr_bb(components: ScenarioComponents, trace: MaskTrace,
                 grid: FrameGrid) -> float:
    """Output minus input SNR (dB), both from shadow-processed components."""
    s_in = _interior(_bandlimited(components.nearend, trace, grid), grid)
    n_in = _interior(_bandlimited(components.noise, trace, grid), grid)
    s_out = _interior(shadow_process(components.nearend, trace, grid).samples, grid)
    n_out = _interior(shadow_process(components.noise, trace, grid).samples, grid)
    snr_in = _capped_ratio_db(float(np.sum(s_in ** 2)), float(np.sum(n_in ** 2)))
    snr_out = _capped_ratio_db(float(np.sum(s_out ** 2)), float(np.sum(n_out ** 2)))
    return snr_out - snr_in


def write_report(path, spec: ScenarioSpec | None, metrics: dict,
                 config_digest: str, per_frame_erle=None,
                 per_frame_csv_path=None):
    """Emit the evaluation-run JSON document (plus optional per-frame CSV)."""
    doc = {
        "scenario": spec.to_dict() if spec is not None else None,
        "metrics": metrics,
        "config_digest": config_digest,
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    if per_frame_csv_path is not None and per_frame_erle is not None:
        with open(per_frame_csv_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["frame", "erle_db"])
            for i, v in enumerate(per_frame_erle):
                writer.writerow([i, f"{v:.6f}"])
