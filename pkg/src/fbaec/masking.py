"""Complex-mask application with tanh amplitude compression, plus the
pluggable mask-estimator interface and the reference estimators (identity,
constant, oracle) used for end-to-end testing without a trained network.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import AudioBuffer, FrameGrid, SpectralFrame, highpass_50hz, \
    stft_analyze, zero_upper_band_array

ORACLE_RHO = 1.0 - 1e-6


@dataclass
class ComplexMask:
    """Per-bin complex mask over the wideband bin set (bins 0..wb_cut_bin)."""

    values: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("mask entries must be finite")


def compress_mask_values(values: np.ndarray) -> np.ndarray:
    """tanh(|M|) * M/|M| per bin; 0 where |M| = 0 (the two-sided limit)."""
    values = np.asarray(values, dtype=np.complex128)
    mag = np.abs(values)
    out = np.zeros_like(values)
    nz = mag > 0.0
    # tanh(|M|) < 1 holds mathematically but rounds to exactly 1.0 for
    # |M| >~ 19; cap the compressed magnitude a few ulps below 1 so the
    # masked output can never exceed the input even after product rounding
    scale = np.tanh(mag[nz]) / mag[nz]
    cap = (1.0 - 16.0 * np.finfo(np.float64).eps) / mag[nz]
    out[nz] = values[nz] * np.minimum(scale, cap)
    return out


def apply_mask_array(bins: np.ndarray, mask_values: np.ndarray,
                     wb_cut_bin: int) -> np.ndarray:
    """Apply a compressed mask to the wideband bins; upper bins pass through
    (they are zero for band-limited frames)."""
    if len(mask_values) != wb_cut_bin + 1:
        raise ValueError("mask length does not match wideband bin count")
    out = np.array(bins, dtype=np.complex128, copy=True)
    out[: wb_cut_bin + 1] *= compress_mask_values(mask_values)
    return out


def apply_mask(frame: SpectralFrame, mask: ComplexMask) -> SpectralFrame:
    """Gain-compressed complex masking of one wideband frame."""
    bins = apply_mask_array(frame.bins, mask.values, frame.grid.wb_cut_bin)
    return SpectralFrame(bins, frame.frame_index, frame.grid)


class MaskEstimator:
    """Stateful frame-in/mask-out transformer.

    ``estimate(primary, secondary)`` consumes one frame and advances internal
    state; for the echo-cancellation stage the secondary input is the aligned
    reference frame, for the postfilter stage it is the first-stage mask.
    Identical input sequences from a fresh state must produce identical masks.
    """

    def estimate(self, primary: SpectralFrame, secondary) -> ComplexMask:
        raise NotImplementedError

    def reset(self):
        pass


class IdentityEstimator(MaskEstimator):
    """Saturating real mask; after compression the stage is a passthrough."""

    def __init__(self, value: float = 50.0):
        self.value = value

    def estimate(self, primary, secondary) -> ComplexMask:
        n = primary.grid.wb_cut_bin + 1
        return ComplexMask(np.full(n, self.value, dtype=np.complex128),
                           primary.frame_index)


class ConstantEstimator(MaskEstimator):
    """Same complex mask value in every bin of every frame."""

    def __init__(self, value: complex):
        self.value = complex(value)

    def estimate(self, primary, secondary) -> ComplexMask:
        n = primary.grid.wb_cut_bin + 1
        return ComplexMask(np.full(n, self.value, dtype=np.complex128),
                           primary.frame_index)


class OracleEstimator(MaskEstimator):
    """Ideal complex-ratio mask computed from known target frames.

    For target bin T and input bin Z the mask is
    atanh(min(rho, |T|/|Z|)) * e^{j(arg T - arg Z)}, which maps through the
    tanh compression to the ideal ratio clipped to non-amplifying. Zero input
    bins get a zero mask.
    """

    def __init__(self, target_frames: np.ndarray, rho: float = ORACLE_RHO):
        self.targets = np.asarray(target_frames, dtype=np.complex128)
        self.rho = rho
        self._frame = 0

    def reset(self):
        self._frame = 0

    def estimate(self, primary, secondary) -> ComplexMask:
        n = primary.grid.wb_cut_bin + 1
        z = primary.bins[:n]
        if self._frame < len(self.targets):
            t = self.targets[self._frame][:n]
        else:
            t = np.zeros(n, dtype=np.complex128)
        self._frame += 1

        mask = np.zeros(n, dtype=np.complex128)
        nz = np.abs(z) > 0.0
        ratio = np.minimum(self.rho, np.abs(t[nz]) / np.abs(z[nz]))
        phase = np.angle(t[nz]) - np.angle(z[nz])
        mask[nz] = np.arctanh(ratio) * np.exp(1j * phase)
        return ComplexMask(mask, primary.frame_index)


def aec_estimate(est: MaskEstimator, mic_frame: SpectralFrame,
                 ref_frame: SpectralFrame) -> ComplexMask:
    """Run the first-stage estimator on (microphone, aligned reference)."""
    if ref_frame is not None and ref_frame.grid != mic_frame.grid:
        raise ValueError("frame grids do not match")
    return est.estimate(mic_frame, ref_frame)


def pf_estimate(est: MaskEstimator, residual_frame: SpectralFrame,
                aec_mask: ComplexMask) -> ComplexMask:
    """Run the postfilter estimator on the echo-reduced frame plus the
    first-stage mask as secondary input."""
    return est.estimate(residual_frame, aec_mask)


def target_frames_for(component: AudioBuffer, grid: FrameGrid,
                      pre_highpass: bool = True, pad_frames: int = 4) -> np.ndarray:
    """Oracle targets: the component sent through the same high-pass and
    band-limited analysis the pipeline applies to the microphone path.

    ``pad_frames`` extra zero-padded frames cover pipeline flushing.
    """
    samples = np.concatenate(
        [component.samples,
         np.zeros(pad_frames * grid.frame_shift + grid.frame_len)]
    )
    if pre_highpass:
        samples = highpass_50hz(
            AudioBuffer(samples, component.sample_rate)).samples
    return zero_upper_band_array(stft_analyze(samples, grid), grid)
