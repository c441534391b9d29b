"""Blind bandwidth extension: small feedforward estimation of upper-band
amplitudes from log wideband magnitudes, power-ratio attenuation, twice
replicated wideband phase, and spectral concatenation back to fullband.

Weight files use the binary "BWEW v1" format described in ``save_weights``.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .spectral import FrameGrid, SpectralFrame

LAYER_DIMS = (257, 256, 256, 256, 512)
DEFAULT_THETA = 0.1
LOG_FLOOR = 1e-10

WB_BINS = 257          # bins 0..256
UB_BINS = 512          # bins 257..768
MAGIC = b"BWEW"
VERSION = 1


class WeightFormatError(ValueError):
    """Raised for malformed, truncated or corrupt weight files."""


@dataclass
class BweWeights:
    """Layer matrices/biases of the extension network plus the attenuation
    parameter theta. Activations are fixed: ReLU x3, then linear + exp."""

    layers: list  # [(matrix out x in, bias out), ...] x 4
    theta: float = DEFAULT_THETA
    log_floor: float = LOG_FLOOR

    def __post_init__(self):
        if len(self.layers) != len(LAYER_DIMS) - 1:
            raise ValueError(f"expected {len(LAYER_DIMS) - 1} layers")
        fixed = []
        for i, (w, b) in enumerate(self.layers):
            w = np.asarray(w, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if w.shape != (LAYER_DIMS[i + 1], LAYER_DIMS[i]):
                raise ValueError(
                    f"layer {i} matrix must be {LAYER_DIMS[i + 1]}x{LAYER_DIMS[i]}, "
                    f"got {w.shape}"
                )
            if b.shape != (LAYER_DIMS[i + 1],):
                raise ValueError(f"layer {i} bias must have {LAYER_DIMS[i + 1]} entries")
            fixed.append((w, b))
        self.layers = fixed
        if self.theta <= 0:
            raise ValueError("theta must be positive")

    @classmethod
    def zeros(cls, theta: float = DEFAULT_THETA) -> "BweWeights":
        layers = [
            (np.zeros((LAYER_DIMS[i + 1], LAYER_DIMS[i])), np.zeros(LAYER_DIMS[i + 1]))
            for i in range(len(LAYER_DIMS) - 1)
        ]
        return cls(layers, theta=theta)

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 0.05,
               theta: float = DEFAULT_THETA) -> "BweWeights":
        layers = [
            (scale * rng.standard_normal((LAYER_DIMS[i + 1], LAYER_DIMS[i])),
             scale * rng.standard_normal(LAYER_DIMS[i + 1]))
            for i in range(len(LAYER_DIMS) - 1)
        ]
        return cls(layers, theta=theta)


@dataclass
class UpperBandEstimate:
    """Estimated upper-band amplitudes (bins 257..768) plus the attenuation."""

    amplitudes: np.ndarray
    gamma: float

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.float64)
        if self.amplitudes.shape != (UB_BINS,):
            raise ValueError(f"expected {UB_BINS} upper-band amplitudes")
        if np.any(self.amplitudes < 0):
            raise ValueError("amplitudes must be non-negative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


def bwe_forward(weights: BweWeights, wb_magnitudes) -> np.ndarray:
    """Upper-band amplitude estimate: exp(MLP(ln(max(mag, floor))))."""
    x = np.asarray(wb_magnitudes, dtype=np.float64)
    if x.shape != (WB_BINS,):
        raise ValueError(f"expected {WB_BINS} wideband magnitudes, got {x.shape}")
    h = np.log(np.maximum(x, weights.log_floor))
    for w, b in weights.layers[:-1]:
        h = np.maximum(w @ h + b, 0.0)
    w, b = weights.layers[-1]
    return np.exp(w @ h + b)


def attenuation_gamma(wb_bins, ub_amplitudes, theta: float) -> float:
    """min(1, theta*sqrt(P_WB/P_UB)) with P the mean per-bin band power.

    Degenerate cases: silent upper-band estimate clamps to 1; a silent
    wideband input yields 0 (no manufactured upper-band energy).
    """
    wb_bins = np.asarray(wb_bins, dtype=np.complex128)
    ub_amplitudes = np.asarray(ub_amplitudes, dtype=np.float64)
    p_wb = np.mean(np.abs(wb_bins) ** 2)
    p_ub = np.mean(ub_amplitudes ** 2)
    if p_wb == 0.0:
        return 0.0
    if p_ub == 0.0:
        return 1.0
    return min(1.0, theta * np.sqrt(p_wb / p_ub))


def extend_phase(wb_phases) -> np.ndarray:
    """Two concatenated copies of the wideband phases (bins 1..256) assigned
    ascending to bins 257..768."""
    wb_phases = np.asarray(wb_phases, dtype=np.float64)
    if wb_phases.shape != (WB_BINS - 1,):
        raise ValueError(f"expected {WB_BINS - 1} wideband phases")
    return np.concatenate([wb_phases, wb_phases])


def assemble_fullband(wb: SpectralFrame, ub: UpperBandEstimate) -> SpectralFrame:
    """Concatenate wideband bins with the attenuated complex upper band."""
    grid = wb.grid
    if grid.sample_rate != 48000:
        raise ValueError("fullband assembly requires the 48 kHz grid")
    phases = extend_phase(np.angle(wb.bins[1:WB_BINS]))
    bins = wb.bins.copy()
    bins[WB_BINS:] = ub.gamma * ub.amplitudes * np.exp(1j * phases)
    bins[-1] = bins[-1].real  # Nyquist bin stays real
    return SpectralFrame(bins, wb.frame_index, grid)


def extend_frame(weights: BweWeights, wb: SpectralFrame) -> SpectralFrame:
    """Full per-frame extension map; adds no frame delay."""
    wb_mag = np.abs(wb.bins[:WB_BINS])
    amplitudes = bwe_forward(weights, wb_mag)
    gamma = attenuation_gamma(wb.bins[:WB_BINS], amplitudes, weights.theta)
    return assemble_fullband(wb, UpperBandEstimate(amplitudes, gamma))


def save_weights(weights: BweWeights, path):
    """Write a BWEW v1 file.

    Little-endian: magic "BWEW", u32 version=1, u32 layer_count=4, per layer
    {u32 rows, u32 cols, rows*cols f32 row-major matrix, rows f32 bias},
    f32 theta, u32 CRC-32 of all preceding bytes.
    """
    parts = [MAGIC, struct.pack("<II", VERSION, len(weights.layers))]
    for w, b in weights.layers:
        rows, cols = w.shape
        parts.append(struct.pack("<II", rows, cols))
        parts.append(w.astype("<f4").tobytes())
        parts.append(b.astype("<f4").tobytes())
    parts.append(struct.pack("<f", weights.theta))
    body = b"".join(parts)
    with open(path, "wb") as f:
        f.write(body)
        f.write(struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


def load_weights(path) -> BweWeights:
    """Read and validate a BWEW v1 file (magic, version, dims, CRC)."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(MAGIC) + 12:
        raise WeightFormatError("file too short for BWEW header")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise WeightFormatError("CRC mismatch")
    if body[:4] != MAGIC:
        raise WeightFormatError("bad magic")
    version, layer_count = struct.unpack_from("<II", body, 4)
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version}")
    if layer_count != len(LAYER_DIMS) - 1:
        raise WeightFormatError(f"expected {len(LAYER_DIMS) - 1} layers")
    off = 12
    layers = []
    for i in range(layer_count):
        if off + 8 > len(body):
            raise WeightFormatError("truncated layer header")
        rows, cols = struct.unpack_from("<II", body, off)
        off += 8
        if (rows, cols) != (LAYER_DIMS[i + 1], LAYER_DIMS[i]):
            raise WeightFormatError(
                f"layer {i} dims {rows}x{cols} do not match "
                f"{LAYER_DIMS[i + 1]}x{LAYER_DIMS[i]}"
            )
        need = 4 * rows * cols + 4 * rows
        if off + need > len(body):
            raise WeightFormatError("truncated layer data")
        w = np.frombuffer(body, dtype="<f4", count=rows * cols, offset=off)
        off += 4 * rows * cols
        b = np.frombuffer(body, dtype="<f4", count=rows, offset=off)
        off += 4 * rows
        layers.append((w.reshape(rows, cols).astype(np.float64),
                       b.astype(np.float64)))
    if off + 4 != len(body):
        raise WeightFormatError("trailing bytes after theta")
    (theta,) = struct.unpack_from("<f", body, off)
    return BweWeights(layers, theta=float(theta))
