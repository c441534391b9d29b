"""Training/verification objectives: frequency-domain MSE losses and their
weighted joint form, the time-domain log-MSE, magnitude/complex-compressed
losses with dB-style log aggregation, and the upper-band extension loss with
its overestimation penalty. All functions are pure and brute-force checkable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_EPS = 1e-12
DEFAULT_MAG_FLOOR = 1e-10


@dataclass
class LossConfig:
    alpha_joint: float = 0.25
    beta_mcc: float = 0.7
    compress_exp: float = 0.3
    eps: float = DEFAULT_EPS
    mag_floor: float = DEFAULT_MAG_FLOOR
    overest_factor: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.alpha_joint <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not 0.0 <= self.beta_mcc <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if not 0.0 < self.compress_exp <= 1.0:
            raise ValueError("compression exponent must be in (0, 1]")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


def mse_spectral(a, b) -> float:
    """Mean squared complex magnitude difference over one frame's bins."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError("bin counts do not match")
    return float(np.mean(np.abs(a - b) ** 2))


def loss_frames(frames_est, frames_target) -> float:
    """Per-frame spectral MSE averaged over the sequence (echo-cancellation
    and postfilter stage losses share this form, only the targets differ)."""
    frames_est = np.asarray(frames_est, dtype=np.complex128)
    frames_target = np.asarray(frames_target, dtype=np.complex128)
    if frames_est.shape != frames_target.shape:
        raise ValueError("frame sequences do not match")
    if frames_est.shape[0] == 0:
        raise ValueError("empty frame sequence")
    return float(np.mean([mse_spectral(e, t)
                          for e, t in zip(frames_est, frames_target)]))


loss_aec = loss_frames
loss_pf = loss_frames


def joint_loss(j_aec: float, j_pf: float, alpha: float = 0.25) -> float:
    """alpha-weighted combination of the two stage losses."""
    return alpha * j_aec + (1.0 - alpha) * j_pf


def loss_tlogmse(s_est, s_ref, eps: float = DEFAULT_EPS) -> float:
    """10*log10(eps + MSE) over all time instants of the sequence."""
    s_est = np.asarray(s_est, dtype=np.float64)
    s_ref = np.asarray(s_ref, dtype=np.float64)
    if s_est.shape != s_ref.shape:
        raise ValueError("signal lengths do not match")
    return float(10.0 * np.log10(eps + np.mean((s_est - s_ref) ** 2)))


def _compressed_mag(x, c: float, floor: float) -> np.ndarray:
    return np.maximum(np.abs(x), floor) ** c


def loss_mc_frame(est, ref, c: float, floor: float = DEFAULT_MAG_FLOOR) -> float:
    """Magnitude-compressed spectral MSE of one frame."""
    est = np.asarray(est, dtype=np.complex128)
    ref = np.asarray(ref, dtype=np.complex128)
    if est.shape != ref.shape:
        raise ValueError("bin counts do not match")
    return float(np.mean((_compressed_mag(est, c, floor)
                          - _compressed_mag(ref, c, floor)) ** 2))


def loss_cc_frame(est, ref, c: float, floor: float = DEFAULT_MAG_FLOOR) -> float:
    """Complex-compressed spectral MSE of one frame (phase kept)."""
    est = np.asarray(est, dtype=np.complex128)
    ref = np.asarray(ref, dtype=np.complex128)
    if est.shape != ref.shape:
        raise ValueError("bin counts do not match")
    ec = _compressed_mag(est, c, floor) * np.exp(1j * np.angle(est))
    rc = _compressed_mag(ref, c, floor) * np.exp(1j * np.angle(ref))
    return float(np.mean(np.abs(ec - rc) ** 2))


def log_aggregate(frame_losses, eps: float = DEFAULT_EPS) -> float:
    """Sequence aggregation: 10*log10(eps + mean of per-frame losses)."""
    frame_losses = np.asarray(frame_losses, dtype=np.float64)
    if frame_losses.size == 0:
        raise ValueError("empty frame sequence")
    return float(10.0 * np.log10(eps + np.mean(frame_losses)))


def loss_mc(frames_est, frames_ref, c: float, eps: float = DEFAULT_EPS,
            floor: float = DEFAULT_MAG_FLOOR) -> float:
    return log_aggregate([loss_mc_frame(e, r, c, floor)
                          for e, r in zip(frames_est, frames_ref)], eps)


def loss_cc(frames_est, frames_ref, c: float, eps: float = DEFAULT_EPS,
            floor: float = DEFAULT_MAG_FLOOR) -> float:
    return log_aggregate([loss_cc_frame(e, r, c, floor)
                          for e, r in zip(frames_est, frames_ref)], eps)


def loss_mcc(j_mc: float, j_cc: float, beta: float = 0.7) -> float:
    """(1-beta)*magnitude-compressed + beta*complex-compressed."""
    return (1.0 - beta) * j_mc + beta * j_cc


def loss_bwe_frame(est_ub, ref_ub, factor: float = 2.0) -> float:
    """Upper-band amplitude MSE with overestimated bins weighted by
    ``factor`` inside the difference (squared-error weight factor**2)."""
    est_ub = np.asarray(est_ub, dtype=np.float64)
    ref_ub = np.asarray(ref_ub, dtype=np.float64)
    if est_ub.shape != ref_ub.shape:
        raise ValueError("amplitude vectors do not match")
    delta = np.where(est_ub > ref_ub, factor, 1.0)
    return float(np.mean((delta * est_ub - delta * ref_ub) ** 2))


def loss_bwe(frames_est_ub, frames_ref_ub, factor: float = 2.0,
             eps: float = DEFAULT_EPS) -> float:
    """Frame losses averaged over time, then the dB-style logarithm."""
    return log_aggregate([loss_bwe_frame(e, r, factor)
                          for e, r in zip(frames_est_ub, frames_ref_ub)], eps)
