"""Bandwidth-scalable acoustic echo cancellation pipeline: dynamic delay
compensation, mask-based echo cancellation and postfiltering on wideband
spectra, and blind bandwidth extension back to fullband."""

from .spectral import AudioBuffer, FrameGrid, SpectralFrame, analyze, \
    synthesize, zero_upper_band, highpass_50hz
from .ddc import DdcConfig, DelayState, ReferenceRingbuffer, \
    estimate_instantaneous_delay, update_active_delay, align_reference
from .masking import ComplexMask, MaskEstimator, IdentityEstimator, \
    ConstantEstimator, OracleEstimator, apply_mask, aec_estimate, pf_estimate
from .bwe import BweWeights, UpperBandEstimate, bwe_forward, \
    attenuation_gamma, extend_phase, assemble_fullband, load_weights, \
    save_weights
from .objectives import LossConfig, mse_spectral, loss_aec, loss_pf, \
    joint_loss, loss_tlogmse, loss_mc, loss_cc, loss_mcc, loss_bwe
from .evalkit import ScenarioSpec, ScenarioComponents, MaskTrace, \
    generate_scenario, make_source, erle_bb, delta_snr_bb, shadow_process
from .pipeline import PipelineConfig, StreamSession, process_stream, \
    latency_report

__version__ = "0.1.0"
