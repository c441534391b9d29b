"""Command-line surface: batch processing, scenario simulation, evaluation,
loss computation and weight-file inspection."""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import bwe, objectives
from .evalkit import ScenarioSpec, generate_scenario, make_source, erle_bb, \
    delta_snr_bb, write_report
from .masking import IdentityEstimator, ConstantEstimator, OracleEstimator, \
    target_frames_for
from .ddc import DdcConfig
from .pipeline import PipelineConfig, process_stream, latency_report
from .spectral import FrameGrid, stft_analyze, stft_synthesize, \
    zero_upper_band_array
from .wavio import read_wav, write_wav


def load_config(path) -> dict:
    """Flat key=value config file; '#' starts a comment."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def make_estimator(kind: str | None, oracle_targets=None):
    """Estimator selection: identity | constant:<gain> | oracle | none."""
    if kind in (None, "none"):
        return None
    if kind == "identity":
        return IdentityEstimator()
    if kind.startswith("constant:"):
        gain = float(kind.split(":", 1)[1])
        if not 0.0 <= gain < 1.0:
            raise ValueError("constant estimator gain must lie in [0, 1)")
        return ConstantEstimator(math.atanh(gain))
    if kind == "oracle":
        if oracle_targets is None:
            raise ValueError("oracle estimator requires known scene components")
        return OracleEstimator(oracle_targets)
    raise ValueError(f"unknown estimator kind {kind!r}")


def build_pipeline_config(args, aec_targets=None, pf_targets=None) -> PipelineConfig:
    fs = args.sample_rate
    weights = None
    if args.bwe_weights and not args.no_bwe:
        weights = bwe.load_weights(args.bwe_weights)
    aec = make_estimator(args.estimator, aec_targets)
    pf = None if args.no_pf else make_estimator(args.estimator, pf_targets)
    return PipelineConfig(
        sample_rate=fs,
        ddc=None if args.no_ddc else DdcConfig(sample_rate=fs),
        aec_estimator=aec,
        pf_estimator=pf,
        bwe_weights=weights,
        emit_mask_trace=args.emit_trace is not None or getattr(args, "_need_trace", False),
    )


def cmd_process(args) -> int:
    mic = read_wav(args.mic)
    far = read_wav(args.farend)
    if mic.sample_rate != far.sample_rate:
        print("error: mic and far-end sample rates differ", file=sys.stderr)
        return 1
    args.sample_rate = mic.sample_rate
    if args.estimator == "oracle":
        print("error: oracle estimator needs scene components; use `evaluate`",
              file=sys.stderr)
        return 1
    cfg = build_pipeline_config(args)
    result = process_stream(cfg, mic, far)
    write_wav(args.out, result.output, fmt=args.wav_format)
    if args.emit_trace:
        trace = result.mask_trace
        np.savez(
            args.emit_trace,
            aec=np.zeros(0) if trace.aec is None else trace.aec,
            pf=np.zeros(0) if trace.pf is None else trace.pf,
            delay_trace=json.dumps(result.delay_trace),
        )
    if args.report:
        Path(args.report).write_text(json.dumps(result.report, indent=2) + "\n")
    return 0


def cmd_simulate(args) -> int:
    spec = ScenarioSpec(
        seed=args.seed, ser_db=args.ser, snr_db=args.snr,
        delay_ms=args.delay_ms, duration_s=args.duration,
        sample_rate=args.sample_rate,
        clip_level=None if args.clip_level == 0 else args.clip_level,
    )
    comps = _generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, buf in (("mic", comps.mic), ("farend", comps.farend),
                      ("nearend", comps.nearend), ("echo", comps.echo),
                      ("noise", comps.noise)):
        write_wav(out / f"{name}.wav", buf, fmt=args.wav_format)
    doc = spec.to_dict()
    doc["true_delay_samples"] = comps.true_delay
    (out / "scenario.json").write_text(json.dumps(doc, indent=2) + "\n")
    return 0


def _generate(spec: ScenarioSpec):
    """Deterministic source material for synthetic scenes: modulated lowband
    near-end speech stand-in, highband far-end, white noise."""
    dur, fs = spec.duration_s, spec.sample_rate
    nearend = make_source("speechlike", spec.seed + 1, dur, fs)
    farend = make_source("highband", spec.seed + 2, dur, fs)
    noise = make_source("white", spec.seed + 3, dur, fs)
    return generate_scenario(spec, nearend, farend, noise)


def evaluate_scenario(spec: ScenarioSpec, estimator: str, no_ddc: bool,
                      per_frame: bool = False):
    comps = _generate(spec)
    grid = FrameGrid.for_rate(spec.sample_rate)
    aec_targets = pf_targets = None
    if estimator == "oracle":
        noisy = type(comps.mic)(comps.nearend.samples + comps.noise.samples,
                                spec.sample_rate)
        aec_targets = target_frames_for(noisy, grid)
        pf_targets = target_frames_for(comps.nearend, grid)
    cfg = PipelineConfig(
        sample_rate=spec.sample_rate,
        ddc=None if no_ddc else DdcConfig(sample_rate=spec.sample_rate),
        aec_estimator=make_estimator(estimator, aec_targets),
        pf_estimator=make_estimator(estimator, pf_targets),
        emit_mask_trace=True,
    )
    result = process_stream(cfg, comps.mic, comps.farend)
    trace = result.mask_trace
    erle, frame_erle = erle_bb(comps, trace, grid, per_frame=True)
    metrics = {
        "erle_bb_db": round(erle, 4),
        "delta_snr_bb_db": round(delta_snr_bb(comps, trace, grid), 4),
        "final_tau_active": result.delay_trace[-1]["tau_active"]
        if result.delay_trace else None,
    }
    return spec, metrics, cfg.digest(), (frame_erle if per_frame else None)


def _evaluate_job(packed):
    spec_kwargs, estimator, no_ddc = packed
    spec, metrics, digest, _ = evaluate_scenario(
        ScenarioSpec(**spec_kwargs), estimator, no_ddc)
    return spec.seed, metrics, digest


def cmd_evaluate(args) -> int:
    seeds = args.seed
    spec_kwargs = dict(ser_db=args.ser, snr_db=args.snr, delay_ms=args.delay_ms,
                       duration_s=args.duration, sample_rate=args.sample_rate)
    if len(seeds) == 1:
        spec, metrics, digest, frame_erle = evaluate_scenario(
            ScenarioSpec(seed=seeds[0], **spec_kwargs), args.estimator,
            args.no_ddc, per_frame=args.per_frame_csv is not None)
        write_report(args.report, spec, metrics, digest,
                     per_frame_erle=frame_erle,
                     per_frame_csv_path=args.per_frame_csv)
        print(json.dumps(metrics, indent=2))
        return 0

    jobs = [(dict(seed=s, **spec_kwargs), args.estimator, args.no_ddc)
            for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_evaluate_job, jobs))
    else:
        results = [_evaluate_job(j) for j in jobs]
    doc = {
        "scenarios": {str(seed): m for seed, m, _ in results},
        "config_digest": results[0][2],
    }
    Path(args.report).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(json.dumps(doc["scenarios"], indent=2))
    return 0


def cmd_losses(args) -> int:
    est = read_wav(args.estimate)
    ref = read_wav(args.reference)
    if est.sample_rate != ref.sample_rate:
        print("error: sample rates differ", file=sys.stderr)
        return 1
    grid = FrameGrid.for_rate(est.sample_rate)
    cfgl = objectives.LossConfig()
    n = min(len(est), len(ref))
    full_e = stft_analyze(est.samples[:n], grid)
    full_r = stft_analyze(ref.samples[:n], grid)
    wb = grid.wb_cut_bin + 1
    e_wb, r_wb = full_e[:, :wb], full_r[:, :wb]

    spec_mse = objectives.loss_frames(e_wb, r_wb)
    t_est = stft_synthesize(zero_upper_band_array(full_e, grid), grid)
    t_ref = stft_synthesize(zero_upper_band_array(full_r, grid), grid)
    j_mc = objectives.loss_mc(e_wb, r_wb, cfgl.compress_exp, cfgl.eps)
    j_cc = objectives.loss_cc(e_wb, r_wb, cfgl.compress_exp, cfgl.eps)
    doc = {
        "spectral_mse": spec_mse,
        "joint_weighted": objectives.joint_loss(spec_mse, spec_mse,
                                                cfgl.alpha_joint),
        "t_log_mse_db": objectives.loss_tlogmse(t_est, t_ref, cfgl.eps),
        "magnitude_compressed_db": j_mc,
        "complex_compressed_db": j_cc,
        "combined_compressed_db": objectives.loss_mcc(j_mc, j_cc, cfgl.beta_mcc),
    }
    if grid.num_onesided_bins > wb:
        doc["bwe_overest_db"] = objectives.loss_bwe(
            np.abs(full_e[:, wb:]), np.abs(full_r[:, wb:]),
            cfgl.overest_factor, cfgl.eps)
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n")
    return 0


def cmd_bwe_check(args) -> int:
    try:
        weights = bwe.load_weights(args.weights)
    except (bwe.WeightFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    doc = {
        "crc": "ok",
        "layers": [[w.shape[0], w.shape[1]] for w, _ in weights.layers],
        "theta": weights.theta,
    }
    if args.probe:
        probe = json.loads(Path(args.probe).read_text())
        doc["outputs"] = [
            bwe.bwe_forward(weights, np.asarray(vec, dtype=np.float64)).tolist()
            for vec in probe["inputs"]
        ]
    print(json.dumps(doc))
    return 0


def _add_pipeline_flags(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--no-ddc", action="store_true")
    p.add_argument("--no-pf", action="store_true")
    p.add_argument("--no-bwe", action="store_true")
    p.add_argument("--estimator", default="identity",
                   help="identity | constant:<gain> | none")
    p.add_argument("--bwe-weights", help="BWEW v1 weight file")
    p.add_argument("--emit-trace", help="write mask/delay trace (npz)")
    p.add_argument("--report", help="write run report (json)")
    p.add_argument("--wav-format", default="float32",
                   choices=["float32", "pcm16"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbaec",
        description="Bandwidth-scalable acoustic echo cancellation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="process mic+farend WAVs")
    p.add_argument("mic")
    p.add_argument("farend")
    p.add_argument("out")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("simulate", help="generate a synthetic scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ser", type=float, default=0.0)
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--delay-ms", type=float, default=100.0)
    p.add_argument("--duration", type=float, default=4.0)
    p.add_argument("--sample-rate", type=int, default=48000)
    p.add_argument("--clip-level", type=float, default=0.8,
                   help="symmetric clip level for the echo path (0 disables)")
    p.add_argument("--wav-format", default="float32",
                   choices=["float32", "pcm16"])
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="run metrics on synthetic scenarios")
    p.add_argument("--seed", type=int, nargs="+", default=[0])
    p.add_argument("--ser", type=float, default=0.0)
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--delay-ms", type=float, default=100.0)
    p.add_argument("--duration", type=float, default=4.0)
    p.add_argument("--sample-rate", type=int, default=48000)
    p.add_argument("--estimator", default="oracle",
                   help="oracle | identity | constant:<gain>")
    p.add_argument("--no-ddc", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", required=True)
    p.add_argument("--per-frame-csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("losses", help="objective values between two WAVs")
    p.add_argument("estimate")
    p.add_argument("reference")
    p.add_argument("--report")
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser("bwe-check", help="inspect a BWEW v1 weight file")
    p.add_argument("weights")
    p.add_argument("--probe", help="json file with {'inputs': [[257 mags]...]}")
    p.set_defaults(func=cmd_bwe_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        for key, value in cfg.items():
            if not hasattr(args, key):
                raise SystemExit(f"unknown config key {key!r}")
            current = getattr(args, key)
            if isinstance(current, bool):
                value = value.lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                value = int(value)
            elif isinstance(current, float):
                value = float(value)
            setattr(args, key, value)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
