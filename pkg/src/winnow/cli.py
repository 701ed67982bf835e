"""Command-line interface.

Subcommands:
  enhance    denoise a WAV file (offline or hop-streaming mode)
  train      train a model on synthetic mixtures and save checkpoints
  profile    print per-layer parameter and MAC counts for a config
  gradcheck  verify every autograd op against finite differences

Exit codes: 0 success; 2 usage error (bad flags/arguments); 3 I/O error
(missing or unwritable file); 4 format error (malformed WAV or
checkpoint); 5 configuration error (bad config JSON, schema violation,
or checkpoint/model mismatch); 1 any other failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio import read_wav, write_wav
from .autograd.gradcheck import run_suite
from .checkpoint import apply_checkpoint, load_checkpoint
from .config import ModelConfig, load_config, reference_config
from .errors import ConfigError, FormatError
from .model import TwoStageEnhancer
from .pipeline import enhance_offline, enhance_streaming
from .profiler import count_macs, count_params, profile_model, si_sdr
from .train import train

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_CONFIG = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="winnow", description="Causal two-stage speech enhancement")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_enh = sub.add_parser("enhance", help="denoise a 16 kHz mono WAV file")
    p_enh.add_argument("--input", required=True, help="noisy input WAV")
    p_enh.add_argument("--output", required=True, help="enhanced output WAV")
    p_enh.add_argument("--checkpoint", required=True, help="model checkpoint (.thln)")
    p_enh.add_argument("--mode", choices=("offline", "stream"), default="offline")
    p_enh.add_argument("--reference", help="clean reference WAV; prints SI-SDR before/after")

    p_train = sub.add_parser("train", help="train on synthetic mixtures")
    p_train.add_argument("--out", required=True, help="output directory for checkpoints and history")
    p_train.add_argument("--config", help="model config JSON (default: reference config)")
    p_train.add_argument("--epochs", type=int, default=1)
    p_train.add_argument("--seed", type=int, default=0)

    p_prof = sub.add_parser("profile", help="parameter and MAC accounting")
    p_prof.add_argument("--config", help="model config JSON (default: reference config)")
    p_prof.add_argument("--json", action="store_true", help="emit machine-readable JSON")

    p_gc = sub.add_parser("gradcheck", help="finite-difference check of every autograd op")
    p_gc.add_argument("--seed", type=int, default=7)
    p_gc.add_argument("--tolerance", type=float, default=1e-5)
    return parser


def _load_model_config(path: str | None) -> ModelConfig:
    if path is None:
        return reference_config()
    return load_config(path)


def _cmd_enhance(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    config = ModelConfig.from_dict(ckpt.config)
    model = TwoStageEnhancer(config, seed=0)
    apply_checkpoint(model, ckpt)
    noisy = read_wav(args.input)
    if args.mode == "stream":
        enhanced = enhance_streaming(noisy, model)
    else:
        enhanced = enhance_offline(noisy, model)
    write_wav(args.output, enhanced)
    print(f"wrote {args.output} ({enhanced.size} samples, mode={args.mode})")
    if args.reference:
        reference = read_wav(args.reference)
        if reference.size != noisy.size:
            raise ConfigError(
                f"reference length {reference.size} does not match input length {noisy.size}"
            )
        before = si_sdr(noisy, reference)
        after = si_sdr(enhanced, reference)
        print(f"SI-SDR in:  {before:+.2f} dB")
        print(f"SI-SDR out: {after:+.2f} dB")
        print(f"SI-SDR gain: {after - before:+.2f} dB")
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _load_model_config(args.config)
    model = TwoStageEnhancer(config, seed=args.seed)
    history = train(model, epochs=args.epochs, seed=args.seed, out_dir=args.out)
    if history:
        last = history[-1]
        print(
            f"trained {len(history)} steps over {args.epochs} epochs; "
            f"final loss_total={last.loss_total:.6f} (coarse {last.loss_coarse:.6f}, fine {last.loss_fine:.6f})"
        )
    else:
        print("trained 0 steps; wrote initial checkpoint")
    print(f"artifacts in {Path(args.out).resolve()}")
    return EXIT_OK


def _cmd_profile(args) -> int:
    config = _load_model_config(args.config)
    model = TwoStageEnhancer(config, seed=0)
    report = profile_model(model)
    if args.json:
        print(report.to_json())
    else:
        print(report.table())
        print()
        print(f"count_params:  {count_params(model):,}")
        print(f"count_macs(1s): {count_macs(model, 1.0):,.0f}")
        print(f"total:        {report.total_params / 1e6:.2f} M params, {report.total_macs_per_second / 1e9:.2f} G MACs/s")
        print(f"coarse stage: {report.coarse_params / 1e6:.2f} M params, {report.coarse_macs_per_second / 1e9:.2f} G MACs/s")
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    results = run_suite(tolerance=args.tolerance, seed=args.seed)
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "ok" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  max_rel_err={r.max_rel_error:.3e}  {status}")
        failures += 0 if r.passed else 1
    print(f"{len(results) - failures}/{len(results)} cases passed")
    return EXIT_OK if failures == 0 else EXIT_FAILURE


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "enhance": _cmd_enhance,
        "train": _cmd_train,
        "profile": _cmd_profile,
        "gradcheck": _cmd_gradcheck,
    }
    try:
        return handlers[args.command](args)
    except FormatError as e:
        print(f"format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, np.linalg.LinAlgError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
