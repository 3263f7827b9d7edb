"""Command-line surface: train, infer, eval, count-params, bench, synth.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from .checkpoint import load_checkpoint
from .config import load_run_config
from .data import (
    FormatError,
    expand_training_set,
    load_manifest_samples,
    load_sample,
    read_manifest,
    save_mask_png,
    synthesize_disk_dataset,
    write_dataset,
)
from .networks import (
    ModelConfig,
    binarize,
    build_models,
    count_parameters,
)
from .tensor import ConfigurationError, NumericError, UsageError, no_grad
from .train import bench, evaluate, train

THREADS_ENV = "LESIONGAN_THREADS"


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_help()}")


def _build_parser() -> CliParser:
    parser = CliParser(prog="lesiongan",
                       description="Lightweight adversarial lesion segmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train generator and discriminator")
    p_train.add_argument("--config", required=True, help="key = value config file")
    src = p_train.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="TSV manifest of image/mask pairs")
    src.add_argument("--synthetic", type=int, metavar="N",
                     help="train on N synthetic samples instead of files")
    p_train.add_argument("--val-manifest", help="validation manifest for best-model tracking")
    p_train.add_argument("--steps", type=int, default=None,
                         help="total steps (default: epochs from config)")
    p_train.add_argument("--out", default="runs/default", help="output directory")
    p_train.add_argument("--augment", action="store_true",
                         help="apply the 8x flip/gamma/CLAHE expansion to the training set")

    p_infer = sub.add_parser("infer", help="segment images with a trained checkpoint")
    p_infer.add_argument("--checkpoint", required=True)
    isrc = p_infer.add_mutually_exclusive_group(required=True)
    isrc.add_argument("--images", nargs="+", help="image file paths")
    isrc.add_argument("--manifest", help="TSV manifest (masks ignored)")
    p_infer.add_argument("--out", required=True, help="directory for mask PNGs")
    p_infer.add_argument("--threshold", type=float, default=0.5)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint against labeled data")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--out", help="directory for the metrics CSV")
    p_eval.add_argument("--pixel-pooled", action="store_true",
                        help="pool confusion counts across images for the MEAN row")

    p_count = sub.add_parser("count-params", help="report trainable parameter counts")
    p_count.add_argument("--config", help="config file (default: full-scale model)")

    p_bench = sub.add_parser("bench", help="single-image inference timing")
    bsrc = p_bench.add_mutually_exclusive_group()
    bsrc.add_argument("--checkpoint")
    bsrc.add_argument("--config")
    p_bench.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    p_bench.add_argument("--warmup", type=int, default=1)
    p_bench.add_argument("--iters", type=int, default=3)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--parallel", action="store_true",
                         help="allow multi-threaded kernels (default single-threaded)")

    p_synth = sub.add_parser("synth", help="write a synthetic lesion dataset")
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--size", type=int, default=64)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)

    return parser


def _thread_limit(default: int | None):
    """Thread cap from the environment, else the command default."""
    env = os.environ.get(THREADS_ENV)
    limit = int(env) if env else default
    if limit is None:
        return contextlib.nullcontext()
    return threadpool_limits(limits=limit)


def _load_samples_arg(manifest_path: str, target_size: int):
    manifest = read_manifest(manifest_path, target_size=target_size)
    return load_manifest_samples(manifest)


def _cmd_train(args) -> int:
    run_cfg = load_run_config(args.config)
    if args.synthetic is not None:
        samples = synthesize_disk_dataset(args.synthetic, run_cfg.model.input_size,
                                          run_cfg.seed)
    else:
        samples = _load_samples_arg(args.manifest, run_cfg.model.input_size)
    if args.augment:
        aug_rng = np.random.default_rng([run_cfg.seed, 3])
        samples = expand_training_set(samples, aug_rng)
    val_samples = None
    if args.val_manifest:
        val_samples = _load_samples_arg(args.val_manifest, run_cfg.model.input_size)
    if args.steps is not None:
        max_steps = args.steps
    else:
        batches = (len(samples) + run_cfg.batch_size - 1) // run_cfg.batch_size
        max_steps = run_cfg.epochs * batches
    with _thread_limit(None):
        result = train(run_cfg, samples, max_steps, out_dir=args.out,
                       val_samples=val_samples,
                       log_fn=lambda s, g, d: print(
                           f"step {s}: gen_loss={g:.4f} disc_loss={d:.4f}"))
    print(f"finished at step {result.state.step}; checkpoint: {result.checkpoint_path}")
    if result.best_checkpoint_path:
        print(f"best val JSC {result.best_val_jsc:.4f}: {result.best_checkpoint_path}")
    return 0


def _cmd_infer(args) -> int:
    gen, _, cfg, _ = load_checkpoint(args.checkpoint)
    os.makedirs(args.out, exist_ok=True)
    if args.images:
        samples = [load_sample(p, None, cfg.input_size) for p in args.images]
    else:
        manifest = read_manifest(args.manifest, target_size=cfg.input_size)
        samples = [load_sample(img, None, cfg.input_size)
                   for img, _ in manifest.entries]
    gen.eval()
    with _thread_limit(None), no_grad():
        for sample in samples:
            mask = binarize(gen(sample.image), args.threshold)
            out_path = os.path.join(args.out, f"{sample.id}_mask.png")
            save_mask_png(out_path, mask.data[0, 0])
            print(out_path)
    return 0


def _cmd_eval(args) -> int:
    gen, _, cfg, _ = load_checkpoint(args.checkpoint)
    samples = _load_samples_arg(args.manifest, cfg.input_size)
    with _thread_limit(None):
        report = evaluate(gen, samples, pixel_pooled=args.pixel_pooled)
    print(report.to_table())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        csv_path = os.path.join(args.out, "metrics.csv")
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        print(f"wrote {csv_path}")
    return 0


def _cmd_count_params(args) -> int:
    if args.config:
        cfg = load_run_config(args.config).model
    else:
        cfg = ModelConfig()
    gen, disc, _ = build_models(cfg, seed=0)
    print("generator breakdown:")
    for name, mod in gen._modules.items():
        print(f"  {name:<16}{mod.count_parameters():>10}")
    print("discriminator breakdown:")
    for name, mod in disc._modules.items():
        print(f"  {name:<16}{mod.count_parameters():>10}")
    g, d = count_parameters(gen), count_parameters(disc)
    print(f"generator        {g:>10}")
    print(f"discriminator    {d:>10}")
    print(f"total            {g + d:>10}")
    return 0


def _cmd_bench(args) -> int:
    if args.checkpoint:
        gen, _, _, _ = load_checkpoint(args.checkpoint)
    else:
        cfg = load_run_config(args.config).model if args.config else ModelConfig()
        gen, _, _ = build_models(cfg, seed=args.seed)
    with _thread_limit(None if args.parallel else 1):
        report = bench(gen, args.sizes, warmup=args.warmup, iters=args.iters,
                       seed=args.seed)
    print(report.to_table())
    return 0


def _cmd_synth(args) -> int:
    samples = synthesize_disk_dataset(args.n, args.size, args.seed)
    manifest_path = write_dataset(samples, args.out)
    print(manifest_path)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "infer": _cmd_infer,
    "eval": _cmd_eval,
    "count-params": _cmd_count_params,
    "bench": _cmd_bench,
    "synth": _cmd_synth,
}


def cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigurationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FormatError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
