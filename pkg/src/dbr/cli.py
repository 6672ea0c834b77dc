"""Command-line entry point: ``dbr train|enhance|eval|selftest|synth|identity``.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric
failure (or failed self-test), 5 checkpoint error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, load_config, parse_text, to_text
from .imageio import DatasetError, ImageFormatError, load_dataset_root, load_image, save_image, synthesize_dataset, write_dataset
from .metrics import METRICS, evaluate
from .pipeline import decompose, dump_decomposition, enhance
from .predictor import identity_params, layer_shapes
from .trainer import NumericError, train, write_history

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_CHECKPOINT = 0, 2, 3, 4, 5

log = logging.getLogger("dbr")


class UsageError(Exception):
    pass


def _thread_limit():
    raw = os.environ.get("DBR_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"DBR_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise UsageError("DBR_THREADS must be >= 0")
    if n == 0:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _load_model(path):
    """Checkpoint -> (params as tensors, TrainConfig rebuilt from its snapshot)."""
    arrays, text = load_checkpoint(path)
    try:
        cfg = parse_text(text)
    except ConfigError as exc:
        raise CheckpointError(f"checkpoint config snapshot is invalid: {exc}") from None
    expected = layer_shapes(cfg.pipeline.predictor)
    for name, shape in expected.items():
        got = arrays.get(name)
        if got is None or got.shape != shape:
            raise CheckpointError(f"checkpoint tensor {name}: expected shape {shape}, got {None if got is None else got.shape}")
    return {k: Tensor(v) for k, v in arrays.items()}, cfg


def _input_images(path):
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.png"))
        if not files:
            raise DatasetError(f"no PNG files in {path}")
        return files
    if not path.is_file():
        raise DatasetError(f"no such input: {path}")
    return [path]


def cmd_train(args):
    cfg = load_config(args.config)
    dataset = load_dataset_root(args.data)
    result = train(dataset, cfg, checkpoint_path=args.out)
    if args.log:
        write_history(result.history, args.log)
    if args.plot:
        from .plotting import plot_history
        plot_history(result.history, args.plot)
    if result.history:
        first, last = result.history[0][1], result.history[-1][1]
        print(f"iterations={len(result.history)} loss_first={first:.6f} loss_last={last:.6f}")
    return EXIT_OK


def cmd_enhance(args):
    params, cfg = _load_model(args.ckpt)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in _input_images(args.input):
        img = load_image(path)
        stem = path.stem
        if args.dump_decomposition or args.plot:
            dec = decompose(img, params, cfg.pipeline)
            r = dec.reflectance.data
            out = np.clip(r, 0, 1) if cfg.pipeline.clamp_output else r
            if args.dump_decomposition:
                dump_decomposition(dec, stem, out_dir)
            if args.plot:
                from .plotting import plot_decomposition
                plot_decomposition(img, dec, out_dir / f"{stem}_decomposition.png")
        else:
            out = enhance(img, params, cfg.pipeline)
        if not np.all(np.isfinite(out)):
            raise NumericError(f"non-finite output for {path}")
        save_image(out, out_dir / f"{stem}_enhanced.png")
        print(out_dir / f"{stem}_enhanced.png")
    return EXIT_OK


def cmd_eval(args):
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    if not metrics:
        raise UsageError("--metrics is empty")
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise UsageError(f"unknown metrics: {','.join(unknown)} (choose from {','.join(METRICS)})")
    params, cfg = _load_model(args.ckpt)
    dataset = load_dataset_root(args.pairs)
    report = evaluate(dataset, lambda low: enhance(low, params, cfg.pipeline), metrics)
    text = report.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    if args.plot:
        from .plotting import plot_metrics
        plot_metrics(report, args.plot)
    print(report.mean_line())
    return EXIT_OK


def cmd_selftest(args):
    from .selftest import run_selftest

    results = run_selftest(tol=args.tol)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def cmd_synth(args):
    dataset = synthesize_dataset(args.n, args.size, args.seed)
    write_dataset(dataset, args.out)
    print(f"wrote {len(dataset)} pairs to {args.out}")
    return EXIT_OK


def cmd_identity(args):
    """Debug checkpoint whose enhancement is the identity map."""
    cfg = load_config(args.config)
    params = identity_params(cfg.pipeline.predictor, cfg.pipeline.layout)
    save_checkpoint(params, args.out, to_text(cfg))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="dbr", description="Bilateral Retinex low-light enhancement")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a predictor on <data>/low + <data>/high")
    t.add_argument("--config", help="key=value run config (defaults if omitted)")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--log", help="loss history CSV")
    t.add_argument("--plot", help="loss curve image")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("enhance", help="enhance one PNG or every PNG in a directory")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--input", required=True)
    e.add_argument("--output", required=True)
    e.add_argument("--dump-decomposition", action="store_true", help="also write E/N/R images")
    e.add_argument("--plot", action="store_true", help="also write a decomposition figure per image")
    e.set_defaults(func=cmd_enhance)

    v = sub.add_parser("eval", help="score enhancement against references")
    v.add_argument("--ckpt", required=True)
    v.add_argument("--pairs", required=True, help="directory holding low/ and high/")
    v.add_argument("--metrics", default=",".join(METRICS))
    v.add_argument("--out", help="per-image CSV")
    v.add_argument("--plot", help="metrics bar chart image")
    v.set_defaults(func=cmd_eval)

    s = sub.add_parser("selftest", help="gradient checks, loop oracles and invariants")
    s.add_argument("--tol", type=float, default=None, help="override every check's tolerance")
    s.set_defaults(func=cmd_selftest)

    y = sub.add_parser("synth", help="write a synthetic paired dataset")
    y.add_argument("--out", required=True)
    y.add_argument("--n", type=int, default=8)
    y.add_argument("--size", type=int, default=96)
    y.add_argument("--seed", type=int, default=0)
    y.set_defaults(func=cmd_synth)

    i = sub.add_parser("identity", help="write an identity-forcing debug checkpoint")
    i.add_argument("--config")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_identity)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (DatasetError, ImageFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
