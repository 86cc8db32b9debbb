"""
Command-line entry point: ``assm {generate,train,eval,stream,bench,plot}``.

Exit codes: 0 success, 2 validation error, 3 numeric divergence, 4 I/O error.
"""
from __future__ import annotations
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence
import numpy as np
from orm_loader.helpers import configure_logging, get_logger

from .config import derive_seed, get_default_seed, load_environment, load_run_config
from .datagen import Dataset, GenConfig, generate_dataset
from .errors import ASSMError, ConfigError, NonFiniteInputError
from .evaluation import EvalResult, ThroughputResult, evaluate_scores, measure_throughput
from .io import (
    FORMATS,
    Checkpoint,
    comparison_table,
    emit_trace_plot,
    load_checkpoint,
    read_dataset,
    read_samples,
    render_report,
    save_checkpoint,
    write_dataset,
    write_report,
    write_verdict,
)
from .ssm.base import DefaultHyperparameters
from .ssm.baselines import KfConfig, KfModel, constant_velocity_model, kf_init, kf_step
from .ssm.handlers import StreamConfig, bench, detector_registry, open_stream
from .ssm.model import ModelConfig
from .ssm.training import TrainConfig, calibrate_threshold, train

logger = get_logger(__name__)

Sections = dict[str, dict[str, Any]]


# ---- shared helpers --------------------------------------------------------

def _overrides(section: dict[str, Any], **values: Any) -> dict[str, Any]:
    """Layer CLI flags (those not None) over a config-file section."""
    merged = dict(section)
    merged.update({k: v for k, v in values.items() if v is not None})
    return merged


def _kalman_model(sections: Sections, m: int) -> KfModel:
    kcfg = KfConfig.from_mapping(sections["kalman"])
    noise_std = kcfg.noise_std
    if noise_std is None:
        noise_std = GenConfig.from_mapping(sections["generate"]).noise_std
    return constant_velocity_model(
        m,
        noise_std,
        process_noise=kcfg.process_noise,
        initial_variance=kcfg.initial_variance,
    )


def _emit(report: dict[str, Any], out: str | None) -> None:
    if out:
        write_report(out, report)
    sys.stdout.write(render_report(report))
    sys.stdout.flush()


def _eval_options(sections: Sections) -> dict[str, Any]:
    options = {"horizon": DefaultHyperparameters.DETECTION_HORIZON, "throughput_samples": 100_000}
    unknown = sorted(set(sections["eval"]) - set(options))
    if unknown:
        raise ConfigError(f"Unknown eval option(s): {unknown}. Known options: {sorted(options)}")
    options.update(sections["eval"])
    return options


# ---- verbs -----------------------------------------------------------------

def cmd_generate(args: argparse.Namespace, sections: Sections) -> int:
    values = _overrides(
        sections["generate"],
        n_train=args.n_train,
        n_test=args.n_test,
        seq_len=args.seq_len,
        channels=args.channels,
    )
    values["seed"] = derive_seed(args.seed, "generate")
    dataset = generate_dataset(GenConfig.from_mapping(values))
    write_dataset(args.out, dataset, args.format)
    return 0


def cmd_train(args: argparse.Namespace, sections: Sections) -> int:
    dataset = read_dataset(args.data, args.format)
    if not dataset.train:
        raise ConfigError(f"{args.data} has no training split")
    mvalues = _overrides(sections["model"], state_dim=args.state_dim)
    mvalues["input_dim"] = dataset.input_dim
    mvalues["seed"] = derive_seed(args.seed, "model")
    tvalues = _overrides(sections["train"], alpha=args.alpha, epochs=args.epochs)
    tvalues["seed"] = derive_seed(args.seed, "train")

    config = ModelConfig.from_mapping(mvalues)
    tconfig = TrainConfig.from_mapping(tvalues)
    params, report = train(config, tconfig, dataset.train)

    metadata = {
        "seed": args.seed,
        "train": tconfig.to_dict(),
        "epochs": report.epochs,
        "final_losses": {
            "total": report.total_losses[-1],
            "recon": report.recon_losses[-1],
            "class": report.class_losses[-1],
        },
        "threshold_f1": report.threshold_f1,
    }
    save_checkpoint(args.checkpoint, Checkpoint(params=params, threshold=report.threshold, metadata=metadata))
    _emit({"model": config.to_dict(), "train": tconfig.to_dict(), "report": report.to_dict()}, args.out)
    return 0


def _kalman_throughput(model: KfModel, n: int, seed: int) -> ThroughputResult:
    rng = np.random.default_rng(seed)
    xs = rng.standard_normal((n + n // 10, model.obs_dim))
    state = kf_init(model)

    def run(i: int) -> None:
        nonlocal state
        state, _ = kf_step(model, state, xs[i])

    return measure_throughput(run, n)


def cmd_eval(args: argparse.Namespace, sections: Sections) -> int:
    dataset = read_dataset(args.data, args.format)
    if not dataset.train or not dataset.test:
        raise ConfigError("eval needs both a train split (calibration) and a test split")
    checkpoint = load_checkpoint(args.checkpoint)
    options = _eval_options(sections)
    kf_model = _kalman_model(sections, checkpoint.config.input_dim)
    registry = detector_registry(checkpoint.params, kf_model)

    train_scores = registry.score_all(s.xs for s in dataset.train)
    test_scores = registry.score_all(s.xs for s in dataset.test)
    train_labels = np.concatenate([s.ys for s in dataset.train])
    test_labels = [s.ys for s in dataset.test]

    results: dict[str, EvalResult] = {}
    for name in registry.names():
        threshold, _ = calibrate_threshold(np.concatenate(train_scores[name]), train_labels)
        if name == "assm" and args.threshold is not None:
            threshold = args.threshold
        throughput = None
        if args.measure_throughput:
            n = int(options["throughput_samples"])
            bench_seed = derive_seed(args.seed, "bench")
            if name == "assm":
                throughput = bench(checkpoint.params, n, seed=bench_seed)
            else:
                throughput = _kalman_throughput(kf_model, n, bench_seed)
        results[name] = evaluate_scores(
            test_scores[name], test_labels, threshold,
            horizon=int(options["horizon"]),
            throughput=throughput,
        )

    logger.info("Evaluated %d methods on %d test sequences", len(results), len(dataset.test))
    sys.stdout.write(comparison_table(results).to_string() + "\n")
    sys.stdout.flush()
    if args.out:
        write_report(args.out, {"horizon": int(options["horizon"]), "methods": {k: v.to_dict() for k, v in results.items()}})
    return 0


def cmd_stream(args: argparse.Namespace, sections: Sections) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    values = dict(sections["stream"])
    values["threshold"] = args.threshold if args.threshold is not None else checkpoint.threshold
    handle = open_stream(checkpoint.params, StreamConfig.from_mapping(values))

    source = open(args.input, "r", encoding="utf-8") if args.input else sys.stdin
    try:
        for record in read_samples(source, checkpoint.config.input_dim):
            try:
                verdict = handle.push(np.asarray(record.x), record.y)
            except NonFiniteInputError as exc:
                logger.warning("Skipping sample t=%d: %s", record.t, exc)
                continue
            write_verdict(sys.stdout, verdict, t=record.t)
    finally:
        if source is not sys.stdin:
            source.close()
    logger.info("Stream finished: %s", handle.counters())
    return 0


def cmd_bench(args: argparse.Namespace, sections: Sections) -> int:
    params = load_checkpoint(args.checkpoint).params if args.checkpoint else None
    config = StreamConfig.from_mapping(sections["stream"])
    result = bench(
        params,
        args.n,
        d=args.state_dim or 16,
        m=args.input_dim,
        config=config,
        seed=derive_seed(args.seed, "bench"),
    )
    _emit({"n": args.n, "throughput": result.to_dict()}, args.out)
    return 0


def cmd_plot(args: argparse.Namespace, sections: Sections) -> int:
    dataset: Dataset = read_dataset(args.data, args.format)
    pool = dataset.test or dataset.train
    if not 0 <= args.index < len(pool):
        raise ConfigError(f"sequence index {args.index} out of range (0..{len(pool) - 1})")
    seq = pool[args.index]
    checkpoint = load_checkpoint(args.checkpoint)
    registry = detector_registry(checkpoint.params, _kalman_model(sections, checkpoint.config.input_dim))
    traces = {name: registry[name].score_sequence(seq.xs) for name in registry.names()}
    emit_trace_plot(traces, seq.ys, args.out, title=f"sequence {args.index}")
    return 0


# ---- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="pipeline seed (default: ASSM_SEED or 0)")
    common.add_argument("--config", default=None, help="YAML run configuration (default: ASSM_CONFIG)")
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    noise.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    parser = argparse.ArgumentParser(prog="assm", description="Adaptive state-space anomaly detection")
    verbs = parser.add_subparsers(dest="verb", required=True)

    p = verbs.add_parser("generate", parents=[common], help="write the synthetic spike dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--seq-len", type=int, default=None)
    p.add_argument("--channels", type=int, default=None)
    p.set_defaults(handler=cmd_generate)

    p = verbs.add_parser("train", parents=[common], help="train a model and save a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default=None, help="training report (JSON)")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--state-dim", type=int, default=None)
    p.set_defaults(handler=cmd_train)

    p = verbs.add_parser("eval", parents=[common], help="compare the model and the Kalman baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default=None, help="evaluation report (JSON)")
    p.add_argument("--threshold", type=float, default=None, help="override the calibrated model threshold")
    p.add_argument("--measure-throughput", action="store_true")
    p.set_defaults(handler=cmd_eval)

    p = verbs.add_parser("stream", parents=[common], help="NDJSON samples in, NDJSON verdicts out")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", default=None, help="sample file (default: stdin)")
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(handler=cmd_stream)

    p = verbs.add_parser("bench", parents=[common], help="single-stream throughput")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--state-dim", type=int, default=None)
    p.add_argument("--input-dim", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_bench)

    p = verbs.add_parser("plot", parents=[common], help="score traces of one sequence (SVG + CSV)")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--index", type=int, default=0, help="test sequence to plot")
    p.set_defaults(handler=cmd_plot)
    return parser


def _set_log_level(args: argparse.Namespace) -> None:
    if args.verbose:
        level: int | str = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    else:
        level = os.getenv("ASSM_LOG_LEVEL", "INFO").upper()
    logging.getLogger("assm_anomaly").setLevel(level)


def main(argv: Sequence[str] | None = None) -> int:
    load_environment()
    configure_logging()
    args = build_parser().parse_args(argv)
    _set_log_level(args)

    handler: Callable[[argparse.Namespace, Sections], int] = args.handler
    try:
        if args.seed is None:
            args.seed = get_default_seed()
        if not 0 <= args.seed < 2**64:
            raise ConfigError(f"--seed must be a 64-bit unsigned integer, got {args.seed}")
        sections = load_run_config(Path(args.config) if args.config else None)
        return handler(args, sections)
    except ASSMError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
