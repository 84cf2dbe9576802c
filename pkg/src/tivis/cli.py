"""Command-line interface.

One command per process. Exit code 0 on success; on failure a single
machine-readable line "error: <ErrorType>: <message>" goes to stderr and
the exit code is 1 (argparse usage errors keep their conventional 2).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import entropy as entropy_mod
from . import reports
from .errors import TivisError
from .model_io import load_model, save_model
from .nn import forward
from .ppm import read_ppm, write_ppm
from .probes import ScreenRect, classify_report, invert, zero_square
from .shapes import generate_dataset, load_dataset, save_dataset
from .training import TrainConfig, evaluate, reference_architecture, train, validation_split
from .transforms import (
    DEFAULT_BATTERY_TEXT,
    DEFAULT_SCHEDULE_TEXT,
    TransformSchedule,
    constant_image,
    parse_transform_list,
    run_battery,
)
from .visualizer import (
    OptimConfig,
    StoppingCriterion,
    baseline_visualize,
    default_stop,
    visualize,
)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TivisError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root random seed")
    common.add_argument("--model", help="model file path")
    common.add_argument("--out", help="output path")
    common.add_argument("--report", help="write a structured text report here")

    parser = argparse.ArgumentParser(
        prog="tivis",
        description="Transformation-invariant class visualizations for small CNNs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-dataset", parents=[common], help="generate the shapes dataset")
    p.add_argument("--count-per-class", type=int, default=100)
    p.set_defaults(func=_cmd_make_dataset)

    p = sub.add_parser("train", parents=[common], help="train the reference classifier")
    p.add_argument("--dataset", help="dataset directory (default: generate from --seed)")
    p.add_argument("--count-per-class", type=int, default=100)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--val-split", type=float, default=0.2)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", parents=[common], help="top-k report for images")
    p.add_argument("images", nargs="+", help="PPM files to classify")
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--variants", default="original", help="comma list: original,screened,inverted")
    p.add_argument("--rect", help="x,y,w,h for the screened variant")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("visualize", parents=[common], help="transformation-robust visualization")
    _add_visualize_args(p)
    p.add_argument("--schedule", default=DEFAULT_SCHEDULE_TEXT)
    p.add_argument("--battery", default=DEFAULT_BATTERY_TEXT)
    p.add_argument("--max-outer", type=int, help="outer iteration cap (default: 3 schedule passes)")
    p.set_defaults(func=_cmd_visualize)

    p = sub.add_parser("baseline", parents=[common], help="classic single-pass visualization")
    _add_visualize_args(p)
    p.add_argument("--battery", help="optionally evaluate this battery on the result")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("sweep-init", parents=[common], help="gray-level initialization sweep")
    _add_visualize_args(p)
    p.add_argument("--schedule", default=DEFAULT_SCHEDULE_TEXT)
    p.add_argument("--battery", default=DEFAULT_BATTERY_TEXT)
    p.add_argument("--max-outer", type=int)
    p.add_argument("--grays", help="comma list of gray levels (default: 0,10,...,250,255)")
    p.add_argument("--window", type=int, default=entropy_mod.DEFAULT_WINDOW)
    p.add_argument("--stride", type=int, default=entropy_mod.DEFAULT_STRIDE)
    p.set_defaults(func=_cmd_sweep_init)

    p = sub.add_parser("entropy", parents=[common], help="entropy analytics of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--window", type=int, default=entropy_mod.DEFAULT_WINDOW)
    p.add_argument("--stride", type=int, default=entropy_mod.DEFAULT_STRIDE)
    p.add_argument("--map-out", help="write the quantized entropy map as a PPM")
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("invert", parents=[common], help="color-invert an image")
    p.add_argument("--image", required=True)
    p.set_defaults(func=_cmd_invert)

    p = sub.add_parser("screen", parents=[common], help="zero-square screening")
    p.add_argument("--image", required=True)
    p.add_argument("--rect", required=True, help="x,y,w,h")
    p.set_defaults(func=_cmd_screen)

    return parser


def _add_visualize_args(p):
    p.add_argument("--class", dest="target_class", required=True, help="class name or index")
    p.add_argument("--init", default="0", help="gray level 0-255 or a PPM path (default 0)")
    p.add_argument("--q-target", type=float, default=0.99)
    p.add_argument("--q-test", type=float, default=0.8)
    p.add_argument("--step-size", type=float, default=1.0)
    p.add_argument("--max-inner", type=int, default=500)
    p.add_argument("--gradient", choices=("raw", "l2_normalized"), default="l2_normalized")
    p.add_argument(
        "--objective", choices=("softmax_confidence", "logit"), default="softmax_confidence"
    )


def _require(args, name: str):
    value = getattr(args, name.replace("-", "_"))
    if value is None:
        raise ValueError(f"--{name} is required for this command")
    return value


def _load_model(args):
    return load_model(_require(args, "model"))


def _resolve_class(model, text):
    try:
        return model.class_index(int(text))
    except ValueError:
        return model.class_index(text)


def _load_init(model, text):
    try:
        gray = float(text)
    except ValueError:
        return read_ppm(text)
    if not 0 <= gray <= 255:
        raise ValueError(f"init gray level must be in [0, 255], got {gray}")
    _, h, w = model.input_shape
    return constant_image(h, w, gray)


def _parse_rect(text) -> ScreenRect:
    parts = [int(t) for t in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"rect must be x,y,w,h, got {text!r}")
    return ScreenRect(*parts)


def _stop_criterion(args, schedule) -> StoppingCriterion:
    if args.max_outer:
        return StoppingCriterion(q_test=args.q_test, max_outer_iterations=args.max_outer)
    return default_stop(schedule, q_test=args.q_test)


def _optim_config(args) -> OptimConfig:
    return OptimConfig(
        q_target=args.q_target,
        step_size=args.step_size,
        max_inner_steps=args.max_inner,
        gradient_mode=args.gradient,
        objective=args.objective,
    )


def _write_report(args, text: str) -> None:
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _cmd_make_dataset(args) -> int:
    out = _require(args, "out")
    dataset = generate_dataset(args.seed, args.count_per_class)
    save_dataset(dataset, out)
    print(f"wrote {len(dataset)} images to {out}")
    return 0


def _cmd_train(args) -> int:
    out = _require(args, "out")
    if args.dataset:
        dataset = load_dataset(args.dataset)
    else:
        dataset = generate_dataset(args.seed, args.count_per_class)
    arch = reference_architecture(args.seed, image_size=dataset.images.shape[1])
    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        val_fraction=args.val_split,
    )
    result = train(dataset, arch, config)
    save_model(result.model, out)
    val_acc = evaluate(result.model, validation_split(dataset, config))
    if args.report:
        _write_report(args, reports.train_report(result.history, val_acc))
    print(f"wrote model to {out} (val accuracy {val_acc:.4f})")
    return 0


def _cmd_classify(args) -> int:
    model = _load_model(args)
    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    rect = _parse_rect(args.rect) if args.rect else None
    images = [(path, read_ppm(path)) for path in args.images]
    report = classify_report(model, images, k=args.k, variants=variants, screen_rect=rect)
    _write_report(args, reports.class_report(report))
    return 0


def _cmd_visualize(args) -> int:
    model = _load_model(args)
    target = _resolve_class(model, args.target_class)
    init = _load_init(model, args.init)
    steps = parse_transform_list(args.schedule)
    battery = parse_transform_list(args.battery)
    schedule = TransformSchedule(steps=steps, battery=battery)
    config = _optim_config(args)
    stop = _stop_criterion(args, schedule)
    image, trace = visualize(model, target, init, schedule, config, stop)
    if args.out:
        write_ppm(image, args.out)
    text = reports.run_report(
        trace,
        config,
        stop,
        target,
        model.class_names[target],
        args.schedule,
        args.battery,
        entropy_mod.image_id(image),
    )
    _write_report(args, text)
    print(f"status {trace.status} after {len(trace.records)} outer iterations")
    return 0


def _cmd_baseline(args) -> int:
    model = _load_model(args)
    target = _resolve_class(model, args.target_class)
    init = _load_init(model, args.init)
    config = _optim_config(args)
    image = baseline_visualize(model, target, init, config)
    if args.out:
        write_ppm(image, args.out)
    pred = forward(model, image)
    print(f"confidence {pred.confidences[target]!r}")
    if args.battery:
        battery = parse_transform_list(args.battery)
        results = run_battery(model, image, target, battery)
        confs = np.array([c for _, c in results])
        print(f"battery_min {confs.min()!r} battery_mean {confs.mean()!r}")
    return 0


def _cmd_sweep_init(args) -> int:
    model = _load_model(args)
    target = _resolve_class(model, args.target_class)
    steps = parse_transform_list(args.schedule)
    battery = parse_transform_list(args.battery)
    schedule = TransformSchedule(steps=steps, battery=battery)
    config = _optim_config(args)
    stop = _stop_criterion(args, schedule)
    if args.grays:
        gray_levels = tuple(int(g) for g in args.grays.split(","))
    else:
        gray_levels = entropy_mod.DEFAULT_GRAY_LEVELS
    report = entropy_mod.init_sweep(
        model,
        target,
        schedule,
        config,
        stop,
        gray_levels=gray_levels,
        window=args.window,
        stride=args.stride,
    )
    text = reports.sweep_report(
        report, config, stop, target, model.class_names[target], args.schedule, args.battery
    )
    _write_report(args, text)
    best = "-" if report.best_init is None else report.best_init
    print(f"best_init {best}")
    return 0


def _cmd_entropy(args) -> int:
    image = read_ppm(args.image)
    gray = entropy_mod.to_grayscale(image)
    whole = entropy_mod.entropy2d(entropy_mod.cooccurrence(gray))
    emap = entropy_mod.entropy_map(gray, window=args.window, stride=args.stride)
    note = None
    try:
        total, quantized = entropy_mod.second_order_entropy(emap)
    except entropy_mod.MapTooSmallError as exc:
        total, quantized = None, entropy_mod.quantize_map(emap)
        note = f"second-order entropy unavailable: {exc}"
    if args.map_out:
        rgb = np.repeat(quantized[:, :, None].astype(np.float64), 3, axis=2)
        write_ppm(rgb, args.map_out)
    _write_report(args, reports.entropy_report(args.image, whole, emap, total, note))
    return 0


def _cmd_invert(args) -> int:
    out = _require(args, "out")
    write_ppm(invert(read_ppm(args.image)), out)
    print(f"wrote {out}")
    return 0


def _cmd_screen(args) -> int:
    out = _require(args, "out")
    model = _load_model(args)
    image = read_ppm(args.image)
    rect = _parse_rect(args.rect)
    write_ppm(zero_square(image, rect, model), out)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
