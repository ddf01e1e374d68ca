"""Command line entry point: ``fractalflow {train,sweep,phantom,eval,colorize}``."""

import argparse
import json
import logging
import os
import sys

from .data.colorwheel import flow_to_color
from .data.flo import read_flo, write_flo
from .data.imageio import save_grayscale, save_rgb
from .data.phantom import DEFAULT_EDGE_WIDTH, default_circles, make_phantom_pair, shepp_logan
from .errors import FormatError, TrainingDivergedError
from .metrics import evaluate
from .runner import ExperimentConfig, run_experiment, sweep, sweep_configs


def _add_training_args(parser, sweep_mode=False):
    parser.add_argument("--frames", nargs=2, metavar=("A", "B"), help="frame 1 and frame 2 images")
    parser.add_argument("--gt", help="ground-truth .flo for the frame pair")
    parser.add_argument("--size", type=int, default=256, help="phantom size when no frames are given")
    parser.add_argument("--shift", type=float, default=3.0, help="phantom disc displacement in pixels")
    parser.add_argument("--edge-width", type=float, default=DEFAULT_EDGE_WIDTH, help="phantom disc rim width")
    parser.add_argument("--lambda1", type=float, default=0.2)
    parser.add_argument("--lambda2", type=float, default=0.8)
    if sweep_mode:
        parser.add_argument("--lambda-tv", type=float, nargs="+", default=[0.0, 1e-3, 1e-2, 1e-1])
    else:
        parser.add_argument("--lambda-tv", type=float, default=0.0)
    parser.add_argument("--epochs", type=int, default=10000)
    parser.add_argument("--lr", type=float, default=1e-4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--depth", type=int, default=4)
    parser.add_argument("--width", type=int, default=32, help="base channel width of the network")
    parser.add_argument("--loss-norm", choices=("mean", "sum"), default="mean")
    parser.add_argument("--name", help="benchmark label used in tables and run directories")
    parser.add_argument("--log-every", type=int, default=100)
    parser.add_argument("--out", required=True, help="output directory")


def _config_from_args(args, lambda_tv):
    return ExperimentConfig(
        frames=args.frames,
        gt=args.gt,
        phantom_size=args.size,
        phantom_shift=args.shift,
        phantom_edge_width=args.edge_width,
        lambda1=args.lambda1,
        lambda2=args.lambda2,
        lambda_tv=lambda_tv,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        depth=args.depth,
        base_width=args.width,
        loss_normalization=args.loss_norm,
        name=args.name,
        output_dir=args.out,
        log_every=args.log_every,
    )


def cmd_train(args):
    summary = run_experiment(_config_from_args(args, args.lambda_tv))
    print(json.dumps(summary.as_dict(), indent=2))
    return 0


def cmd_sweep(args):
    base = _config_from_args(args, 0.0)
    rows = sweep(sweep_configs(base, args.lambda_tv, args.out), output_dir=args.out)
    print(json.dumps(rows, indent=2))
    return 0 if all(r["status"] == "ok" for r in rows) else 1


def cmd_phantom(args):
    os.makedirs(args.out, exist_ok=True)
    circles = default_circles(args.size, args.shift, args.edge_width)
    frame1, frame2, gt = make_phantom_pair(args.size, circles)
    save_grayscale(os.path.join(args.out, "phantom.pgm"), shepp_logan(args.size))
    save_grayscale(os.path.join(args.out, "frame1.pgm"), frame1)
    save_grayscale(os.path.join(args.out, "frame2.pgm"), frame2)
    write_flo(os.path.join(args.out, "gt.flo"), gt)
    save_rgb(os.path.join(args.out, "gt.png"), flow_to_color(gt))
    print(os.path.abspath(args.out))
    return 0


def cmd_eval(args):
    report = evaluate(read_flo(args.flow), read_flo(args.gt))
    text = json.dumps(report.as_dict(), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_colorize(args):
    flow = read_flo(args.flow)
    save_rgb(args.out, flow_to_color(flow, args.max_magnitude))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="fractalflow", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on one frame pair (or the phantom)")
    _add_training_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train once per --lambda-tv value and tabulate")
    _add_training_args(p, sweep_mode=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("phantom", help="write the moving-disc phantom pair and its flow")
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--shift", type=float, default=3.0)
    p.add_argument("--edge-width", type=float, default=DEFAULT_EDGE_WIDTH)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("eval", help="AEE/SDEE/AAE/SDAE of a .flo against ground truth")
    p.add_argument("--flow", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", help="also write the metrics JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("colorize", help="render a .flo with the Middlebury color wheel")
    p.add_argument("--flow", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-magnitude", type=float, default=None)
    p.set_defaults(func=cmd_colorize)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergedError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
