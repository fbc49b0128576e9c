"""Command line entry point: ``rgmca {generate,run,bench,summarize}``."""
import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import bench
from .metrics import delta_A, success
from .model import load_scene, save_scene

log = logging.getLogger("rgmca")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _config(args):
    if args.config:
        config = bench.load_config(args.config, n_trials=args.trials)
    else:
        config = bench.preset_experiment(args.preset or "amplitude")
        if args.trials is not None:
            config = dataclasses.replace(config, n_trials=args.trials)
    if getattr(args, "base_seed", None) is not None:
        config = dataclasses.replace(config, base_seed=args.base_seed)
    return config


def cmd_generate(args):
    config = _config(args)
    value = args.value if args.value is not None else config.sweep_values[0]
    seed = args.seed if args.seed is not None else bench.trial_seed(config.base_seed, 0, 0)
    scene = config.make_scene(value, seed)
    save_scene(scene, args.out, seed=seed, sweep_param=config.sweep_param, sweep_value=value, experiment=config.name)
    print(f"wrote {scene.shape[0]}x{scene.shape[2]} scene with {scene.shape[1]} sources to {args.out}")
    return EXIT_OK


def cmd_run(args):
    scene = load_scene(args.scene)
    n = args.n or scene.A.shape[1]
    config = bench.ExperimentConfig(n=n, algorithms=(args.algorithm,), n_trials=1)
    pcp = None
    if args.algorithm == "pcp_gmca":
        pcp = bench._pcp_params(config, args.pcp_lambda)
    solver = dataclasses.replace(config.solver, rng_seed=args.seed)
    result = bench.ALGORITHMS[args.algorithm](scene.X, n, solver, pcp)
    d = delta_A(result.A_est, scene.A)
    print(f"algorithm={args.algorithm} delta_A={bench._fmt(d)} success={int(success(d))}")
    return EXIT_OK


def cmd_bench(args):
    config = _config(args)
    log.info("running %s: %d values x %d trials x %d algorithms",
             config.name, len(config.sweep_values), config.n_trials, len(config.algorithms))

    def progress(done, total):
        log.info("trial %d/%d", done, total)

    records = bench.run_sweep(config, workers=args.workers, progress=progress if args.verbose else None)
    text = bench.records_to_csv(records, timings=args.timings)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.summary:
        Path(args.summary).write_text(bench.summary_to_csv(bench.summarize(records)))
    return EXIT_OK


def cmd_summarize(args):
    records = bench.read_records(Path(args.records).read_text())
    text = bench.summary_to_csv(bench.summarize(records))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="rgmca", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_args(p):
        p.add_argument("--preset", choices=["amplitude", "count", "observations"])
        p.add_argument("--config", help="TOML experiment file")
        p.add_argument("--trials", type=int, help="override n_trials")

    p = sub.add_parser("generate", help="write one synthetic scene to a directory")
    experiment_args(p)
    p.add_argument("--value", type=float, help="sweep value (default: first of the sweep)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="separate a stored scene and print delta_A")
    p.add_argument("--scene", required=True)
    p.add_argument("--algorithm", choices=sorted(bench.ALGORITHMS), default="rgmca")
    p.add_argument("--n", type=int, help="number of sources (default: from the scene)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pcp-lambda", type=float)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run a Monte-Carlo sweep")
    experiment_args(p)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="records CSV (default: stdout)")
    p.add_argument("--summary", help="also write the summary CSV here")
    p.add_argument("--timings", action="store_true", help="write measured wall times (breaks byte reproducibility)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("summarize", help="records CSV -> summary CSV")
    p.add_argument("records")
    p.add_argument("--out")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except bench.ConfigError as exc:
        print(f"rgmca: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"rgmca: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, OSError) else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
