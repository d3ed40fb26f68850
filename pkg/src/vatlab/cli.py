"""Command line entry point: ``vatlab {train,eval,plot,inspect}``.

Any config key can be overridden with ``--key value`` (dashes or underscores).
Exit codes: 0 ok, 1 usage, 2 config or input file, 3 training divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from vatlab.config import DEFAULTS, RunConfig
from vatlab.sim import ConfigError

OUTPUT_ENV = "VATLAB_OUTPUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def parse_overrides(tokens: list[str]) -> dict[str, str]:
    """Turn ``--key value`` / ``--key=value`` pairs into a dict of config overrides."""
    out, i = {}, 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise UsageError(f"unexpected argument {tok!r}")
        key, eq, val = tok[2:].partition("=")
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"unknown option --{tok[2:].partition('=')[0]}")
        if not eq:
            if i + 1 >= len(tokens):
                raise UsageError(f"--{key} needs a value")
            i += 1
            val = tokens[i]
        out[key] = val
        i += 1
    return out


def _load_config(path: str | None, overrides: dict) -> RunConfig:
    return RunConfig.load(path, overrides) if path else RunConfig.from_dict({}, overrides)


def _output_dir(arg: str | None, cfg: RunConfig) -> Path:
    if arg:
        return Path(arg)
    if "output_dir" in cfg.values and cfg["output_dir"] != DEFAULTS["output_dir"]:
        return Path(cfg["output_dir"])
    return Path(os.environ.get(OUTPUT_ENV, cfg["output_dir"]))


# ------------------------------------------------------------------- subcommands

def cmd_train(args, overrides) -> int:
    from vatlab.ddpg.trainer import Trainer

    cfg = _load_config(args.config, overrides)
    out = _output_dir(args.out, cfg)
    out.mkdir(parents=True, exist_ok=True)
    cfg = cfg.replace(output_dir=str(out))
    cfg.save(out / "config.json")
    log_path = out / "train_log.jsonl"
    if not args.resume and log_path.exists():
        log_path.unlink()
    trainer = Trainer(cfg, log_path=log_path, out_dir=out)
    if args.resume:
        trainer.load_checkpoint(args.resume)

    def progress(rec):
        if not args.quiet:
            print(f"episode {rec['episode']:>5} worker {rec['worker']} {rec['source']:<5} "
                  f"mean_reward {rec['mean_reward']:.4f} updates {rec['shared_updates']}", flush=True)

    try:
        trainer.train(progress)
    except KeyboardInterrupt:
        trainer.save_checkpoint(out / "checkpoint.vatp")
        print(f"interrupted; checkpoint written to {out / 'checkpoint.vatp'}", file=sys.stderr)
        return 130
    trainer.save_checkpoint(out / "checkpoint.vatp")
    checksum = trainer.save_weights(out / "weights.vatp")
    print(json.dumps({"episodes": trainer.next_episode, "weights": str(out / "weights.vatp"), "checksum": checksum}))
    return EXIT_OK


def cmd_eval(args, overrides) -> int:
    from vatlab.behaviors import parse_scenario
    from vatlab.ddpg.trainer import load_actor
    from vatlab.evaluation import (HtgPolicy, LearnedPolicy, RandomPolicy, StationaryPolicy, run_scenario,
                                   write_logs_jsonl, write_report_csv)
    from vatlab.observe import ObservationMode

    cfg = _load_config(args.config, overrides)
    obs_mode = cfg.observation
    if args.weights:
        if not Path(args.weights).exists():
            return _fail("FileNotFound", f"weights file {args.weights} does not exist", EXIT_CONFIG)
        actor, net_cfg, _ = load_actor(args.weights)
        policy = LearnedPolicy(actor, net_cfg)
        obs_mode = ObservationMode(net_cfg.obs_kind, net_cfg.raster_width, net_cfg.raster_height,
                                   cfg["vector_noise_std"])
    else:
        builtin = {"htg": lambda: HtgPolicy(cfg.htg_params()),
                   "htg-noisy": lambda: HtgPolicy(cfg.htg_params(), cfg.noise),
                   "random": RandomPolicy, "stationary": StationaryPolicy}
        if args.policy not in builtin:
            raise UsageError(f"unknown policy {args.policy!r}; choose from {sorted(builtin)} or pass --weights")
        policy = builtin[args.policy]()
    try:
        scenario = parse_scenario(args.scenario)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = run_scenario(policy, scenario, runs=args.runs, steps=args.steps, seed=cfg.seed, arena=cfg.arena,
                          metric=cfg.metric, obs_mode=obs_mode)
    out = _output_dir(args.out, cfg)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"eval_{report.policy}_{args.scenario.replace(':', '_')}"
    write_report_csv(out / f"{stem}.csv", [report])
    write_logs_jsonl(out / f"{stem}.jsonl", report.logs)
    print(json.dumps(report.row()))
    return EXIT_OK


def _read_jsonl(path: Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def cmd_plot(args, overrides) -> int:
    from vatlab.evaluation import read_logs_jsonl
    from vatlab.plot import learning_curve_svg, trajectory_svg

    cfg = _load_config(args.config, overrides)
    out = Path(args.out) if args.out else None
    written = []
    for p in map(Path, args.logs):
        if not p.exists():
            return _fail("FileNotFound", f"log file {p} does not exist", EXIT_CONFIG)
        recs = _read_jsonl(p)
        if not recs:
            return _fail("EmptyLog", f"{p} contains no records", EXIT_CONFIG)
        dest = out or p.parent
        dest.mkdir(parents=True, exist_ok=True)
        if "episode" in recs[0]:
            written.append(learning_curve_svg(recs, dest / f"{p.stem}_curve.svg", window=args.window))
        elif "tracker" in recs[0]:
            size = (cfg["arena_width_cm"], cfg["arena_height_cm"])
            for run in read_logs_jsonl(p)[: args.max_runs]:
                written.append(trajectory_svg(run, dest / f"{p.stem}_run{run[0]['run']:03d}.svg", size))
        else:
            return _fail("UnknownLog", f"{p} is neither a training nor an evaluation log", EXIT_CONFIG)
    for w in written:
        print(w)
    return EXIT_OK


def cmd_inspect(args, overrides) -> int:
    from vatlab.autodiff import load_params

    flat, header = load_params(args.weights)
    total = sum(int(v.size) for k, v in flat.items() if not k.startswith("adam_"))
    meta = header.get("meta", {})
    print(f"file: {args.weights}")
    print(f"format_version: {header['format_version']}")
    print(f"kind: {meta.get('kind', 'params')}")
    if "net" in meta:
        print("net_config: " + json.dumps(meta["net"], sort_keys=True))
    for key in ("episode", "episodes", "updates"):
        if key in meta:
            print(f"{key}: {meta[key]}")
    print("tensors:")
    for e in header["entries"]:
        print(f"  {e['name']:<32} {e['dtype']:<5} {tuple(e['shape'])}")
    print(f"total_parameters: {total}")
    print(f"checksum: {header['checksum']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vatlab", description="Visual active tracking: training, evaluation and inspection.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    t = sub.add_parser("train", help="train the actor-critic")
    t.add_argument("--config", help="JSON run config (defaults reproduce the reference hyperparameters)")
    t.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or the config's output_dir)")
    t.add_argument("--resume", help="checkpoint to resume from")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a policy on a target scenario")
    e.add_argument("--config")
    e.add_argument("--policy", default="htg", help="htg, htg-noisy, random or stationary")
    e.add_argument("--weights", help="trained weights file (overrides --policy)")
    e.add_argument("--scenario", default="circular:3:3:0.01")
    e.add_argument("--runs", type=int, default=20)
    e.add_argument("--steps", type=int, default=250)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    pl = sub.add_parser("plot", help="render SVGs from training or evaluation logs")
    pl.add_argument("logs", nargs="+")
    pl.add_argument("--config")
    pl.add_argument("--out")
    pl.add_argument("--window", type=int, default=50)
    pl.add_argument("--max-runs", type=int, default=5)
    pl.set_defaults(func=cmd_plot)

    i = sub.add_parser("inspect", help="summarise a weights or checkpoint file")
    i.add_argument("weights")
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv: list[str] | None = None) -> int:
    from vatlab.autodiff import ParamFileError
    from vatlab.ddpg.trainer import DivergenceError

    parser = build_parser()
    try:
        args, rest = parser.parse_known_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand (train, eval, plot, inspect)")
        overrides = parse_overrides(rest)
        if args.command == "inspect" and overrides:
            raise UsageError("inspect takes no config overrides")
        return args.func(args, overrides)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail("UsageError", str(exc), EXIT_USAGE)
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), EXIT_CONFIG)
    except ParamFileError as exc:
        return _fail("ParamFileError", str(exc), EXIT_CONFIG)
    except FileNotFoundError as exc:
        return _fail("FileNotFound", str(exc), EXIT_CONFIG)
    except DivergenceError as exc:
        return _fail("DivergenceError", str(exc), EXIT_DIVERGED)


if __name__ == "__main__":
    sys.exit(main())
