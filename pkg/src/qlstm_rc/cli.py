"""Command-line driver: ``qlstm-rc {train,eval,gradcheck}``.

Any long option can also be set through an environment variable named
``QLSTM_RC_<OPTION>`` (upper case, dashes as underscores), for example
``QLSTM_RC_WORKERS=4``. Flags given on the command line win.

Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 gradient-check failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .a3c import Hyperparams, WorkerFailure
from .exceptions import ConfigurationError
from .experiment import LAYER_CHOICES, SCENARIOS, RunConfig, run_eval, run_train
from .gradcheck import BLOCKS, format_report, run_gradcheck

ENV_PREFIX = "QLSTM_RC_"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_GRADCHECK = 0, 1, 2, 3

logger = logging.getLogger("qlstm_rc")


def _env_default(name: str, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {ENV_PREFIX}{name.upper()}: {raw!r}") from exc


def _run_options(parser: argparse.ArgumentParser, episodes_default: int) -> None:
    hp = Hyperparams()
    d = _env_default
    parser.add_argument("--scenario", choices=sorted(SCENARIOS), default=d("scenario", "empty5-fixed"))
    parser.add_argument("--mode", choices=("trainable", "reservoir"), default=d("mode", "reservoir"))
    parser.add_argument("--layers", type=int, choices=LAYER_CHOICES, default=d("layers", 1, int))
    parser.add_argument("--workers", type=int, default=d("workers", hp.n_workers, int))
    parser.add_argument("--episodes", type=int, default=d("episodes", episodes_default, int))
    parser.add_argument("--seed", type=int, default=d("seed", 0, int))
    parser.add_argument("--lr", type=float, default=d("lr", hp.learning_rate, float))
    parser.add_argument("--gamma", type=float, default=d("gamma", hp.gamma, float))
    parser.add_argument("--lookup-steps", type=int, default=d("lookup-steps", hp.lookup_steps, int))
    parser.add_argument("--entropy-coef", type=float,
                        default=d("entropy-coef", hp.entropy_coef, float))
    parser.add_argument("--value-coef", type=float,
                        default=d("value-coef", hp.value_loss_coef, float))
    parser.add_argument("--grad-method", choices=("adjoint", "shift"),
                        default=d("grad-method", "adjoint"))
    parser.add_argument("--out", default=d("out", None))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlstm-rc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train with asynchronous advantage actor-critic")
    _run_options(tr, 3000)
    tr.add_argument("--checkpoint-every", type=int,
                    default=_env_default("checkpoint-every", 500, int))
    tr.add_argument("--timestamps", choices=("wall", "none"), default=_env_default("timestamps", "wall"),
                    help="'none' writes 0 in the wall-clock column so reruns are byte-identical")

    ev = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    ev.add_argument("checkpoint")
    _run_options(ev, 100)

    gc = sub.add_parser("gradcheck", help="finite-difference and oracle checks")
    gc.add_argument("--seed", type=int, default=_env_default("seed", 0, int))
    gc.add_argument("--cases", type=int, default=3)
    gc.add_argument("--corrupt", choices=BLOCKS, default=None,
                    help="perturb one analytic block to exercise the failure path")
    return parser


def _config(args, episodes: int) -> RunConfig:
    hp = Hyperparams(
        learning_rate=args.lr, gamma=args.gamma, lookup_steps=args.lookup_steps,
        n_workers=args.workers, value_loss_coef=args.value_coef,
        entropy_coef=args.entropy_coef, max_episodes=episodes,
    )
    out = args.out or os.path.join(
        "runs", f"{args.scenario}_{args.mode}_L{args.layers}_s{args.seed}"
    )
    return RunConfig(
        scenario=args.scenario, mode=args.mode, n_layers=args.layers, hyperparams=hp,
        seed=args.seed, out=out, grad_method=args.grad_method,
        checkpoint_every=getattr(args, "checkpoint_every", 0),
        timestamps=getattr(args, "timestamps", "wall") == "wall",
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if args.command == "gradcheck":
        results = run_gradcheck(seed=args.seed, cases=args.cases, corrupt=args.corrupt)
        print(format_report(results))
        failed = [r.block for r in results if not r.passed]
        if failed:
            print(f"gradcheck FAILED in: {', '.join(failed)}", file=sys.stderr)
            return EXIT_GRADCHECK
        return EXIT_OK

    try:
        if args.command == "train":
            config = _config(args, args.episodes)
            summary = run_train(config)
            print(json.dumps(summary, indent=2, sort_keys=True))
        else:
            config = _config(args, 1)
            stats = run_eval(args.checkpoint, config, args.episodes, out=args.out)
            print(json.dumps(stats, indent=2, sort_keys=True))
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WorkerFailure as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        print("interrupted; partial scores and checkpoint written", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
