"""Command-line entry point.

Subcommands:

* ``train``  — train one (environment, model) config over its seeds.
* ``sweep``  — run a grid of configs from a TOML file, one combined summary.
* ``params`` — print the per-model trainable-parameter table for an env.
* ``report`` — rebuild summary.md from the learning-curve CSVs in a directory.
* ``check``  — run the fast self-verification suite.

Settings resolve as: built-in defaults, then config file, then flags
(CHEBDQN_OUT_DIR sits between file and flag for the output directory).
Exit codes: 0 success, 1 failed check, 2 usage/config error, 3 I/O error.
Progress goes to stderr; results live in files under the output directory.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys

from .agent import ARCH_CHEBYSHEV, ARCH_MLP
from .checks import run_checks
from .envs import make_env
from .errors import ConfigError, UsageError
from .harness import (
    ENV_SETTINGS,
    RunResult,
    aggregate,
    build_experiment_config,
    count_parameters,
    load_toml,
    read_learning_curve,
    reference_count,
    run_experiment,
    write_summary,
)

OUT_DIR_ENV_VAR = "CHEBDQN_OUT_DIR"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"seeds must be comma-separated integers, got {text!r}")


def _apply_out_dir(values: dict, flag_value: str | None) -> None:
    """Output-directory precedence: --out flag > CHEBDQN_OUT_DIR > config file."""
    env_value = os.environ.get(OUT_DIR_ENV_VAR)
    if flag_value is not None:
        values["out_dir"] = flag_value
    elif env_value:
        values["out_dir"] = env_value


def _print_aggregates(aggregates) -> None:
    for agg in aggregates:
        med = agg.median_episodes_to_threshold
        reached = "not reached" if math.isinf(med) else f"{med:g}"
        print(
            f"{agg.env_id} {agg.model}: final {agg.mean_final:.1f} ± "
            f"{agg.std_final:.1f} over {agg.seeds} seed(s), "
            f"median episodes-to-threshold {reached}, "
            f"parameters {agg.parameter_count:,}"
        )


def cmd_train(args: argparse.Namespace) -> int:
    values = dict(load_toml(args.config)) if args.config else {}
    for key in ("env", "arch", "degree", "episodes", "window", "threshold", "jobs"):
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    if args.seeds is not None:
        values["seeds"] = _parse_seeds(args.seeds)
    _apply_out_dir(values, args.out)
    config = build_experiment_config(values)
    results = run_experiment(config, verbose=not args.quiet)
    aggregates = [aggregate(results)]
    summary_path = os.path.join(config.out_dir, "summary.md")
    write_summary(summary_path, aggregates)
    _print_aggregates(aggregates)
    print(f"summary written to {summary_path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    shared = dict(load_toml(args.config))
    runs = shared.pop("runs", None)
    if not runs:
        raise ConfigError("sweep config must define at least one [[runs]] table")
    for key in ("env", "arch", "degree"):
        if key in shared:
            raise ConfigError(f"{key!r} must be set per [[runs]] entry, not globally")
    _apply_out_dir(shared, args.out)
    aggregates = []
    summary_dir = None
    for run_table in runs:
        values = {**shared, **run_table}
        config = build_experiment_config(values)
        summary_dir = summary_dir or config.out_dir
        results = run_experiment(config, verbose=not args.quiet)
        aggregates.append(aggregate(results))
    summary_path = os.path.join(summary_dir, "summary.md")
    write_summary(summary_path, aggregates)
    _print_aggregates(aggregates)
    print(f"summary written to {summary_path}")
    return EXIT_OK


PARAMS_ROWS = (("mlp", None), ("cheb", 4), ("cheb", 6), ("cheb", 8))


def cmd_params(args: argparse.Namespace) -> int:
    env = make_env(args.env)
    hidden = ENV_SETTINGS[args.env]["hidden"]
    hidden_text = "x".join(str(h) for h in hidden)
    print(
        f"Parameter counts for {args.env} "
        f"(obs dim {env.obs_dim}, actions {env.num_actions}, hidden {hidden_text}):"
    )
    print(f"  {'model':<7} {'input':>5} {'parameters':>11}  reference")
    mismatch = False
    for arch, degree in PARAMS_ROWS:
        model = "mlp" if arch == ARCH_MLP else f"cheb{degree}"
        input_dim = env.obs_dim if degree is None else env.obs_dim * (degree + 1)
        count = count_parameters(args.env, arch, degree)
        ref = reference_count(args.env, model)
        if ref is None:
            note = "-"
        elif ref == count:
            note = "matches"
        else:
            note = f"{ref:,} (differs)"
            mismatch = True
        print(f"  {model:<7} {input_dim:>5} {count:>11,}  {note}")
    if mismatch:
        print(
            "  note: reference totals marked (differs) do not follow from the\n"
            "  stated layer sizes; the computed values are what this package builds."
        )
    return EXIT_OK


_CSV_NAME = re.compile(r"^(?P<env>[a-z0-9-]+)_(?P<model>[a-z0-9]+)_seed(?P<seed>\d+)\.csv$")


def cmd_report(args: argparse.Namespace) -> int:
    out_dir = args.out or os.environ.get(OUT_DIR_ENV_VAR) or "results"
    groups: dict[tuple[str, str], list[RunResult]] = {}
    for name in sorted(os.listdir(out_dir)):
        match = _CSV_NAME.match(name)
        if not match:
            continue
        env_id, model, seed = match["env"], match["model"], int(match["seed"])
        if env_id not in ENV_SETTINGS:
            continue
        rows = read_learning_curve(os.path.join(out_dir, name))
        if not rows:
            continue
        threshold = args.threshold
        if threshold is None:
            threshold = ENV_SETTINGS[env_id]["threshold"]
        reached = next(
            (row["episode"] for row in rows if row["trailing_mean"] >= threshold), None
        )
        if model == "mlp":
            arch, degree = ARCH_MLP, None
        elif model.startswith("cheb") and model[4:].isdigit():
            arch, degree = ARCH_CHEBYSHEV, int(model[4:])
        else:
            continue
        groups.setdefault((env_id, model), []).append(
            RunResult(
                env_id=env_id,
                model=model,
                seed=seed,
                episodes=[],
                final_score=rows[-1]["trailing_mean"],
                episodes_to_threshold=reached,
                parameter_count=count_parameters(env_id, arch, degree),
                wall_clock_seconds=0.0,
            )
        )
    if not groups:
        raise ConfigError(f"no learning-curve CSVs found in {out_dir}")
    aggregates = [
        aggregate(groups[key]) for key in sorted(groups, key=lambda k: (k[0], len(k[1]), k[1]))
    ]
    summary_path = os.path.join(out_dir, "summary.md")
    write_summary(summary_path, aggregates)
    _print_aggregates(aggregates)
    print(f"summary written to {summary_path}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    results = run_checks(gradient_perturbation=args.perturb_gradient)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {result.name}: {result.detail}")
    if all(r.passed for r in results):
        print(f"all {len(results)} checks passed")
        return EXIT_OK
    failed = sum(1 for r in results if not r.passed)
    print(f"{failed} of {len(results)} checks failed")
    return EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chebdqn",
        description=(
            "Train and compare DQN agents with Chebyshev polynomial features "
            "on classic control tasks."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train one model config over its seeds")
    train.add_argument("--config", help="TOML config file (default: none)")
    train.add_argument(
        "--env",
        choices=sorted(ENV_SETTINGS),
        help="environment id (default: from config file; required somewhere)",
    )
    train.add_argument(
        "--arch",
        choices=(ARCH_MLP, ARCH_CHEBYSHEV),
        help="model family (default: cheb)",
    )
    train.add_argument(
        "--degree",
        type=int,
        help="Chebyshev degree, cheb architecture only (default: 4)",
    )
    train.add_argument(
        "--seeds", help="comma-separated integer seeds (default: 0,1,2)"
    )
    train.add_argument(
        "--out",
        help=f"output directory (default: results; ${OUT_DIR_ENV_VAR} overrides)",
    )
    train.add_argument(
        "--episodes", type=int, help="training episodes per seed (default: per env)"
    )
    train.add_argument(
        "--window", type=int, help="trailing-mean window in episodes (default: 100)"
    )
    train.add_argument(
        "--threshold",
        type=float,
        help="solve threshold for episodes-to-threshold (default: per env)",
    )
    train.add_argument(
        "--jobs", type=int, help="max concurrent seed runs (default: 1)"
    )
    train.add_argument(
        "--quiet", action="store_true", help="suppress per-window progress on stderr"
    )
    train.set_defaults(func=cmd_train)

    sweep = sub.add_parser("sweep", help="run a grid of configs from a TOML file")
    sweep.add_argument("--config", required=True, help="TOML file with [[runs]] tables")
    sweep.add_argument(
        "--out",
        help=f"output directory override (default: from config; ${OUT_DIR_ENV_VAR} overrides)",
    )
    sweep.add_argument(
        "--quiet", action="store_true", help="suppress per-window progress on stderr"
    )
    sweep.set_defaults(func=cmd_sweep)

    params = sub.add_parser(
        "params", help="print the trainable-parameter table for an environment"
    )
    params.add_argument(
        "--env", required=True, help="environment id (no default)"
    )
    params.set_defaults(func=cmd_params)

    report = sub.add_parser(
        "report", help="rebuild summary.md from learning-curve CSVs"
    )
    report.add_argument(
        "--out",
        help=f"directory holding the CSVs (default: results; ${OUT_DIR_ENV_VAR} overrides)",
    )
    report.add_argument(
        "--threshold",
        type=float,
        help="episodes-to-threshold cutoff (default: per env)",
    )
    report.set_defaults(func=cmd_report)

    check = sub.add_parser("check", help="run the fast self-verification suite")
    check.add_argument(
        "--perturb-gradient",
        type=float,
        default=0.0,
        help="testing hook: offset added to analytic gradients so a corrupted "
        "gradient demonstrably fails (default: 0.0)",
    )
    check.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
