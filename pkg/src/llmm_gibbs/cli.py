"""Command-line interface.

Subcommands::

    llmm-gibbs run --config exp.toml [--sampler bg|fg|both] [--iters N]
                   [--burnin B] [--thin T] [--seed S] [--out DIR] [--max-lag K]
    llmm-gibbs check-ge --config exp.toml [--out DIR]
    llmm-gibbs diagnose DRAWS.csv [--max-lag K] [--out DIR]

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

import argparse
import sys

from .errors import InputError, NumericalError
from .experiment import (
    _clean,
    _Outputs,
    diagnose_file,
    dump_json,
    ge_report_dict,
    load_config,
    run_experiment,
)
from .ingest import ingest

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


def _samplers(value):
    return ("bg", "fg") if value == "both" else (value,)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="llmm-gibbs",
        description="Polya-Gamma Gibbs samplers for logistic linear mixed models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the samplers and write draws and reports")
    run.add_argument("--config", required=True, help="TOML experiment file")
    run.add_argument("--sampler", choices=("fg", "bg", "both"))
    run.add_argument("--iters", type=int)
    run.add_argument("--burnin", type=int)
    run.add_argument("--thin", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--max-lag", type=int)

    ge = sub.add_parser("check-ge", help="evaluate the geometric ergodicity conditions")
    ge.add_argument("--config", required=True)
    ge.add_argument("--out", help="write ge_report.json here instead of stdout")

    diag = sub.add_parser("diagnose", help="metrics for an existing draws file")
    diag.add_argument("draws")
    diag.add_argument("--max-lag", type=int, default=5)
    diag.add_argument("--out", help="write diagnostics.json here instead of stdout")
    return parser


def _cmd_run(args):
    config = load_config(args.config).with_overrides(
        samplers=None if args.sampler is None else _samplers(args.sampler),
        iterations=args.iters,
        burn_in=args.burnin,
        thin=args.thin,
        seed=args.seed,
        out_dir=args.out,
        max_lag=args.max_lag,
    )
    paths = run_experiment(config, log=lambda msg: print(msg, file=sys.stderr))
    for p in paths:
        print(p)


def _cmd_check_ge(args):
    config = load_config(args.config)
    report = ge_report_dict(ingest(config.dataset, config.prior))
    text = dump_json(report)
    if args.out:
        out = _Outputs(args.out)
        print(out.write("ge_report.json", text))
    else:
        sys.stdout.write(text)
    print(report["verdict"], file=sys.stderr)


def _cmd_diagnose(args):
    rep = diagnose_file(args.draws, max_lag=args.max_lag)
    text = dump_json(_clean(rep.to_dict()))
    if args.out:
        print(_Outputs(args.out).write("diagnostics.json", text))
    else:
        sys.stdout.write(text)


_COMMANDS = {"run": _cmd_run, "check-ge": _cmd_check_ge, "diagnose": _cmd_diagnose}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
