"""Command-line entry point.

    heatshift gen-data  --seed 7 --profile default --out year.csv
    heatshift pretrain  --seed 0 --out-params params.json
    heatshift evaluate  --controller rl-expert --house-csv h.csv \
                        --params params.json --seed 0 --out report.json
    heatshift compare   --reports-dir runs/ --out table

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
"""

import argparse
import os
import sys

from .config import ConfigError, load_settings
from .data import DATA_SEEDS, PROFILES, load_csv, save_csv, synth_year
from .experiment import (RL_CONTROLLERS, TrainingDiverged, RunReport, compare,
                         evaluate, pretrain)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatshift",
        description="Water heater control under a capacity tariff: data, "
                    "training, evaluation and comparison.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic dataset CSV")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--profile", default="default",
                   help=f"one of {sorted(PROFILES)} (default: default)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("pretrain", help="pre-train an agent on synthetic data")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-params", required=True)
    p.add_argument("--stats-out", help="per-year reward CSV "
                                       "(default: <out-params stem>_stats.csv)")
    p.add_argument("--actor", choices=("expert", "plain"), default="expert")
    p.add_argument("--profile", default="pretrain")
    p.add_argument("--data", help="pre-training dataset CSV "
                                  "(default: the registered synthetic profile)")
    p.add_argument("--years", type=int, help="override pretrain_years from config")
    p.add_argument("--inverter-kw", type=float)

    p = sub.add_parser("evaluate", help="run one controller for a test year")
    p.add_argument("--config")
    p.add_argument("--controller", required=True,
                   help="hc, rbc:<hour>, rl-expert or rl-plain")
    p.add_argument("--house-csv", required=True)
    p.add_argument("--params", help="policy parameters (RL controllers)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--house-label")
    p.add_argument("--inverter-kw", type=float)
    p.add_argument("--frozen", action="store_true",
                   help="disable online learning during the test year")
    p.add_argument("--trace-out", help="also write the full step trace CSV")

    p = sub.add_parser("compare", help="aggregate run reports into a table")
    p.add_argument("--reports-dir", required=True)
    p.add_argument("--out", required=True,
                   help="output base path; writes <out>.json and <out>.csv")
    return parser


def _open_for_write(path):
    try:
        return open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from None


def _cmd_gen_data(args) -> int:
    if args.profile not in PROFILES:
        raise CliError(f"unknown profile {args.profile!r}; choose from {sorted(PROFILES)}")
    ds = synth_year(args.seed, PROFILES[args.profile])
    with _open_for_write(args.out):
        pass
    save_csv(ds, args.out)
    print(f"wrote {args.out} ({ds.label}, seed {args.seed})")
    return EXIT_OK


def _cmd_pretrain(args) -> int:
    settings = load_settings(args.config)
    if args.data:
        dataset = load_csv(args.data)
        inverter = args.inverter_kw
    else:
        if args.profile not in PROFILES or args.profile not in DATA_SEEDS:
            raise CliError(f"unknown profile {args.profile!r}")
        dataset = synth_year(DATA_SEEDS[args.profile], PROFILES[args.profile])
        inverter = args.inverter_kw or PROFILES[args.profile].effective_inverter_kw
    actor_kind = f"rl-{args.actor}"
    try:
        result = pretrain(dataset, actor_kind, args.seed, settings,
                          inverter_kw=inverter, years=args.years)
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    with _open_for_write(args.out_params):
        pass
    result.params.save(args.out_params, meta={
        "actor_kind": args.actor, "seed": args.seed, "years": result.years})
    stats_path = args.stats_out or os.path.splitext(args.out_params)[0] + "_stats.csv"
    with _open_for_write(stats_path) as fh:
        fh.write("year,mean_reward\n")
        for year, value in enumerate(result.yearly_mean_rewards):
            fh.write(f"{year},{value:.9f}\n")
    print(f"wrote {args.out_params} and {stats_path} "
          f"({result.years} years, seed {args.seed})")
    return EXIT_OK


def _parse_controller(spec: str) -> str:
    if spec in ("hc",) + RL_CONTROLLERS:
        return spec
    if spec.startswith("rbc:"):
        try:
            int(spec.split(":", 1)[1])
        except ValueError:
            raise CliError(f"bad rbc controller spec {spec!r}; use rbc:<hour>") from None
        return spec
    raise CliError(f"unknown controller {spec!r}; "
                   "use hc, rbc:<hour>, rl-expert or rl-plain")


def _cmd_evaluate(args) -> int:
    settings = load_settings(args.config)
    controller = _parse_controller(args.controller)
    dataset = load_csv(args.house_csv, label=args.house_label)
    house = args.house_label or os.path.splitext(os.path.basename(args.house_csv))[0]
    params = None
    if controller in RL_CONTROLLERS:
        from .agents import PolicyParams

        if args.params:
            params = PolicyParams.load(args.params)
            kind = params.actor.kind
            if f"rl-{kind}" != controller:
                raise CliError(f"{args.params} holds a {kind!r} actor, "
                               f"but controller is {controller}")
        else:
            print("warning: no --params given, starting from a fresh agent",
                  file=sys.stderr)
    try:
        report = evaluate(controller, dataset, house, args.seed, settings,
                          inverter_kw=args.inverter_kw, params=params,
                          online=False if args.frozen else None,
                          trace_csv=args.trace_out)
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    with _open_for_write(args.out):
        pass
    report.save(args.out)
    print(f"wrote {args.out} (bill {report.bill.total_eur:.2f} EUR, "
          f"mmp {report.mmp_kw:.3f} kW, scr {report.self_consumption_ratio:.3f})")
    return EXIT_OK


def _cmd_compare(args) -> int:
    if not os.path.isdir(args.reports_dir):
        raise CliError(f"not a directory: {args.reports_dir}")
    reports = []
    for name in sorted(os.listdir(args.reports_dir)):
        if not name.endswith(".json") or name in ("comparison.json", "summary.json"):
            continue
        path = os.path.join(args.reports_dir, name)
        try:
            reports.append(RunReport.load(path))
        except (KeyError, ValueError, TypeError) as exc:
            raise CliError(f"malformed report {path}: {exc}") from None
    if not reports:
        raise CliError(f"no run reports found in {args.reports_dir}")
    try:
        table = compare(reports)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    with _open_for_write(args.out + ".json"):
        pass
    table.save_json(args.out + ".json")
    table.save_csv(args.out + ".csv")
    print(f"wrote {args.out}.json and {args.out}.csv ({len(reports)} reports)")
    return EXIT_OK


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "pretrain": _cmd_pretrain,
    "evaluate": _cmd_evaluate,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        if os.environ.get("HEATSHIFT_DEBUG"):
            raise
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
