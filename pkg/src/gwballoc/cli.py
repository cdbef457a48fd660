"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 invalid input or flags.
"""

import argparse
import logging
import math
import os
import sys

from .errors import GwbError, ValidationError
from .jsonio import dump_canonical, load_json

log = logging.getLogger("gwballoc")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _setup_logging():
    level = os.environ.get("GWB_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    elif not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _cmd_update(args):
    from .updates import bl1_update, bl2_update, gwb1_update, gwb2_update
    from .views import PriorSpec, ViewSet, confidence_to_lambda

    prior_d = load_json(args.prior)
    views = ViewSet.from_dict(load_json(args.views))
    if args.confidence is not None:
        lam = confidence_to_lambda(args.confidence)
    else:
        lam = confidence_to_lambda(views.confidence)
    prior = PriorSpec.from_dict(prior_d, tau=args.tau, gamma=args.gamma)
    if args.method == "bl1":
        post = bl1_update(prior, views)
    elif args.method == "bl2":
        post = bl2_update(prior.mu, prior.cov, views)
    elif args.method == "gwb1":
        post = gwb1_update(prior, views, lam)
    else:
        post = gwb2_update(prior.mu, prior.cov, views, lam)
    _write(post.to_dict(), args.out)


def _cmd_allocate(args):
    from .mvo import MvoProblem, solve_mvo
    from .updates import PosteriorUpdate

    post = PosteriorUpdate.from_dict(load_json(args.inp))
    w = solve_mvo(MvoProblem(post.mean, post.cov, args.gamma, args.rf))
    _write({"weights": w.w, "gamma": args.gamma, "method": post.method.value,
            "kkt": {"stationarity": w.stationarity, "slackness": w.slackness}}, args.out)


def _emit(report, args):
    from .stats import emit_report

    for p in emit_report(report, args.out, args.format):
        log.info("wrote %s", p)


def _cmd_simulate(args):
    from .simulation import Stage1Config, run_stage1

    d = load_json(args.config)
    if args.seed is not None:
        d["master_seed"] = args.seed
    for key in ("tau", "gamma"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    cfg = Stage1Config.from_dict(d)
    _emit(run_stage1(cfg, threads=args.threads), args)


def _cmd_backtest(args):
    from .backtest import Stage2Config, load_returns_csv, run_stage2

    d = load_json(args.config)
    if args.seed is not None:
        d["master_seed"] = args.seed
    for key in ("tau", "gamma"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    data = args.data or d.get("universe_csv")
    if not data:
        raise ValidationError("--data is required (or 'universe_csv' in the config)")
    d["universe_csv"] = str(data)
    cfg = Stage2Config.from_dict(d)
    panel = load_returns_csv(data, kind=cfg.kind, min_history=cfg.min_history)
    _emit(run_stage2(panel, cfg, threads=args.threads), args)


def _cmd_report(args):
    from .stats import load_report

    _emit(load_report(args.inp), args)


def _cmd_selftest(args):
    from .selftest import run_selftest

    ok = run_selftest(seed=args.seed or 0)
    return EXIT_OK if ok else EXIT_RUNTIME


def _write(obj, out):
    if out in (None, "-"):
        from .jsonio import dumps_canonical

        sys.stdout.write(dumps_canonical(obj) + "\n")
    else:
        try:
            dump_canonical(obj, out)
        except OSError as exc:
            raise GwbError(f"cannot write {out}: {exc}") from exc


def _unit_interval(s):
    try:
        t = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not 0.0 <= t <= 1.0 or math.isnan(t):
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {s}")
    return t


def _positive(s):
    try:
        x = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
    return x


def build_parser():
    p = argparse.ArgumentParser(prog="gwballoc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    u = sub.add_parser("update", help="posterior update from prior and view JSON files")
    u.add_argument("--prior", required=True, help="prior JSON: {mean, cov, [tau, gamma, rf]}")
    u.add_argument("--views", required=True, help="view JSON: {target, confidence, P, nu, covV}")
    u.add_argument("--method", required=True, choices=["bl1", "bl2", "gwb1", "gwb2"])
    u.add_argument("--confidence", type=_unit_interval, help="overrides the confidence in the view file")
    u.add_argument("--tau", type=_positive)
    u.add_argument("--gamma", type=_positive)
    u.add_argument("--out", help="output path (stdout if omitted)")
    u.set_defaults(func=_cmd_update)

    a = sub.add_parser("allocate", help="long-only MVO weights from a posterior JSON")
    a.add_argument("--in", dest="inp", required=True)
    a.add_argument("--gamma", type=_positive, default=2.5)
    a.add_argument("--rf", type=float, default=0.0)
    a.add_argument("--out")
    a.set_defaults(func=_cmd_allocate)

    for name, func, helptext in (("simulate", _cmd_simulate, "simulated back-validation"),
                                 ("backtest", _cmd_backtest, "walk-forward backtest on a CSV universe")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True)
        if name == "backtest":
            s.add_argument("--data", help="CSV with header date,ticker1,...")
        s.add_argument("--out", required=True)
        s.add_argument("--seed", type=int, help="overrides master_seed")
        s.add_argument("--tau", type=_positive)
        s.add_argument("--gamma", type=_positive)
        s.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        s.add_argument("--format", choices=["json", "csv"], default="json")
        s.set_defaults(func=func)

    r = sub.add_parser("report", help="re-emit a report JSON as JSON or CSV tables")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--format", choices=["json", "csv"], default="csv")
    r.add_argument("--out", required=True, help="output file (json) or file stem (csv)")
    r.set_defaults(func=_cmd_report)

    t = sub.add_parser("selftest", help="run the built-in invariant suite")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=_cmd_selftest)
    return p


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("gwballoc: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        rc = args.func(args)
    except ValidationError as exc:
        print(f"gwballoc {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GwbError, OSError, ArithmeticError, MemoryError) as exc:
        print(f"gwballoc {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    sys.exit(main())
