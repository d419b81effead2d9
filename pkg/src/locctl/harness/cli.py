"""Command line entry point: run | accept | list-scenarios."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig
from .runner import OUT_DIR_ENV, default_out_dir, run_scenario
from .scenarios import list_scenarios, preset


def _load(entry):
    """A path to a JSON file, or the name of a preset."""
    p = Path(entry)
    if p.exists():
        return ScenarioConfig.load(p)
    return preset(entry)


def cmd_run(args):
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path(cfg.output) if cfg.output else default_out_dir()
    seeds = [args.seed] if args.seed is not None else cfg.seeds
    ok = True
    for s in seeds:
        try:
            rec = run_scenario(cfg, s)
        except ConfigError as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return 2
        path = rec.write(out)
        sm = rec.summary
        ratio = sm["bound_ratio"]
        status = "ok" if rec.passed else "FAILED " + ",".join(k for k, v in sm["checks"].items() if not v)
        print(f"{cfg.scenario} seed={s} T={sm['T']} regret={sm['final_regret']:.6g} "
              f"bound={sm['bound'] if sm['bound'] is None else format(sm['bound'], '.6g')} "
              f"ratio={'n/a' if ratio is None else format(ratio, '.4f')} "
              f"time={sm['wall_time']:.2f}s {status} -> {path}")
        ok &= rec.passed
    return 0 if ok else 1


def cmd_accept(args):
    from .acceptance import report_text, run_acceptance

    results = run_acceptance(args.filter, progress=lambda r: print(r.line(), flush=True))
    if not results:
        print(f"no checks match {args.filter!r}", file=sys.stderr)
        return 2
    print(report_text(results).splitlines()[-1])
    return 0 if all(r.passed for r in results) else 1


def cmd_list(args):
    for name, desc in list_scenarios():
        print(f"{name:24s} {desc}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="locctl", description="Nested online controllers under local controllability.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a JSON config or preset name")
    r.add_argument("--config", required=True, help="JSON config file or preset name")
    r.add_argument("--seed", type=int, default=None, help="run only this seed")
    r.add_argument("--out", default=None, help=f"output directory (default: ${OUT_DIR_ENV} or ./locctl-out)")
    r.set_defaults(func=cmd_run)
    a = sub.add_parser("accept", help="run the acceptance suite")
    a.add_argument("--filter", default=None, help="only checks whose name contains this string")
    a.set_defaults(func=cmd_accept)
    ls = sub.add_parser("list-scenarios", help="list preset scenarios")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
