"""Command-line interface.

Subcommands: spoof-run, theory-check, bayes-check, fs-scale, reproduce.
Exit codes: 0 success, 2 config error, 3 tolerance failure, 4 resource-cap
refusal. Every command accepts --config pointing at either a config file or
a previous run's manifest (the embedded config is replayed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config
from .manifest import MANIFEST_KIND
from .recipes import (
    REPRODUCIBLE_FIGURES,
    ResourceCapError,
    ToleranceError,
    run_bayes,
    run_fs_scale,
    run_reproduce,
    run_spoof,
    run_theory_checks,
)

OUT_ENV_VAR = "XEBSPOOF_OUT"


def _default_out(name: str) -> Path:
    base = os.environ.get(OUT_ENV_VAR, "runs")
    return Path(base) / name


def _resolve_config(args):
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _cmd_spoof_run(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out) if args.out else _default_out(config.name)
    run_spoof(config, out, threads=args.threads, max_sector=args.max_sector)
    print(f"wrote {out}")
    return 0


def _cmd_fs_scale(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out) if args.out else _default_out(config.name)
    run_fs_scale(config, out, threads=args.threads)
    print(f"wrote {out}")
    return 0


def _cmd_bayes_check(args) -> int:
    config = _resolve_config(args)
    out = Path(args.out) if args.out else _default_out(config.name)
    run_bayes(config, out)
    print(f"wrote {out}")
    return 0


def _theory_params(args) -> dict:
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if isinstance(data, dict) and data.get("kind") == MANIFEST_KIND:
            data = data["config"]
        if not isinstance(data, dict):
            raise ConfigError("theory-check config must be a JSON object")
        params = data
    else:
        params = {}
    for key in ("seed", "moment_draws", "xe_trials", "ratio_trials"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _cmd_theory_check(args) -> int:
    out = Path(args.out) if args.out else _default_out("theory-check")
    rows, all_pass = run_theory_checks(_theory_params(args), out)
    width = max(len(r["check"]) for r in rows)
    for r in rows:
        print(
            f"{r['check']:<{width}}  {r['params']:<16} closed={r['closed_form']:.6g} "
            f"est={r['estimate']:.6g} se={r['std_error']:.2g} rel={r['rel_err']:.3g} "
            f"tol={r['tolerance']:g} [{r['status']}]"
        )
    if not all_pass:
        raise ToleranceError("one or more theory checks failed")
    print(f"wrote {out}")
    return 0


def _cmd_reproduce(args) -> int:
    out = Path(args.out) if args.out else _default_out(args.figure)
    run_reproduce(args.figure, out, seed=args.seed, scale=args.scale, threads=args.threads)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xebspoof",
        description="Heavy-outcome post-selection spoofing of XEB for boson sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, threads=True):
        p.add_argument("--out", help=f"output directory (default: ${OUT_ENV_VAR} or ./runs)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if threads:
            p.add_argument("--threads", type=int, default=1, help="worker processes")

    p = sub.add_parser("spoof-run", help="run the post-selection spoofer from a config")
    p.add_argument("--config", required=True, help="config JSON (or a run manifest)")
    common(p)
    p.add_argument("--max-sector", type=int, default=1_000_000,
                   help="refuse sector enumeration beyond this many outcomes")
    p.set_defaults(func=_cmd_spoof_run)

    p = sub.add_parser("fs-scale", help="fermion-sampling XE-difference scan over system sizes")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=_cmd_fs_scale)

    p = sub.add_parser("bayes-check", help="Bayesian test of mock-ups against ideal samples")
    p.add_argument("--config", required=True)
    common(p, threads=False)
    p.set_defaults(func=_cmd_bayes_check)

    p = sub.add_parser("theory-check", help="validate closed-form XE expectations by Monte Carlo")
    p.add_argument("--config", help="parameter JSON (or a run manifest)")
    common(p, threads=False)
    p.add_argument("--moment-draws", type=int, dest="moment_draws")
    p.add_argument("--xe-trials", type=int, dest="xe_trials")
    p.add_argument("--ratio-trials", type=int, dest="ratio_trials")
    p.set_defaults(func=_cmd_theory_check)

    p = sub.add_parser("reproduce", help="run a bundled figure-reproduction recipe")
    p.add_argument("figure", choices=REPRODUCIBLE_FIGURES)
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV_VAR} or ./runs)")
    p.add_argument("--seed", type=int, default=20240501, help="root seed for the recipe")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--scale", choices=("paper", "smoke"), default="paper")
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ToleranceError as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return 3
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
