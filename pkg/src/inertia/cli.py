"""Command-line surface: run, cpl-collect, attn-report, cost-model, suite.

Flags may be preloaded from a JSON config file via --config; explicit
flags win on conflict.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import os
import sys

from inertia import __version__
from inertia.agent import parse_agent_spec, run_batch
from inertia.attention import read_record, report
from inertia.cost import simulate_ops
from inertia.cpl import CplConfig, collect_pairs, export_dataset
from inertia.policies import parse_policy_spec
from inertia.suites import SUITE_DEFAULTS, run_suite, run_suite_from_manifest


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", default=None, help="output file or directory")
    parser.add_argument("--config", default=None, help="JSON file of default flag values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inertia",
        description="Multi-turn agent context-management toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run episode batches and emit a result table")
    run_p.add_argument("--env", action="append", required=True,
                       help="env spec '<env>:<seed>[:k=v,...]' (repeatable)")
    run_p.add_argument("--policy", action="append", required=True,
                       help="policy spec 'long|window-W|clip-HtoL|sum-HtoL' (repeatable)")
    run_p.add_argument("--agent", default="scripted")
    run_p.add_argument("--episodes", type=int, default=8)
    run_p.add_argument("--step-mult", type=float, default=1.0)
    _add_common(run_p)

    cpl_p = sub.add_parser("cpl-collect", help="build a context-preference dataset")
    cpl_p.add_argument("--env", required=True)
    cpl_p.add_argument("--agent", default="scripted")
    cpl_p.add_argument("--chosen", type=int, default=6)
    cpl_p.add_argument("--rejected", default="inf",
                       help="long context size in rounds, or 'inf' for the full history")
    cpl_p.add_argument("--k", type=int, default=20, help="minimum turn before sampling")
    cpl_p.add_argument("--pairs", type=int, default=1000)
    _add_common(cpl_p)

    attn_p = sub.add_parser("attn-report", help="category/diagonal ratios for attention records")
    attn_p.add_argument("--in", dest="inputs", required=True,
                        help="record .json file or a directory of them")
    attn_p.add_argument("--r", dest="band_radius", type=int, default=5)
    _add_common(attn_p)

    cost_p = sub.add_parser("cost-model", help="simulate prefill cost for a policy")
    cost_p.add_argument("--policy", required=True)
    cost_p.add_argument("--turns", type=int, default=120)
    cost_p.add_argument("--reuse", choices=("on", "off"), default="on")
    _add_common(cost_p)

    suite_p = sub.add_parser("suite", help="run a named experiment suite")
    suite_p.add_argument("name", nargs="?", choices=sorted(SUITE_DEFAULTS), default=None)
    suite_p.add_argument("--manifest", default=None, help="re-run a suite from its manifest")
    suite_p.add_argument("--override", action="append", default=[],
                         help="key=value suite override (repeatable)")
    _add_common(suite_p)
    return parser


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Fill unset flags from --config JSON; explicit flags win."""
    if not args.config:
        return
    with open(args.config, encoding="utf-8") as fh:
        defaults = json.load(fh)
    given = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in defaults.items():
        attr = key.replace("-", "_")
        if attr not in given and hasattr(args, attr):
            setattr(args, attr, value)


def _write_rows(path: str | None, header: list[str], rows: list[list]) -> None:
    handle = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in row])
    finally:
        if path:
            handle.close()


def cmd_run(args) -> int:
    agent = parse_agent_spec(args.agent)
    results = run_batch(
        list(args.env),
        list(args.policy),
        agent,
        episodes=args.episodes,
        step_multiplier=args.step_mult,
        seed=args.seed,
        jobs=args.jobs,
    )
    rows = [[r.env, r.policy, r.episodes, r.mean, r.sem, r.aborted] for r in results]
    _write_rows(args.out, ["env", "policy", "episodes", "mean", "sem", "aborted"], rows)
    return 0


def cmd_cpl_collect(args) -> int:
    rejected = None if str(args.rejected).lower() in ("inf", "none", "") else int(args.rejected)
    cfg = CplConfig(
        chosen_rounds=args.chosen,
        rejected_rounds=rejected,
        min_turn=args.k,
        target_pairs=args.pairs,
    )
    agent = parse_agent_spec(args.agent)
    pairs = collect_pairs(args.env, agent, cfg, seed=args.seed)
    out = args.out or "pairs.jsonl"
    export_dataset(pairs, out, cfg)
    print(f"wrote {len(pairs)} pairs to {out}")
    return 0


def cmd_attn_report(args) -> int:
    if os.path.isdir(args.inputs):
        paths = sorted(glob.glob(os.path.join(args.inputs, "*.json")))
    else:
        paths = [args.inputs]
    rows = []
    for path in paths:
        rec, warnings = read_record(path)
        for warning in warnings:
            print(f"warning: {os.path.basename(path)}: {warning}", file=sys.stderr)
        rep = report(rec, band_radius=args.band_radius)
        rows.append(
            [os.path.basename(path), rec.output_span().round_index, rep.sink, rep.system,
             rep.user, rep.prev_assistant, rep.cur_assistant, rep.diagonal_ratio,
             rep.n_output_tokens]
        )
    _write_rows(
        args.out,
        ["record", "turn", "sink", "system", "user", "prev_assistant", "cur_assistant",
         "diagonal_ratio", "n_output_tokens"],
        rows,
    )
    return 0


def cmd_cost_model(args) -> int:
    cfg = parse_policy_spec(args.policy)
    rep = simulate_ops(cfg, args.turns, reuse=args.reuse == "on")
    rows = []
    cumulative = 0.0
    for step, cost in enumerate(rep.series, start=1):
        cumulative += cost
        rows.append([step, cost, cumulative])
    _write_rows(args.out, ["step", "cost", "cumulative"], rows)
    return 0


def cmd_suite(args) -> int:
    if args.manifest:
        manifest = run_suite_from_manifest(args.manifest, args.out, jobs=args.jobs)
    else:
        if not args.name:
            print("error: provide a suite name or --manifest", file=sys.stderr)
            return 2
        overrides = {}
        for item in args.override:
            key, _, value = item.partition("=")
            overrides[key] = value
        manifest = run_suite(args.name, args.seed, args.out or ".", overrides, jobs=args.jobs)
    print(f"suite {manifest['suite']} wrote {', '.join(manifest['files'])}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_file(args, parser, argv)
    handlers = {
        "run": cmd_run,
        "cpl-collect": cmd_cpl_collect,
        "attn-report": cmd_attn_report,
        "cost-model": cmd_cost_model,
        "suite": cmd_suite,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
