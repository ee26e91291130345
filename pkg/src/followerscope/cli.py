"""``followerscope`` command-line interface.

Every subcommand writes plain CSV/JSON files. ``--config FILE`` reads
``key = value`` lines whose keys are option names (``window``, ``n-bins``,
...); they replace the option defaults, while flags given on the command
line still win. Failures exit nonzero with a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .scores import METHOD_ALIASES, ScoredFollowers, fmt_float

log = logging.getLogger("followerscope")


class CliError(Exception):
    def __init__(self, code: str, message: str, **context):
        super().__init__(message)
        self.code = code
        self.context = context


# -- helpers -------------------------------------------------------------------


def _master_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError("bad_seed", f"SEED must be an integer, got {env!r}") from None
    return 0


def _load_map(path: str):
    """A follower map from a map file or a case directory (its ``map.jsonl``)."""
    from .ingest import load_follower_map

    p = Path(path)
    if p.is_dir():
        p = p / "map.jsonl"
    return load_follower_map(p)


def _write_json(path: str | None, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_config(path: str) -> dict[str, str]:
    out = {}
    for i, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError("bad_config", f"{path}:{i}: expected key = value", line=i)
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


# -- subcommands ---------------------------------------------------------------


def cmd_ingest(args):
    from .ingest import write_follower_map

    fmap = _load_map(args.input)
    if args.out:
        write_follower_map(fmap, args.out)
    _write_json(
        args.summary,
        {
            "account_id": fmap.account_id,
            "n_followers": len(fmap),
            "below_min_followers": fmap.below_min_followers,
        },
    )


def cmd_clean(args):
    from .ingest import DAY, apply_cleaning, detect_misplaced_followers, write_follower_map

    fmap = _load_map(args.input)
    report = detect_misplaced_followers(fmap, int(args.jump_threshold_days * DAY), args.lookahead)
    Path(args.report).write_text(report.to_json() + "\n", encoding="utf-8")
    write_follower_map(apply_cleaning(fmap, report), args.out)


def cmd_estimate_times(args):
    from .followtime import estimate_follow_times

    estimate_follow_times(_load_map(args.input)).to_csv(args.out)


def cmd_synth(args):
    from .ingest import load_follower_map
    from .synth import CaseSpec, base_map_specs, case_seed, rotating_permutations, write_case, CANONICAL_GRID

    seed = _master_seed(args)
    out = Path(args.out)
    perms = CANONICAL_GRID.permutations()
    written = []
    if args.base:
        fmap = load_follower_map(args.base)
        for pi, perm in enumerate(perms):
            case = perm.apply(fmap, case_seed(seed, 0, pi))
            written.append(str(write_case(case, out / f"case_0000_{pi:02d}")))
    else:
        specs = base_map_specs(args.n_maps, seed, args.min_size, args.max_size)
        for spec in specs:
            chosen = range(len(perms)) if args.perms_per_map >= len(perms) else rotating_permutations(spec.index, args.perms_per_map)
            for pi in chosen:
                case = CaseSpec(spec, pi, seed)()
                written.append(str(write_case(case, out / f"case_{spec.index:04d}_{pi:02d}")))
    log.info("wrote %d cases under %s", len(written), out)


def cmd_features(args):
    from .features import compute_features

    compute_features(_load_map(args.input), args.window).to_csv(args.out)


def cmd_score(args):
    from .pipeline import score_map

    fmap = _load_map(args.input)
    seed = _master_seed(args)
    scored = score_map(fmap, args.method, args.window, args.n_bins, args.stride, seed)
    if scored.seed is None and scored.method in ("isolation_forest", "gen2out"):
        scored.seed = seed
    scored.write(args.out)


def cmd_bench(args):
    from .evalkit import run_benchmark, format_table, write_case_results_csv, write_results_csv
    from .synth import read_case

    dirs = sorted({p.parent for d in args.cases for p in Path(d).rglob("case.json")})
    if not dirs:
        raise CliError("no_cases", "no case directories (containing case.json) found", paths=args.cases)
    cases = [read_case(d) for d in dirs]
    rows = []
    results = run_benchmark(
        cases, args.methods, args.windows, _master_seed(args), args.threads, args.n_bins, args.stride, per_case=rows
    )
    table = format_table(results)
    if args.table:
        Path(args.table).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    if args.out:
        write_results_csv(results, args.out)
    if args.per_case:
        write_case_results_csv(rows, args.per_case)


def cmd_rank_users(args):
    from .network import rank_accounts_by_anomaly

    scored = [ScoredFollowers.read(p) for p in args.scores]
    ranked = rank_accounts_by_anomaly(scored, args.mode, args.top_n)
    lines = ["position,account_id,value"] + [f"{i},{a},{fmt_float(v)}" for i, (a, v) in enumerate(ranked)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_network(args):
    from .network import (
        all_pairs_edges,
        build_network,
        detect_communities,
        write_communities_csv,
        write_community_rank_csv,
        write_edges_csv,
        write_graphml,
    )

    scored = [ScoredFollowers.read(p) for p in args.scores]
    net = build_network(all_pairs_edges(scored), args.weight_min, args.shared_min)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if net.nodes:
        detect_communities(net, _master_seed(args))
    else:
        log.warning("no edge passed the filters; the network is empty")
    write_edges_csv(net, out / "edges.csv")
    write_communities_csv(net, out / "communities.csv")
    write_community_rank_csv(net, out / "community_rank.csv")
    if args.graphml:
        write_graphml(net, out / "network.graphml")


def cmd_heatmap(args):
    from .heatmap import export_heatmap

    fmap = _load_map(args.input)
    if args.kind == "mean_anomaly_score":
        if not args.scores:
            raise CliError("missing_input", "--scores is required for mean_anomaly_score")
        source = ScoredFollowers.read(args.scores)
    elif args.kind == "shared_follower_ratio":
        if not args.shared_ids:
            raise CliError("missing_input", "--shared-ids is required for shared_follower_ratio")
        text = Path(args.shared_ids).read_text(encoding="utf-8")
        source = {line.strip() for line in text.splitlines() if line.strip()}
    else:
        source = None
    export_heatmap(fmap, source, tuple(args.grid), args.kind).to_csv(args.out)


# -- parser --------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors become CliError so they are reported like any other failure."""

    def error(self, message):
        raise CliError("usage", message, prog=self.prog)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="followerscope", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value file providing option defaults")
    p.add_argument("--threads", type=int, default=1, help="worker processes where supported")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="validate a follower map and write it as JSONL")
    s.add_argument("input")
    s.add_argument("--out", help="normalized JSONL output")
    s.add_argument("--summary", help="summary JSON (default: stdout)")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("clean", help="remove misplaced followers")
    s.add_argument("input")
    s.add_argument("--out", required=True)
    s.add_argument("--report", required=True, help="cleaning report JSON")
    s.add_argument("--jump-threshold-days", type=float, default=365.0)
    s.add_argument("--lookahead", type=int, default=50)
    s.set_defaults(func=cmd_clean)

    s = sub.add_parser("estimate-times", help="estimate follow times from the upper bound")
    s.add_argument("input")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_estimate_times)

    s = sub.add_parser("synth", help="generate synthetic benchmark cases")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--base", help="inject the full grid into this map instead of simulating maps")
    s.add_argument("--n-maps", type=int, default=10)
    s.add_argument("--min-size", type=int, default=1_000)
    s.add_argument("--max-size", type=int, default=50_000)
    s.add_argument("--perms-per-map", type=int, default=55)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("features", help="compute detector features")
    s.add_argument("input")
    s.add_argument("--window", type=int, default=51)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("score", help="score every follower of a map")
    s.add_argument("input", help="map file or case directory")
    s.add_argument("--method", default="sh", type=str.lower, choices=sorted(METHOD_ALIASES))
    s.add_argument("--window", type=int, default=201)
    s.add_argument("--bins", dest="n_bins", type=int, default=10)
    s.add_argument("--stride", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True, help="score CSV; params go to <stem>.params.json")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("bench", help="evaluate methods on synthetic cases")
    s.add_argument("cases", nargs="+", help="case directories or their parents")
    s.add_argument("--methods", nargs="+", default=["sh", "if", "lof", "ecod", "gen2out"])
    s.add_argument("--windows", nargs="+", type=int, default=[51, 101, 201])
    s.add_argument("--bins", dest="n_bins", type=int, default=10)
    s.add_argument("--stride", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--table", help="text table output (default: stdout)")
    s.add_argument("--out", help="summary CSV")
    s.add_argument("--per-case", help="per-case metrics CSV")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("rank-users", help="rank accounts by follower anomaly")
    s.add_argument("scores", nargs="+", help="score CSVs")
    s.add_argument("--mode", choices=["mean_all", "mean_top_n"], default="mean_all")
    s.add_argument("--top-n", type=int, default=1000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_rank_users)

    s = sub.add_parser("network", help="shared-follower similarity network and communities")
    s.add_argument("scores", nargs="+", help="score CSVs with follower ids")
    s.add_argument("--weight-min", type=float, default=0.75)
    s.add_argument("--shared-min", type=int, default=100)
    s.add_argument("--seed", type=int)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--graphml", action="store_true", help="also write network.graphml")
    s.set_defaults(func=cmd_network)

    s = sub.add_parser("heatmap", help="2-D grid over rank and creation time")
    s.add_argument("input")
    s.add_argument("--kind", choices=["mean_anomaly_score", "shared_follower_ratio", "count"], default="mean_anomaly_score")
    s.add_argument("--scores", help="score CSV (mean_anomaly_score)")
    s.add_argument("--shared-ids", help="file with one follower id per line (shared_follower_ratio)")
    s.add_argument("--grid", nargs=2, type=int, default=[200, 200], metavar=("NX", "NY"))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_heatmap)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = _parse_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    known = {a.dest: a for p in (parser, sub) for a in p._actions}  # noqa: SLF001
    defaults = {}
    for key, raw in values.items():
        action = known.get(key)
        if action is None or key in ("help", "func", "command", "config"):
            raise CliError("bad_config", f"unknown config key {key!r}", key=key)
        if action.nargs in ("+", "*") or isinstance(action.nargs, int):
            items = raw.replace(",", " ").split()
            value = [action.type(v) if action.type else v for v in items]
        elif isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
            value = raw.lower() in ("1", "true", "yes", "on")
        else:
            value = action.type(raw) if action.type else raw
        if action.choices is not None and value not in action.choices:
            raise CliError("bad_config", f"{key}: {value!r} not in {sorted(action.choices)}", key=key)
        defaults[key] = value
    parser.set_defaults(**{k: v for k, v in defaults.items() if any(a.dest == k for a in parser._actions)})  # noqa: SLF001
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _report(code: str, message: str, context: dict) -> None:
    err = {"code": code, "message": message, "context": context}
    if sys.stderr.isatty():
        sys.stderr.write(f"error [{code}]: {message}\n")
    else:
        sys.stderr.write(json.dumps(err, sort_keys=True, default=str) + "\n")


def main(argv: list[str] | None = None) -> int:
    from .ingest import FollowerMapError, ParseError
    from .synth import InjectionError

    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        args.func(args)
    except CliError as exc:
        _report(exc.code, str(exc), exc.context)
        return 1
    except ParseError as exc:
        _report("parse_error", str(exc), {"line": exc.line})
        return 1
    except (FollowerMapError, InjectionError) as exc:
        _report("invalid_input", str(exc), {})
        return 1
    except FileNotFoundError as exc:
        _report("file_not_found", str(exc), {"path": exc.filename})
        return 1
    except ValueError as exc:
        _report("invalid_value", str(exc), {})
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
