"""Command-line front end.

Subcommands: synth, ingest, snapshot, proportions, stability, dstatic,
dispersion, hhi, report.  Exit codes: 0 success, 1 usage error, 2 data or
store error.  The store directory defaults to the LEDGERLENS_STORE
environment variable.  All outputs are deterministic for identical
parameters over an identical store.
"""

import argparse
import os
import sys

from . import __version__
from .balances import compute_rankings
from .errors import LedgerError
from .ledger import parse_ledger
from .lorenz import cumulative_curve, d_static_series
from .market import SCHEMES, cluster, d_hhi, hhi_series
from .report import (
    DEFAULT_INTERVALS,
    DEFAULT_TOPS,
    build_report,
    config_hash,
    write_csv,
    write_json,
)
from .stability import stability_series, summarize
from .store import (
    SNAPSHOT_INTERVAL_DEFAULT,
    SnapshotStore,
    load_ledger,
    load_meta,
    save_ledger,
)
from .svg import line_chart
from .synth import SynthConfig, generate
from .txgraph import dispersion_series, build_day_graph, degree_centrality, pagerank

STORE_ENV = "LEDGERLENS_STORE"


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits 1 on usage errors (argparse default is 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _day_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    lo_i, hi_i = int(lo), int(hi)
    if lo_i < 0 or hi_i < lo_i:
        raise argparse.ArgumentTypeError("day range must be START:END with 0 <= START <= END")
    return lo_i, hi_i


def _window(rows, day_range, key=lambda row: row[0]):
    if day_range is None:
        return list(rows)
    lo, hi = day_range
    return [row for row in rows if lo <= key(row) <= hi]


def _store_dir(args) -> str:
    store = args.store or os.environ.get(STORE_ENV)
    if not store:
        raise ValueError(f"no store given (use --store or ${STORE_ENV})")
    return store


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _emit_csv(path: str, columns, rows, cfg: str) -> None:
    if path == "-":
        from .report import _cell, _meta_lines

        for line in _meta_lines(cfg):
            sys.stdout.write(line + "\n")
        sys.stdout.write(",".join(columns) + "\n")
        for row in rows:
            sys.stdout.write(",".join(_cell(v) for v in row) + "\n")
    else:
        write_csv(path, columns, rows, cfg)


def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        seed=args.seed,
        days=args.days,
        txs_per_day=args.txs_per_day,
        pool=args.pool,
        growth=args.growth,
        regime=args.regime,
        alpha=args.alpha,
        hubs=args.hubs,
        churn_rate=args.churn_rate,
        initial_supply=args.initial_supply,
        reward=args.reward,
        halving_days=args.halving_days,
        amount_frac=args.amount_frac,
    )
    ledger = generate(cfg)
    out, close = _open_out(args.out)
    try:
        ledger.serialize(out)
    finally:
        if close:
            out.close()
    print(f"synth: {len(ledger)} transactions over {ledger.n_days} days", file=sys.stderr)
    return 0


def _cmd_ingest(args) -> int:
    store = _store_dir(args)
    if args.input == "-":
        ledger = parse_ledger(sys.stdin, epoch=args.epoch)
    else:
        with open(args.input) as fp:
            ledger = parse_ledger(fp, epoch=args.epoch)
    meta = save_ledger(ledger, store)
    if ledger.out_of_order:
        print(f"ingest: re-sorted {ledger.out_of_order} out-of-order records",
              file=sys.stderr)
    print(
        f"ingest: {meta['transactions']} transactions, {meta['days']} days, "
        f"{meta['addresses'] - 1} addresses -> {store}",
        file=sys.stderr,
    )
    return 0


def _cmd_snapshot(args) -> int:
    store = _store_dir(args)
    ledger = load_ledger(store)
    snaps = SnapshotStore.build(ledger, interval=args.interval)
    snaps.save(store)
    print(
        f"snapshot: cached {snaps.n_days} days "
        f"({len(snaps.checkpoints)} checkpoints, interval {snaps.interval})",
        file=sys.stderr,
    )
    if args.dump_day is not None:
        snap = snaps.snapshot_at(args.dump_day, ledger.addresses)
        cfg = config_hash({"cmd": "snapshot", "day": args.dump_day,
                           "store": load_meta(store)["content_hash"]})
        funded = sorted(snap.as_dict().items())
        _emit_csv(args.out, ["address", "balance"], funded, cfg)
    return 0


def _cmd_proportions(args) -> int:
    store = _store_dir(args)
    ledger = load_ledger(store)
    tops = args.tops
    rankings = compute_rankings(ledger, max(tops))
    from .balances import proportion_series

    supplies = [ledger.supply_at(d) for d in range(ledger.n_days)]
    matrix = proportion_series(rankings, supplies, tops)
    cfg = config_hash({"cmd": "proportions", "tops": tops,
                       "day_range": list(args.day_range) if args.day_range else None,
                       "store": load_meta(store)["content_hash"]})
    if args.long:
        rows = [
            (d, n, float(matrix[d, j]))
            for d in range(ledger.n_days)
            for j, n in enumerate(tops)
        ]
        _emit_csv(args.out, ["day", "n", "proportion"],
                  _window(rows, args.day_range), cfg)
    else:
        rows = [
            (d, *[float(matrix[d, j]) for j in range(len(tops))])
            for d in range(ledger.n_days)
        ]
        _emit_csv(args.out, ["day"] + [f"p{n}" for n in tops],
                  _window(rows, args.day_range), cfg)
    return 0


def _cmd_stability(args) -> int:
    store = _store_dir(args)
    ledger = load_ledger(store)
    rankings = compute_rankings(ledger, args.top)
    series = stability_series(rankings, args.top, args.interval, args.metric, args.mode)
    cfg = config_hash({
        "cmd": "stability", "metric": args.metric, "top": args.top,
        "interval": args.interval, "mode": args.mode,
        "day_range": list(args.day_range) if args.day_range else None,
        "store": load_meta(store)["content_hash"],
    })
    series.values = dict(_window(sorted(series.values.items()), args.day_range))
    _emit_csv(args.out, ["day", "value"], sorted(series.values.items()), cfg)
    if args.summary:
        write_json(args.summary, {
            "meta": {"config_hash": cfg},
            "summary": summarize(series).to_dict() if series.defined() else None,
        })
    return 0


def _cmd_dstatic(args) -> int:
    store = _store_dir(args)
    ledger = load_ledger(store)
    rankings = compute_rankings(ledger, args.top)
    series = d_static_series(rankings, args.top, args.scaling)
    cfg = config_hash({"cmd": "dstatic", "top": args.top, "scaling": args.scaling,
                       "day_range": list(args.day_range) if args.day_range else None,
                       "store": load_meta(store)["content_hash"]})
    _emit_csv(args.out, ["day", "d_static"],
              _window(sorted(series.values.items()), args.day_range), cfg)
    if args.svg:
        day = args.curve_day if args.curve_day is not None else ledger.n_days - 1
        curve = cumulative_curve(rankings[day], args.top)
        xs = list(range(1, curve.n + 1))
        line_chart(
            {"actual": (xs, curve.c_real.tolist()),
             "equal": (xs, curve.c_equal.tolist())},
            args.svg,
            f"Cumulative top-N wealth share (day {day})", "rank", "share",
        )
    return 0


def _cmd_dispersion(args) -> int:
    store = _store_dir(args)
    ledger = load_ledger(store)
    metrics = ("degree", "pagerank") if args.metric == "both" else (args.metric,)
    rankings = compute_rankings(ledger, args.focus)
    series = dispersion_series(
        ledger, rankings, metrics, args.focus,
        value_weighted=args.value_weighted, jobs=args.jobs,
    )
    cfg = config_hash({
        "cmd": "dispersion", "metrics": list(metrics), "focus": args.focus,
        "value_weighted": args.value_weighted,
        "day_range": list(args.day_range) if args.day_range else None,
        "store": load_meta(store)["content_hash"],
    })
    rows = [(d, m, v) for m in sorted(series) for d, v in sorted(series[m].items())]
    _emit_csv(args.out, ["day", "metric", "dispersion"],
              _window(rows, args.day_range), cfg)
    if args.nodes_out and args.nodes_day is not None:
        d = args.nodes_day
        if not 1 <= d < ledger.n_days:
            raise ValueError(f"--nodes-day {d} has no focus graph")
        graph = build_day_graph(ledger, d, rankings[d - 1].truncated(args.focus),
                                value_weighted=args.value_weighted)
        deg = degree_centrality(graph).as_dict(ledger.addresses)
        pr = pagerank(graph, weighted_by_value=args.value_weighted)
        pr = pr.as_dict(ledger.addresses)
        rows = [(d, a, deg[a], pr[a]) for a in sorted(deg)]
        _emit_csv(args.nodes_out, ["day", "address", "degree", "pagerank"], rows, cfg)
    return 0


def _cmd_hhi(args) -> int:
    store = _store_dir(args)
    ledger = load_ledger(store)
    series = hhi_series(
        ledger, args.scheme, focus_n=args.focus, method=args.method,
        seed=args.seed, stride=args.stride, jobs=args.jobs,
    )
    cfg = config_hash({
        "cmd": "hhi", "scheme": args.scheme, "focus": args.focus,
        "method": args.method, "seed": args.seed, "stride": args.stride,
        "day_range": list(args.day_range) if args.day_range else None,
        "store": load_meta(store)["content_hash"],
    })
    classes = series.classes()
    rows = [(d, args.scheme, v, classes[d]) for d, v in sorted(series.values.items())]
    _emit_csv(args.out, ["day", "scheme", "hhi", "class"],
              _window(rows, args.day_range), cfg)
    if args.dhhi:
        if args.scheme != "a3":
            raise ValueError("--dhhi requires --scheme a3")
        _emit_csv(args.dhhi, ["day", "d_hhi"],
                  _window(sorted(d_hhi(series).items()), args.day_range), cfg)
    if args.partition_out and args.partition_day is not None:
        clustering = cluster(ledger, args.partition_day, args.scheme,
                             focus_n=args.focus, method=args.method, seed=args.seed)
        write_json(args.partition_out, {
            "meta": {"config_hash": cfg},
            "day": clustering.day,
            "scheme": clustering.scheme,
            "partition": clustering.as_dict(ledger.addresses),
        })
    return 0


def _cmd_report(args) -> int:
    store = _store_dir(args)
    ledger = load_ledger(store)
    build_report(
        ledger,
        args.out,
        tops=args.tops,
        intervals=args.intervals,
        focus_n=args.focus,
        spearman_mode=args.mode,
        scaling=args.scaling,
        curve_day=args.curve_day,
        method=args.method,
        stride=args.stride,
        jobs=args.jobs,
        value_weighted=args.value_weighted,
        day_range=args.day_range,
        store_hash=load_meta(store)["content_hash"],
        charts=not args.no_charts,
    )
    print(f"report: bundle written to {args.out}", file=sys.stderr)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="ledgerlens", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ledgerlens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_store(p):
        p.add_argument("--store", "-s", default=None,
                       help=f"store directory (default ${STORE_ENV})")

    def add_day_range(p):
        p.add_argument("--day-range", type=_day_range, default=None,
                       metavar="START:END",
                       help="emit only days inside this inclusive window")

    p = sub.add_parser("synth", help="generate a deterministic synthetic ledger")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=30)
    p.add_argument("--txs-per-day", type=int, default=100)
    p.add_argument("--pool", type=int, default=200)
    p.add_argument("--growth", type=float, default=0.0)
    p.add_argument("--regime", choices=("uniform", "preferential", "hub", "churn"),
                   default="uniform")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--hubs", type=int, default=5)
    p.add_argument("--churn-rate", type=float, default=0.1)
    p.add_argument("--initial-supply", type=int, default=10**12)
    p.add_argument("--reward", type=int, default=50 * 10**8)
    p.add_argument("--halving-days", type=int, default=0)
    p.add_argument("--amount-frac", type=float, default=0.5,
                   help="largest share of a sender's balance per payment")
    p.add_argument("--out", default="-", help="output path or - for stdout")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="parse a JSON-lines ledger into a store")
    p.add_argument("--input", "-i", default="-", help="input path or - for stdin")
    p.add_argument("--epoch", type=int, default=None,
                   help="day-0 timestamp (UTC, floored to midnight)")
    add_store(p)
    p.add_argument("--out", dest="store_alias", default=None,
                   help="alias for --store")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("snapshot", help="build the balance snapshot cache")
    add_store(p)
    p.add_argument("--interval", type=int, default=SNAPSHOT_INTERVAL_DEFAULT)
    p.add_argument("--dump-day", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_snapshot)

    p = sub.add_parser("proportions", help="daily top-N supply proportions")
    add_store(p)
    add_day_range(p)
    p.add_argument("--tops", type=_int_list, default=list(DEFAULT_TOPS))
    p.add_argument("--long", action="store_true", help="emit day,n,proportion rows")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_proportions)

    p = sub.add_parser("stability", help="ranking stability series")
    add_store(p)
    add_day_range(p)
    p.add_argument("--metric", choices=("spearman", "retention"), default="spearman")
    p.add_argument("--top", type=int, default=100)
    p.add_argument("--interval", type=int, default=1)
    p.add_argument("--mode", choices=("intersection", "penalized"),
                   default="intersection")
    p.add_argument("--summary", default=None, help="also write a summary JSON here")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("dstatic", help="static decentralization degree series")
    add_store(p)
    add_day_range(p)
    p.add_argument("--top", type=int, default=2000)
    p.add_argument("--scaling", type=int, choices=(1, 2), default=2)
    p.add_argument("--curve-day", type=int, default=None)
    p.add_argument("--svg", default=None, help="write the cumulative curve chart here")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_dstatic)

    p = sub.add_parser("dispersion", help="daily centrality dispersion")
    add_store(p)
    add_day_range(p)
    p.add_argument("--metric", choices=("degree", "pagerank", "both"), default="both")
    p.add_argument("--focus", type=int, default=100)
    p.add_argument("--value-weighted", action="store_true")
    p.add_argument("--jobs", type=int, default=os.cpu_count())
    p.add_argument("--nodes-day", type=int, default=None)
    p.add_argument("--nodes-out", default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_dispersion)

    p = sub.add_parser("hhi", help="market concentration series")
    add_store(p)
    add_day_range(p)
    p.add_argument("--scheme", choices=SCHEMES, default="a1")
    p.add_argument("--focus", type=int, default=100)
    p.add_argument("--method", choices=("label_propagation", "modularity"),
                   default="label_propagation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--jobs", type=int, default=os.cpu_count())
    p.add_argument("--dhhi", default=None,
                   help="also write the dynamic decentralization series (a3 only)")
    p.add_argument("--partition-day", type=int, default=None)
    p.add_argument("--partition-out", default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_hhi)

    p = sub.add_parser("report", help="run every metric and emit the full bundle")
    add_store(p)
    add_day_range(p)
    p.add_argument("--out", "-o", required=True, help="output directory")
    p.add_argument("--tops", type=_int_list, default=list(DEFAULT_TOPS))
    p.add_argument("--intervals", type=_int_list, default=list(DEFAULT_INTERVALS))
    p.add_argument("--focus", type=int, default=100)
    p.add_argument("--mode", choices=("intersection", "penalized"),
                   default="intersection")
    p.add_argument("--scaling", type=int, choices=(1, 2), default=2)
    p.add_argument("--method", choices=("label_propagation", "modularity"),
                   default="label_propagation")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--curve-day", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count())
    p.add_argument("--value-weighted", action="store_true")
    p.add_argument("--no-charts", action="store_true")
    p.set_defaults(func=_cmd_report)

    return parser


def run(argv: list[str] | None = None) -> int:
    """Parse arguments and execute one subcommand; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "store_alias", None) and not args.store:
        args.store = args.store_alias
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"ledgerlens: {exc}", file=sys.stderr)
        return 1
    except LedgerError as exc:
        print(f"ledgerlens: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ledgerlens: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
