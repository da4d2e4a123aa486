"""Command-line front door.

Subcommands:

    quantiles   simulate a null (or shifted) quantile table and print the
                standard quantile row
    test        single change-point test on a CSV dataset
    segment     multiple change-point search; writes CSV + JSON results
    simulate    canned experiment grids (table2 / table3 / table4 / powercurve)
    hill        per-column tail-index diagnostics

Common flags: --seed (default 12345), --threads (default: logical cores),
--table-dir (falls back to the SIGNSEG_TABLE_DIR environment variable).
Tables live in the table directory as one JSON file per series length and
are simulated on first use; without a directory they are rebuilt per run.

Exit codes: 0 success, 2 usage or domain error, 1 internal error.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys

from ._validation import DomainError
from .data import RandomStream, load_csv
from .intervals import seeded_intervals
from .limit import DEFAULT_B, NoncentralShift, TableStore, p_value, save_table, simulate_limit
from .segmenter import DEFAULT_ALPHA, DEFAULT_ZETA_P, SegmenterConfig, segment
from .simlab import (
    DgpConfig,
    dense_shift,
    hill,
    segmentation_experiment,
    single_change_config,
    size_power_experiment,
    three_change_config,
)
from .statistics import sn_statistic

_QUANTILE_LEVELS = (0.80, 0.90, 0.95, 0.99, 0.995, 0.999)


def _table_store(args) -> TableStore:
    directory = args.table_dir or os.environ.get("SIGNSEG_TABLE_DIR")
    return TableStore(directory=directory, workers=args.threads)


def _note_missing_tables(store: TableStore, lengths) -> None:
    """Warn before simulations the user did not explicitly ask for."""
    missing = sorted(
        {
            int(length)
            for length in lengths
            if (path := store.path_for(int(length))) is None or not os.path.exists(path)
        }
    )
    if missing:
        target = store.directory or "memory only; pass --table-dir to cache"
        print(
            f"note: simulating null tables (B={store.B}) for lengths {missing} "
            f"({target}); this can take a few minutes",
            file=sys.stderr,
        )


def cmd_quantiles(args) -> int:
    if (args.c is None) != (args.bstar is None):
        raise DomainError("--c and --bstar must be given together")
    if args.n < 8:
        raise DomainError("n must be ≥ 8")
    shift = None if args.c is None else NoncentralShift(c=args.c, bstar=args.bstar)
    table = simulate_limit(
        args.n, args.B, RandomStream(args.seed), noncentral=shift, workers=args.threads
    )
    if args.out:
        save_table(table, args.out)
    label = "central" if shift is None else f"noncentral c={shift.c:g} bstar={shift.bstar:g}"
    print(f"n={args.n}  B={args.B}  seed={args.seed}  {label}")
    print("".join(f"{f'{100 * g:g}%':>12}" for g in _QUANTILE_LEVELS))
    print("".join(f"{table.quantile(g):>12.2f}" for g in _QUANTILE_LEVELS))
    if args.out:
        print(f"table written to {args.out}")
    return 0


def cmd_test(args) -> int:
    data = load_csv(args.data, has_header=args.has_header)
    store = _table_store(args)
    _note_missing_tables(store, [data.shape[0]])
    result = sn_statistic(data, kind=args.kind)
    pv = p_value(store.get(data.shape[0]), result.stat)
    decision = "reject" if pv < args.level else "accept"
    print(f"n={data.shape[0]}  p={data.shape[1]}  kind={args.kind}")
    print(f"statistic: {result.stat:.6g}")
    print(f"argmax k: {result.argmax_k}")
    print(f"p-value: {pv:.6g}")
    print(f"decision: {decision} at level {args.level:g}")
    return 0


def cmd_segment(args) -> int:
    data = load_csv(args.data, has_header=args.has_header)
    store = _table_store(args)
    n = data.shape[0]
    if n >= 8:
        _note_missing_tables(store, seeded_intervals(n, args.alpha).lengths())
    config = SegmenterConfig(
        zeta_p=args.zeta_p, alpha=args.alpha, kind=args.kind, table_source=store
    )
    result = segment(data, config)
    print(
        f"n={result.n}  kind={result.kind}  zeta_p={result.zeta_p:g}  "
        f"alpha={result.alpha:.6g}"
    )
    if result.m_hat == 0:
        print("no change points found")
    else:
        print(f"{result.m_hat} change point(s):")
        for det in result.detections:
            print(
                f"  k={det.location}  p={det.p_value:.3g}  "
                f"interval=({det.interval[0]}, {det.interval[1]})"
            )
    if args.out:
        result.to_csv(f"{args.out}.csv")
        result.to_json(f"{args.out}.json")
        print(f"results written to {args.out}.csv and {args.out}.json")
    return 0


def _preset_table2(args, store) -> list[dict]:
    """Size/power grid: three generator cases x n x statistic x calibration
    x alternative, one rejection-rate row each. Same seed per cell, so the
    two statistics and the two calibrations see identical datasets."""
    rows = []
    stream = RandomStream(args.seed)
    for case in ("gauss_iid", "t3_iid", "rsrm_gauss"):
        for n in (20, 50, 100):
            for kind in ("sign", "mean"):
                for limit_kind in ("fixed_n", "sequential_proxy"):
                    for alternative in ("null", "dense", "sparse"):
                        config = single_change_config(case, n, p=100, alternative=alternative)
                        report = size_power_experiment(
                            config,
                            kind=kind,
                            limit_kind=limit_kind,
                            replicates=args.replicates,
                            stream=stream,
                            table_source=store,
                            workers=args.threads,
                        )
                        rows.append(report.row())
    return rows


def _preset_segmentation(args, store, case: str) -> list[dict]:
    """Multi-change grid over signal shape, strength, statistic, and decay."""
    rows = []
    stream = RandomStream(args.seed)
    p = 50
    for regime, d in (("dense", p), ("sparse", 5)):
        for h in (2.5, 4.0):
            for kind in ("sign", "mean"):
                for alpha in (2.0 ** -0.5, 2.0 ** -0.25):
                    config = three_change_config(case, h=h, d=d, p=p)
                    report = segmentation_experiment(
                        config,
                        kind=kind,
                        alpha=alpha,
                        replicates=args.replicates,
                        stream=stream,
                        table_source=store,
                        workers=args.threads,
                    )
                    row = report.row()
                    row["regime"] = regime
                    row["h"] = h
                    row["d"] = d
                    rows.append(row)
    return rows


def _preset_powercurve(args, store) -> list[dict]:
    """Rejection rate of the sign statistic against a growing dense shift."""
    rows = []
    stream = RandomStream(args.seed)
    n, p = 100, 100
    for multiplier in (0.0, 0.5, 1.0, 1.5, 2.0):
        shifts = () if multiplier == 0 else ((n // 2, dense_shift(p, scale=multiplier)),)
        config = DgpConfig(case="gauss_iid", n=n, p=p, shifts=shifts)
        report = size_power_experiment(
            config,
            kind="sign",
            limit_kind="fixed_n",
            replicates=args.replicates,
            stream=stream,
            table_source=store,
            workers=args.threads,
        )
        row = report.row()
        row["multiplier"] = multiplier
        rows.append(row)
    return rows


def cmd_simulate(args) -> int:
    store = _table_store(args)
    if args.preset == "table2":
        rows = _preset_table2(args, store)
    elif args.preset == "table3":
        rows = _preset_segmentation(args, store, case="gauss_iid")
    elif args.preset == "table4":
        rows = _preset_segmentation(args, store, case="rsrm_gauss")
    else:
        rows = _preset_powercurve(args, store)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_hill(args) -> int:
    data = load_csv(args.data, has_header=args.has_header)
    estimates = [hill(data[:, j], args.k) for j in range(data.shape[1])]
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["column", "k", "left", "left_defined", "right", "right_defined"])
        for j, est in enumerate(estimates, start=1):
            writer.writerow(
                [j, est.k, repr(est.left), est.left_defined,
                 repr(est.right), est.right_defined]
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signseg",
        description="Robust change-point detection for high-dimensional series.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=12345,
                        help="root seed for all randomness (default 12345)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker process cap (default: logical cores)")
    common.add_argument("--table-dir", default=None,
                        help="directory of cached quantile tables "
                             "(default: $SIGNSEG_TABLE_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantiles", parents=[common],
                       help="simulate a quantile table for one series length")
    q.add_argument("--n", type=int, required=True, help="series length (>= 8)")
    q.add_argument("--B", type=int, default=DEFAULT_B,
                   help=f"Monte Carlo replicates (default {DEFAULT_B})")
    q.add_argument("--out", default=None, help="write the table to this JSON file")
    q.add_argument("--c", type=float, default=None,
                   help="shift magnitude for a noncentral table (needs --bstar)")
    q.add_argument("--bstar", type=float, default=None,
                   help="relative change location in (0, 1) (needs --c)")
    q.set_defaults(func=cmd_quantiles)

    t = sub.add_parser("test", parents=[common],
                       help="test one series for a single change point")
    t.add_argument("--data", required=True, help="CSV file, rows = time points")
    t.add_argument("--kind", choices=("sign", "mean"), default="sign")
    t.add_argument("--level", type=float, default=0.05)
    t.add_argument("--has-header", action="store_true")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("segment", parents=[common],
                       help="estimate multiple change points")
    s.add_argument("--data", required=True, help="CSV file, rows = time points")
    s.add_argument("--zeta-p", type=float, default=DEFAULT_ZETA_P,
                   help=f"p-value threshold (default {DEFAULT_ZETA_P})")
    s.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                   help="interval length decay in (0, 1) (default 2^-1/2)")
    s.add_argument("--kind", choices=("sign", "mean"), default="sign")
    s.add_argument("--out", default=None,
                   help="output prefix; writes <out>.csv and <out>.json")
    s.add_argument("--has-header", action="store_true")
    s.set_defaults(func=cmd_segment)

    m = sub.add_parser("simulate", parents=[common],
                       help="run a canned experiment grid, one CSV row per cell")
    m.add_argument("--preset", required=True,
                   choices=("table2", "table3", "table4", "powercurve"))
    m.add_argument("--replicates", type=int, default=200,
                   help="replicates per grid cell (default 200)")
    m.add_argument("--out", required=True, help="report CSV path")
    m.set_defaults(func=cmd_simulate)

    h = sub.add_parser("hill", parents=[common],
                       help="left/right tail-index estimates per column")
    h.add_argument("--data", required=True, help="CSV file, rows = observations")
    h.add_argument("--k", type=int, required=True, help="extreme order count")
    h.add_argument("--out", default=None, help="write CSV here instead of stdout")
    h.add_argument("--has-header", action="store_true")
    h.set_defaults(func=cmd_hill)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
