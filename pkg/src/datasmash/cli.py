"""Command-line front end.

Exit status: 0 on success, 1 on bad input or usage, 2 when a job ran to
completion but some output was too short to trust.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import annihilation as ann
from . import pfsa as pf
from . import quantizer as qz
from . import stream_ops as ops
from .symbolic import read_streams, write_streams

EXIT_OK, EXIT_ERROR, EXIT_INSUFFICIENT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for insufficiency here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _load_streams(path, alphabet=None):
    with open(path) as fh:
        try:
            return read_streams(fh, alphabet)
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from None


def _load_pfsa(path):
    try:
        return pf.load_pfsa(path)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


# ------------------------------------------------------------------ numeric I/O


def read_series(path, layout: str = "rows") -> tuple[list[np.ndarray], list[str]]:
    """Numeric series from CSV: one series per line, or one per column.

    Lines starting with ``#`` are ignored.  In column layout a first row
    that does not parse as numbers is taken as the header.
    """
    with open(path, newline="") as fh:
        rows = [(n, r) for n, r in enumerate(csv.reader(fh), start=1)
                if r and any(c.strip() for c in r) and not r[0].lstrip().startswith("#")]

    def parse(n, cells):
        out = []
        for col, cell in enumerate(cells, start=1):
            cell = cell.strip()
            if not cell:
                continue
            try:
                x = float(cell)
            except ValueError:
                raise UsageError(f"{path}: line {n}, column {col}: not a number: {cell!r}") from None
            if not np.isfinite(x):
                raise UsageError(f"{path}: line {n}, column {col}: non-finite value")
            out.append(x)
        return out

    if layout == "rows":
        series = [np.array(parse(n, r)) for n, r in rows]
        return series, [f"s{i}" for i in range(len(series))]
    if layout != "columns":
        raise UsageError(f"unknown layout {layout!r}")
    if not rows:
        return [], []
    header = None
    try:
        parse(*rows[0])
    except UsageError:
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    width = max(len(r) for _, r in rows) if rows else len(header or [])
    cols: list[list[float]] = [[] for _ in range(width)]
    for n, r in rows:
        for col, cell in enumerate(r):
            cell = cell.strip()
            if cell:
                cols[col].extend(parse(n, [cell]))
    labels = header if header and len(header) == width else [f"s{i}" for i in range(width)]
    return [np.array(c) for c in cols], labels


# ------------------------------------------------------------------ commands


def cmd_quantize(args) -> int:
    series, labels = [], []
    for path in args.input:
        s, lab = read_series(path, args.layout)
        series.extend(s)
        labels.extend(lab if len(args.input) == 1 else [f"{path}:{x}" for x in lab])
    if args.mode != "none":
        try:
            series = [qz.difference_series(v, args.mode) for v in series]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.partition:
        with open(args.partition) as fh:
            part = qz.Partition.from_text(fh.read())
    else:
        if not args.alphabet:
            raise UsageError("--alphabet or --partition is required")
        sizes = args.alphabet
        if len(sizes) == 1:
            part = qz.fit_max_entropy_partition(series, sizes[0])
        else:
            if args.seed is None:
                raise UsageError("--seed is required when selecting among alphabet sizes")
            part, scores = qz.select_alphabet_size(series, sizes, args.epsilon, args.seed, floor=args.floor)
            for k, sc in scores.items():
                print(f"# k={k} self={sc.mean_self_error:.6g} discrimination={sc.mean_discrimination:.6g} "
                      f"ratio={sc.ratio:.6g} min_freq={sc.min_symbol_freq:.4g}", file=sys.stderr)
            print(f"# selected k={part.k}", file=sys.stderr)
    if args.partition_out:
        _write(args.partition_out, part.to_text())
    streams = [qz.quantize(v, part) for v in series]
    _write(args.out, write_streams(streams, labels))
    return EXIT_OK


def cmd_ops(args) -> int:
    streams, labels = _load_streams(args.streams, args.alphabet)
    if args.op in ("copy", "invert") and args.seed is None:
        raise UsageError(f"--seed is required for {args.op}")
    out = []
    if args.op == "sum":
        if args.rhs:
            rhs, _ = _load_streams(args.rhs, streams[0].k if streams else args.alphabet)
        else:
            if len(streams) != 2:
                raise UsageError("sum needs --rhs or a stream file with exactly two streams")
            streams, rhs = streams[:1], streams[1:]
        if len(rhs) != len(streams):
            raise UsageError(f"sum: {len(streams)} left streams but {len(rhs)} right streams")
        for a, b in zip(streams, rhs):
            if a.k != b.k:
                raise UsageError(f"alphabet mismatch: {a.k} vs {b.k}")
            out.append(ops.sum_streams(a, b))
        labels = labels[: len(out)]
    else:
        fn = ops.independent_copy if args.op == "copy" else ops.invert_stream
        out = [fn(s, ops.seed_sequence(args.seed, i)) for i, s in enumerate(streams)]
    _write(args.out, write_streams(out, labels))
    return EXIT_OK


def _read_calibration(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append({k: (int(v) if k in ("length", "depth") else float(v)) for k, v in r.items()})
    return out


def cmd_smash(args) -> int:
    streams, labels = _load_streams(args.streams, args.alphabet)
    if len(streams) < 2:
        raise UsageError("smash needs at least two streams")
    i, j = args.pair
    if not (0 <= i < len(streams) and 0 <= j < len(streams)):
        raise UsageError(f"--pair indices outside 0..{len(streams) - 1}")
    cfg = ann.SmashConfig(epsilon=args.epsilon, seed=args.seed, depth=args.depth,
                          min_output_symbols=args.min_output)
    res = ann.smash(streams[i], streams[j], cfg)
    print(f"streams: {labels[i]} vs {labels[j]}  (alphabet {streams[i].k}, depth {res.depth})")
    print(f"  eps11 = {res.eps11:.6f}  self-annihilation of {labels[i]}: "
          f"{'sufficient' if res.sufficient1 else 'INSUFFICIENT'}")
    print(f"  eps22 = {res.eps22:.6f}  self-annihilation of {labels[j]}: "
          f"{'sufficient' if res.sufficient2 else 'INSUFFICIENT'}")
    print(f"  eps12 = {res.eps12:.6f}  same source: {'yes' if res.same_source else 'no'}")
    if res.short_outputs:
        print(f"  short outputs (< {cfg.min_output_symbols} symbols): {', '.join(res.short_outputs)}")
    record = res.record()
    if args.calibration:
        cal = _read_calibration(args.calibration)
        bound = ann.noise_bound(cal, res.output_lengths[2])
        if bound is None:
            print("  calibration: no calibrated length at or below the residue length")
            record += " noise_bound=- within_noise=-"
        else:
            print(f"  calibration: FWN p99 bound {bound:.6f}; eps12 {'within' if res.eps12 <= bound else 'above'} noise")
            record += f" noise_bound={bound:.6g} within_noise={int(res.eps12 <= bound)}"
    print(record)
    return EXIT_INSUFFICIENT if res.short_outputs else EXIT_OK


def _matrix_csv(mat, labels, fmt="{:.6f}") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(labels)
    for row in mat:
        w.writerow([fmt.format(x) for x in row])
    return buf.getvalue()


def cmd_matrix(args) -> int:
    streams, labels = _load_streams(args.streams, args.alphabet)
    cfg = ann.SmashConfig(epsilon=args.epsilon, seed=args.seed, depth=args.depth,
                          min_output_symbols=args.min_output)
    dm = ann.distance_matrix(streams, cfg, threads=args.threads, order_invariant=args.order_invariant)
    _write(args.out, _matrix_csv(dm.H, labels))
    if args.raw:
        _write(args.raw, _matrix_csv(dm.E, labels))
    mask_path = args.mask or (None if args.out in (None, "-") else _sidecar(args.out))
    if mask_path:
        _write(mask_path, _matrix_csv(dm.mask.astype(int), labels, "{:d}"))
    if not dm.all_sufficient:
        print(f"warning: {int((~dm.mask).sum())} cells produced fewer than "
              f"{cfg.min_output_symbols} residue symbols", file=sys.stderr)
        return EXIT_INSUFFICIENT
    return EXIT_OK


def _sidecar(path: str) -> str:
    stem = path[:-4] if path.lower().endswith(".csv") else path
    return stem + ".mask.csv"


def cmd_simulate(args) -> int:
    g = _load_pfsa(args.pfsa)
    bad = pf.validate(g)
    if bad:
        raise UsageError(f"{args.pfsa}: invalid PFSA ({', '.join(bad)})")
    start = "stationary" if args.start is None else args.start
    streams = [pf.sample(g, args.length, ops.seed_sequence(args.seed, i), start=start)
               for i in range(args.count)]
    _write(args.out, write_streams(streams))
    return EXIT_OK


def cmd_algebra(args) -> int:
    op = args.op
    needs_rhs = op in ("add", "subtract", "compose", "theta")
    if op == "zero":
        if not args.alphabet:
            raise UsageError("zero needs --alphabet")
        _write(args.out, pf.format_pfsa(pf.zero_model(args.alphabet)))
        return EXIT_OK
    if not args.lhs:
        raise UsageError(f"{op} needs --lhs")
    g1 = _load_pfsa(args.lhs)
    g2 = None
    if needs_rhs:
        if not args.rhs:
            raise UsageError(f"{op} needs --rhs")
        g2 = _load_pfsa(args.rhs)
        if g1.k != g2.k:
            raise UsageError(f"alphabet mismatch: lhs has {g1.k} symbols, rhs has {g2.k}")
    if op == "validate":
        bad = pf.validate(g1)
        print("ok" if not bad else "violations: " + ", ".join(bad))
        return EXIT_OK if not bad else EXIT_ERROR
    for name, g in (("lhs", g1), ("rhs", g2)):
        if g is not None and pf.validate(g):
            raise UsageError(f"{name}: invalid PFSA ({', '.join(pf.validate(g))})")
    if op == "add":
        _write(args.out, pf.format_pfsa(pf.add(g1, g2)))
    elif op == "subtract":
        _write(args.out, pf.format_pfsa(pf.subtract(g1, g2)))
    elif op == "invert":
        _write(args.out, pf.format_pfsa(pf.invert(g1)))
    elif op == "compose":
        _write(args.out, pf.format_pfsa(pf.synchronous_compose(g1, g2)))
    elif op == "theta":
        print(f"{pf.theta_distance(g1, g2, args.depth):.12g}")
    elif op == "stationary":
        print(" ".join(f"{x:.12g}" for x in pf.stationary_distribution(g1)))
    elif op == "pseudo-copy":
        mat = pf.pseudo_copy(g1, args.gamma)
        _write(args.out, "\n".join(" ".join(f"{x:.12g}" for x in row) for row in mat) + "\n")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    rows = ann.calibrate(args.alphabet, args.lengths, args.depth, args.seed, args.trials)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.8g}" if isinstance(v, float) else v) for k, v in r.items()})
    _write(args.out, buf.getvalue())
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="datasmash", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def smash_opts(sp, seed_required=True):
        sp.add_argument("--epsilon", type=float, default=0.05)
        sp.add_argument("--depth", type=int, default=None, help="override the history depth")
        sp.add_argument("--seed", type=int, required=seed_required)
        sp.add_argument("--min-output", type=int, default=100, dest="min_output")
        sp.add_argument("--alphabet", type=int, default=None)

    q = sub.add_parser("quantize", help="numeric CSV -> symbol streams")
    q.add_argument("--input", nargs="+", required=True)
    q.add_argument("--layout", choices=("rows", "columns"), default="rows")
    q.add_argument("--alphabet", type=_int_list, default=None,
                   help="alphabet size, or comma-separated candidates to select from")
    q.add_argument("--partition", help="use an existing partition file")
    q.add_argument("--partition-out", dest="partition_out")
    q.add_argument("--mode", choices=("none", "absolute", "relative"), default="none")
    q.add_argument("--epsilon", type=float, default=0.05)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--floor", type=float, default=qz.DEFAULT_FLOOR)
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_quantize)

    o = sub.add_parser("ops", help="copy / invert / sum symbol streams")
    o.add_argument("op", choices=("copy", "invert", "sum"))
    o.add_argument("--streams", required=True)
    o.add_argument("--rhs")
    o.add_argument("--seed", type=int, default=None)
    o.add_argument("--alphabet", type=int, default=None)
    o.add_argument("--out", default="-")
    o.set_defaults(func=cmd_ops)

    s = sub.add_parser("smash", help="annihilation circuit on one pair of streams")
    s.add_argument("--streams", required=True)
    s.add_argument("--pair", type=int, nargs=2, default=(0, 1), metavar=("I", "J"))
    s.add_argument("--calibration")
    smash_opts(s)
    s.set_defaults(func=cmd_smash)

    m = sub.add_parser("matrix", help="pairwise distance matrix")
    m.add_argument("--streams", required=True)
    m.add_argument("--out", default="-")
    m.add_argument("--raw", help="also write E (self errors on the diagonal)")
    m.add_argument("--mask", help="sufficiency mask CSV (default: <out>.mask.csv)")
    m.add_argument("--threads", type=int, default=1)
    m.add_argument("--order-invariant", action="store_true", dest="order_invariant")
    smash_opts(m)
    m.set_defaults(func=cmd_matrix)

    g = sub.add_parser("simulate", help="sample streams from a PFSA file")
    g.add_argument("--pfsa", required=True)
    g.add_argument("--length", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--start", type=int, default=None, help="start state (default: stationary draw)")
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_simulate)

    a = sub.add_parser("algebra", help="PFSA group algebra")
    a.add_argument("op", choices=("add", "subtract", "invert", "compose", "zero", "theta",
                                  "stationary", "validate", "pseudo-copy"))
    a.add_argument("--lhs")
    a.add_argument("--rhs")
    a.add_argument("--alphabet", type=int)
    a.add_argument("--depth", type=int, default=6)
    a.add_argument("--gamma", type=float, default=0.5)
    a.add_argument("--out", default="-")
    a.set_defaults(func=cmd_algebra)

    c = sub.add_parser("calibrate", help="FWN percentiles of the deviation estimate")
    c.add_argument("--alphabet", type=int, required=True)
    c.add_argument("--lengths", type=_int_list, required=True)
    c.add_argument("--depth", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
