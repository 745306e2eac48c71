"""Command line: ``bebound {scan,certify,table,compare}``.

Every artifact carries the tool version and the fully resolved config.
Floats are written as the shortest decimal that round-trips (``repr``).

Exit codes: 0 success, 2 usage, 3 domain/precondition, 4 coverage gap,
5 checkpoint corruption.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .errors import (
    CheckpointCorruptError,
    CoverageGapError,
    DomainError,
    PreconditionError,
    SpecError,
)
from .scan import ScanReport, ScanSpec, TailChoice, certify_global, scan_range
from .tailbounds import (
    COROLLARY_C_D,
    DEFAULT_TABLE2,
    INTERVAL_I,
    NEAMMANEE_D,
    SmallPVariant,
    crossing_n,
    maximize_over_p,
    normal_part_bound,
    table2,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_COVERAGE = 4
EXIT_CHECKPOINT = 5

log = logging.getLogger("bebound")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------


def _int_at_least(lo: int):
    def conv(s: str) -> int:
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer >= {lo}, got {s!r}") from None
        if not v.is_integer() or v < lo:
            raise argparse.ArgumentTypeError(f"expected an integer >= {lo}, got {s!r}")
        return int(v)
    return conv


def _float_in(lo: float, hi: float, lo_open: bool = True):
    left = "(" if lo_open else "["

    def conv(s: str) -> float:
        try:
            v = float(s)
        except ValueError:
            v = math.nan
        ok = (v > lo if lo_open else v >= lo) and v <= hi
        if not ok:
            raise argparse.ArgumentTypeError(f"expected a number in {left}{lo}, {hi}], got {s!r}")
        return v
    return conv


def _positive_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        v = math.nan
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a finite number > 0, got {s!r}")
    return v


def _interval(s: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {s!r}") from None
    if not (0 < a < b <= 0.5):
        raise argparse.ArgumentTypeError(f"need 0 < lo < hi <= 0.5, got {s!r}")
    return a, b


def _variant(s: str) -> SmallPVariant:
    for v in SmallPVariant:
        if v.value.lower() == s.lower():
            return v
    choices = ", ".join(v.value for v in SmallPVariant)
    raise argparse.ArgumentTypeError(f"expected one of {choices}, got {s!r}")


def _tail(s: str) -> TailChoice:
    for v in TailChoice:
        if v.value.lower() == s.lower():
            return v
    choices = ", ".join(v.value for v in TailChoice)
    raise argparse.ArgumentTypeError(f"expected one of {choices}, got {s!r}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--format", choices=["json", "csv", "human"], default="json")
    sp.add_argument("--out", type=Path, help="output file (default: stdout)")
    sp.add_argument("--config", type=Path, help="key=value file; flags given on the command line win")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bebound", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = ScanSpec()
    sp = sub.add_parser("scan", help="grid scan of T_n(p) with a certified upper bound per n")
    sp.add_argument("--n-lo", type=_int_at_least(1), default=d.n_lo)
    sp.add_argument("--n-hi", type=_int_at_least(1), default=d.n_hi)
    sp.add_argument("--p-lo", type=_float_in(0.0, 0.5), default=d.p_lo)
    sp.add_argument("--p-hi", type=_float_in(0.0, 0.5), default=d.p_hi)
    sp.add_argument("--step", type=_positive_float, default=d.step)
    sp.add_argument("--workers", type=_int_at_least(1), default=d.workers)
    sp.add_argument("--checkpoint", type=Path)
    sp.add_argument("--checkpoint-every", type=_int_at_least(1), default=d.checkpoint_every)
    sp.add_argument("--resume", action="store_true", help="continue from --checkpoint")
    sp.add_argument("--refine-target", type=_positive_float,
                    help="bisect grid cells until each cell bound is below this value")
    sp.add_argument("--max-depth", type=_int_at_least(0), default=d.max_depth)
    sp.add_argument("--allowance", type=_float_in(0.0, 1.0, lo_open=False), default=d.allowance)
    sp.add_argument("--full-range", action="store_true", help="never restrict the k window")
    _common(sp)

    cp = sub.add_parser("certify", help="combine a scan report with small-p and large-n bounds")
    cp.add_argument("--report", type=Path, required=True)
    cp.add_argument("--small-p-variant", type=_variant, default=SmallPVariant.KS2010)
    cp.add_argument("--tail", type=_tail, default=TailChoice.THEOREM_A)
    cp.add_argument("--n-tail", type=_int_at_least(1), help="default: the report's n_hi")
    _common(cp)

    tp = sub.add_parser("table", help="maxima of the D2 coefficients over p")
    tp.add_argument("--interval", type=_interval, action="append",
                    help="lo,hi (repeatable; crossed with --N)")
    tp.add_argument("--N", type=_int_at_least(200), action="append", dest="N")
    _common(tp)

    mp = sub.add_parser("compare", help="sup over p of E(p) + d/(sigma (p^2+q^2)) at probe n")
    mp.add_argument("--d", type=_positive_float, action="append",
                    help=f"constant d (repeatable; default {COROLLARY_C_D} and {NEAMMANEE_D})")
    mp.add_argument("--n", type=_int_at_least(1), action="append", dest="n",
                    help="probe n (repeatable)")
    mp.add_argument("--target", type=_positive_float, help="level to compare against")
    mp.add_argument("--locate", type=_int_at_least(1), nargs=2, metavar=("N_LO", "N_HI"),
                    help="bisect for the first n below --target")
    mp.add_argument("--interval", type=_interval, default=INTERVAL_I)
    _common(mp)
    return ap


def _config_argv(path: Path, sp: argparse.ArgumentParser) -> list[str]:
    """Translate a key=value file into flags for subparser ``sp``."""
    flags = {}
    for a in sp._actions:
        for opt in a.option_strings:
            if opt.startswith("--"):
                flags[opt[2:]] = a
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    argv: list[str] = []
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config {path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        act = flags.get(key)
        if act is None or key in ("config", "help"):
            raise UsageError(f"--config {path}:{no}: unknown key {key!r}")
        if isinstance(act, argparse._StoreTrueAction):
            if val.lower() in ("1", "true", "yes"):
                argv.append(f"--{key}")
            elif val.lower() not in ("0", "false", "no"):
                raise UsageError(f"--config {path}:{no}: {key} expects true/false")
        elif act.nargs is not None and act.nargs not in (None, "?"):
            argv += [f"--{key}", *val.split()]
        else:
            for v in val.split() if isinstance(act, argparse._AppendAction) else [val]:
                argv += [f"--{key}", v]
    return argv


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = ap.parse_args(argv)
    if args.config is not None:
        sp = ap._subparsers._group_actions[0].choices[args.command]
        extra = _config_argv(args.config, sp)
        i = argv.index(args.command) + 1
        args = ap.parse_args(argv[:i] + extra + argv[i:])
    return args


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (SmallPVariant, TailChoice)):
        return v.value
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def resolved_config(args: argparse.Namespace) -> dict:
    skip = {"format", "out", "config", "verbose"}
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in skip}


def _human(obj, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.append(_human(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, dict):
                lines.append(f"{pad}- " + ", ".join(f"{k}={_scalar(x)}" for k, x in v.items()))
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    return "\n".join(lines)


def _flat(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _scalar(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    if v is None:
        return "-"
    return repr(v) if isinstance(v, float) else str(v)


def _csv(rows: list[dict], meta: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# tool=bebound {meta['tool_version']}\n")
    for k, v in meta["config"].items():
        buf.write(f"# {k}={json.dumps(v)}\n")
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else _scalar(x) for x in r.values()])
    return buf.getvalue()


def emit(args, result: dict, rows: list[dict]) -> None:
    artifact = {
        "tool": "bebound",
        "tool_version": __version__,
        "command": args.command,
        "config": resolved_config(args),
        "result": result,
    }
    if args.format == "json":
        text = json.dumps(artifact, indent=1) + "\n"
    elif args.format == "csv":
        text = _csv(rows, artifact)
    else:
        text = _human(artifact) + "\n"
    if args.out is None:
        sys.stdout.write(text)
        return
    # write-then-rename so a failure never leaves a partial file behind
    out = Path(args.out)
    fd, tmp = tempfile.mkstemp(dir=out.parent if str(out.parent) else ".", prefix=".bebound-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, out)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_scan(args) -> int:
    spec = ScanSpec(
        n_lo=args.n_lo, n_hi=args.n_hi, p_lo=args.p_lo, p_hi=args.p_hi, step=args.step,
        workers=args.workers, checkpoint_every=args.checkpoint_every,
        refine_target=args.refine_target, max_depth=args.max_depth,
        allowance=args.allowance, full_range=args.full_range,
    )
    if args.resume and args.checkpoint is None:
        raise UsageError("--resume needs --checkpoint")
    report = scan_range(spec, checkpoint=args.checkpoint, resume=args.resume)
    emit(args, report.to_dict(), [r.fields() for r in report.per_n])
    return EXIT_OK


def _load_report(path: Path) -> ScanReport:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--report: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--report: {path} is not JSON ({exc})") from None
    if "result" in data and "per_n" in data["result"]:
        data = data["result"]  # a full scan artifact
    try:
        return ScanReport.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"--report: {path} is not a scan report ({exc})") from None


def cmd_certify(args) -> int:
    report = _load_report(args.report)
    res = certify_global(report, args.small_p_variant, args.tail, args.n_tail)
    rows = [{"regime": p.regime, "bound": p.bound, "n_lo": p.n_range[0], "n_hi": p.n_range[1],
             "p_lo": p.p_range[0], "p_hi": p.p_range[1], "rigorous": p.rigorous,
             "source": p.source} for p in res.parts]
    rows.append({"regime": "verdict", "bound": res.verdict, "n_lo": 1, "n_hi": None,
                 "p_lo": 0.0, "p_hi": 0.5, "rigorous": all(p.rigorous for p in res.parts),
                 "source": f"max of the parts ({res.verdict_regime})"})
    emit(args, res.to_dict(), rows)
    return EXIT_OK


def cmd_table(args) -> int:
    if args.interval is None and args.N is None:
        cells = DEFAULT_TABLE2
    else:
        ivs = args.interval or [INTERVAL_I]
        Ns = args.N or [200]
        cells = [(iv, N) for iv in ivs for N in Ns]
    rows = [{"p_lo": c.interval[0], "p_hi": c.interval[1], "N": c.N,
             "D2_max": c.D2_max, "D2_argmax": c.D2_argmax,
             "D2bar_max": c.D2bar_max, "D2bar_argmax": c.D2bar_argmax}
            for c in table2(cells)]
    emit(args, {"cells": rows}, rows)
    return EXIT_OK


def cmd_compare(args) -> int:
    ds = args.d or [COROLLARY_C_D, NEAMMANEE_D]
    ns = args.n or [970_000, 971_000, 4_200_000, 4_600_000]
    a, b = args.interval
    rows = []
    for d in ds:
        for n in ns:
            sup, arg = maximize_over_p(lambda p: normal_part_bound(p, n, d), a, b)
            row = {"d": d, "n": n, "sup": sup, "argmax_p": arg}
            if args.target is not None:
                row["below_target"] = sup < args.target
            rows.append(row)
    result = {"probes": rows}
    if args.locate is not None:
        if args.target is None:
            raise UsageError("--locate needs --target")
        result["crossings"] = [
            {"d": d, "first_n_below": crossing_n(d, args.target, *args.locate, interval=(a, b))}
            for d in ds
        ]
    emit(args, result, rows)
    return EXIT_OK


COMMANDS = {"scan": cmd_scan, "certify": cmd_certify, "table": cmd_table, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"bebound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bebound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecError as exc:
        print(f"bebound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, PreconditionError) as exc:
        print(f"bebound: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CoverageGapError as exc:
        print(f"bebound: coverage gap: {exc}", file=sys.stderr)
        return EXIT_COVERAGE
    except CheckpointCorruptError as exc:
        print(f"bebound: corrupt checkpoint: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT


if __name__ == "__main__":
    sys.exit(main())
