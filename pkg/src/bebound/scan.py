"""Parallel, resumable sweep of T_n(p) over n and a p-grid, and the global
certificate assembled from it.

One work unit is one n: the grid nodes p_j = p_lo + j*h (last node clamped to
p_hi) are streamed through the discrepancy kernel, the grid maximum is
recorded and, when a refinement target is set, every cell whose Lipschitz
bound reaches the target is bisected.  Results are merged in ascending n, so
a report does not depend on the worker count or on completion order.

Checkpoints are JSON lines: a header carrying the spec digest, then one
record per finished n with a SHA-256 digest of its fields.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import logging
import math
import multiprocessing
import os
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from numba import njit

from . import __version__
from .certify import _cell_bound, certify_interval
from .discrepancy import WINDOW_MIN_N, _delta_n_kernel, _rho, _window_bounds
from .errors import CheckpointCorruptError, CoverageGapError, PreconditionError, SpecError
from .tailbounds import (
    COROLLARY_C_D,
    N0,
    NEAMMANEE_D,
    SmallPVariant,
    E_bound,
    maximize_over_p,
    normal_part_bound,
    small_p_T_bound,
)

__all__ = [
    "ScanSpec",
    "NRecord",
    "ScanReport",
    "TailChoice",
    "CertificatePart",
    "CertificateResult",
    "scan_range",
    "scan_n",
    "certify_global",
    "read_checkpoint",
    "DESK_SPEC",
]

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
# above this many T evaluations per n a spec is flagged as long-running
_LONG_RUNNING_EVALS = 5e9


@dataclass(frozen=True)
class ScanSpec:
    """What to scan.  ``workers`` and ``checkpoint_every`` never change results."""

    n_lo: int = 1
    n_hi: int = 5000
    p_lo: float = 0.1689
    p_hi: float = 0.5
    step: float = 1e-6
    workers: int = 1
    checkpoint_every: int = 50
    refine_target: float | None = None
    max_depth: int = 40
    allowance: float = 1e-10
    full_range: bool = False

    def __post_init__(self) -> None:
        if int(self.n_lo) != self.n_lo or int(self.n_hi) != self.n_hi:
            raise SpecError("n_lo and n_hi must be integers")
        if not (1 <= self.n_lo <= self.n_hi):
            raise SpecError(f"need 1 <= n_lo <= n_hi, got n_lo={self.n_lo}, n_hi={self.n_hi}")
        if not (0.0 < self.p_lo <= self.p_hi <= 0.5):
            raise SpecError(f"need 0 < p_lo <= p_hi <= 0.5, got p_lo={self.p_lo}, p_hi={self.p_hi}")
        if not (self.step > 0 and math.isfinite(self.step)):
            raise SpecError(f"step must be a positive finite number, got {self.step}")
        if self.workers < 1:
            raise SpecError(f"workers must be >= 1, got {self.workers}")
        if self.checkpoint_every < 1:
            raise SpecError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")
        if self.max_depth < 0:
            raise SpecError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.allowance < 0:
            raise SpecError(f"allowance must be >= 0, got {self.allowance}")

    @property
    def intervals(self) -> int:
        """Number of grid cells J; nodes are indexed 0..J."""
        return _intervals(self.p_lo, self.p_hi, self.step)

    def nodes(self) -> np.ndarray:
        j = np.arange(self.intervals + 1, dtype=np.float64)
        out = self.p_lo + j * self.step
        out[-1] = self.p_hi
        return out

    @property
    def long_running(self) -> bool:
        return (self.intervals + 1) * (self.n_hi - self.n_lo + 1) > _LONG_RUNNING_EVALS

    def numeric_dict(self) -> dict:
        """Fields that determine the numbers in a report."""
        d = asdict(self)
        del d["workers"], d["checkpoint_every"]
        return d

    def digest(self) -> str:
        return _digest(self.numeric_dict())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScanSpec":
        return cls(**d)


DESK_SPEC = ScanSpec()


def _intervals(p_lo: float, p_hi: float, h: float) -> int:
    if p_lo == p_hi:
        return 0
    J = max(1, math.ceil((p_hi - p_lo) / h))
    while J > 1 and p_lo + (J - 1) * h >= p_hi:
        J -= 1
    while p_lo + J * h < p_hi:
        J += 1
    return J


@dataclass(frozen=True)
class NRecord:
    n: int
    p_argmax: float
    t_max: float
    certified_bound: float
    coarse_bound: float
    evaluations: int

    def fields(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------


@njit(cache=True)
def _t_at(n, p, restricted):
    lo, hi = _window_bounds(n, p, restricted)
    best, _ = _delta_n_kernel(n, p, lo, hi)
    return math.sqrt(n) * best / _rho(p)


@njit(cache=True)
def _node(j, J, p_lo, p_hi, h):
    if j == J:
        return p_hi
    return p_lo + j * h


@njit(cache=True)
def _scan_n_kernel(n, p_lo, p_hi, h, J, restricted, refine, target, max_depth, allowance):
    """Stream the grid for one n.

    Returns (grid max, first argmax, refined bound, evaluations).  The refined
    bound is the largest leaf bound after bisecting every cell whose bound
    (plus ``allowance``) reaches ``target``; -inf when refinement is off.
    """
    sqrt_n = math.sqrt(n)
    st_a = np.empty(max_depth + 2)
    st_b = np.empty(max_depth + 2)
    st_fa = np.empty(max_depth + 2)
    st_fb = np.empty(max_depth + 2)
    st_d = np.empty(max_depth + 2, dtype=np.int64)

    f_prev = _t_at(n, p_lo, restricted)
    gmax = f_prev
    parg = p_lo
    evals = 1
    worst = -math.inf
    for j in range(1, J + 1):
        p = _node(j, J, p_lo, p_hi, h)
        f = _t_at(n, p, restricted)
        evals += 1
        if f > gmax:
            gmax = f
            parg = p
        if refine:
            top = 0
            st_a[0] = _node(j - 1, J, p_lo, p_hi, h)
            st_b[0] = p
            st_fa[0] = f_prev
            st_fb[0] = f
            st_d[0] = 0
            top = 1
            while top > 0:
                top -= 1
                a = st_a[top]
                b = st_b[top]
                fa = st_fa[top]
                fb = st_fb[top]
                d = st_d[top]
                bound = _cell_bound(sqrt_n, a, b, fa, fb) + allowance
                m = 0.5 * (a + b)
                if bound < target or d >= max_depth or not (a < m < b):
                    if bound > worst:
                        worst = bound
                    continue
                fm = _t_at(n, m, restricted)
                evals += 1
                st_a[top] = m
                st_b[top] = b
                st_fa[top] = fm
                st_fb[top] = fb
                st_d[top] = d + 1
                top += 1
                st_a[top] = a
                st_b[top] = m
                st_fa[top] = fa
                st_fb[top] = fm
                st_d[top] = d + 1
                top += 1
        f_prev = f
    return gmax, parg, worst, evals


def scan_n(n: int, spec: ScanSpec) -> NRecord:
    """Grid maximum and certified bound on sup_{p in [p_lo, p_hi]} T_n(p)."""
    J = spec.intervals
    restricted = (n > WINDOW_MIN_N) and not spec.full_range
    refine = spec.refine_target is not None and J > 0
    target = spec.refine_target if refine else 0.0
    gmax, parg, refined, evals = _scan_n_kernel(
        int(n), spec.p_lo, spec.p_hi, spec.step, J, restricted, refine,
        float(target), int(spec.max_depth), float(spec.allowance),
    )
    gmax = float(gmax)
    if J == 0:
        coarse = gmax
    else:
        coarse = certify_interval(n, gmax, spec.p_lo, spec.step, spec.p_hi).certified_bound
    certified = min(coarse, float(refined)) if refine else coarse
    return NRecord(int(n), float(parg), gmax, certified, coarse, int(evals))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class ScanReport:
    spec: ScanSpec
    per_n: list[NRecord]
    global_max: float
    global_argmax: tuple[int, float]
    global_certified: float
    elapsed: float = 0.0
    resumed_from: str | None = None
    tool_version: str = __version__

    @classmethod
    def from_records(cls, spec: ScanSpec, records: list[NRecord], elapsed: float = 0.0,
                     resumed_from: str | None = None) -> "ScanReport":
        records = sorted(records, key=lambda r: r.n)
        _check_coverage(spec, records)
        top = max(records, key=lambda r: (r.t_max, -r.n))
        return cls(
            spec=spec,
            per_n=records,
            global_max=top.t_max,
            global_argmax=(top.n, top.p_argmax),
            global_certified=max(r.certified_bound for r in records),
            elapsed=elapsed,
            resumed_from=resumed_from,
        )

    def body(self) -> dict:
        """Everything that must be reproducible (no timing, no resume info)."""
        return {
            "spec": self.spec.numeric_dict(),
            "per_n": [r.fields() for r in self.per_n],
            "global_max": self.global_max,
            "global_argmax": list(self.global_argmax),
            "global_certified": self.global_certified,
        }

    def to_dict(self) -> dict:
        d = self.body()
        d["spec"] = self.spec.to_dict()
        d["elapsed_seconds"] = self.elapsed
        d["resumed_from"] = self.resumed_from
        d["tool_version"] = self.tool_version
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "ScanReport":
        spec = ScanSpec.from_dict(d["spec"])
        recs = [NRecord(**r) for r in d["per_n"]]
        rep = cls.from_records(spec, recs, d.get("elapsed_seconds", 0.0), d.get("resumed_from"))
        rep.tool_version = d.get("tool_version", __version__)
        return rep

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ScanReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(NRecord.__dataclass_fields__)
        w.writerow(names)
        for r in self.per_n:
            w.writerow([repr(getattr(r, k)) for k in names])
        return buf.getvalue()


def _check_coverage(spec: ScanSpec, records: list[NRecord]) -> None:
    ns = [r.n for r in records]
    want = list(range(spec.n_lo, spec.n_hi + 1))
    if ns != want:
        raise CoverageGapError(
            f"records cover {len(ns)} values, expected n in [{spec.n_lo}, {spec.n_hi}]"
        )


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def _digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _record_line(rec: NRecord) -> str:
    f = rec.fields()
    return json.dumps({"kind": "record", **f, "digest": _digest(f)}) + "\n"


def _header_line(spec: ScanSpec) -> str:
    return json.dumps({
        "kind": "header",
        "version": CHECKPOINT_VERSION,
        "spec": spec.numeric_dict(),
        "spec_digest": spec.digest(),
    }) + "\n"


def read_checkpoint(path: str | os.PathLike, spec: ScanSpec) -> list[NRecord]:
    """Validated records from a checkpoint written for ``spec``.

    A final line without a newline (a write torn by a kill) is ignored; any
    complete line that fails to parse or to match its digest is corruption.
    """
    text = Path(path).read_text()
    lines = text.split("\n")
    if lines and lines[-1] != "":
        log.warning("dropping torn final checkpoint line")
    lines = [ln for ln in lines[:-1]]
    if not lines:
        return []
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CheckpointCorruptError(f"unreadable checkpoint header: {exc}") from None
    if head.get("kind") != "header" or head.get("spec_digest") != _digest(head.get("spec")):
        raise CheckpointCorruptError("checkpoint header failed its digest check")
    if head["spec_digest"] != spec.digest():
        raise SpecError("checkpoint was written for a different scan spec")
    seen: dict[int, NRecord] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
            digest = obj.pop("digest")
            obj.pop("kind")
            rec = NRecord(**obj)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CheckpointCorruptError(f"line {lineno}: unreadable record ({exc})") from None
        if _digest(rec.fields()) != digest:
            raise CheckpointCorruptError(f"line {lineno}: digest mismatch for n={rec.n}")
        if not (spec.n_lo <= rec.n <= spec.n_hi) or rec.n in seen:
            raise CheckpointCorruptError(f"line {lineno}: unexpected record for n={rec.n}")
        seen[rec.n] = rec
    return list(seen.values())


class _CheckpointWriter:
    def __init__(self, path: Path, spec: ScanSpec, fresh: bool):
        self.path = path
        self.every = spec.checkpoint_every
        self.buf: list[str] = []
        if fresh:
            with open(path, "w") as fh:
                fh.write(_header_line(spec))
        else:
            # cut a torn tail so appends start on a line boundary
            data = path.read_bytes()
            cut = data.rfind(b"\n") + 1
            if cut != len(data):
                with open(path, "r+b") as fh:
                    fh.truncate(cut)

    def add(self, rec: NRecord) -> None:
        self.buf.append(_record_line(rec))
        if len(self.buf) >= self.every:
            self.flush()

    def flush(self) -> None:
        if not self.buf:
            return
        with open(self.path, "a") as fh:
            fh.write("".join(self.buf))
            fh.flush()
            os.fsync(fh.fileno())
        self.buf.clear()


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _job(args):
    n, spec = args
    return scan_n(n, spec)


def _interleave(ns: list[int], workers: int) -> list[int]:
    # deal the costliest (largest) n first, round-robin across workers
    ns = sorted(ns, reverse=True)
    return [n for w in range(workers) for n in ns[w::workers]] if workers > 1 else sorted(ns)


def scan_range(
    spec: ScanSpec,
    checkpoint: str | os.PathLike | None = None,
    resume: bool = False,
) -> ScanReport:
    """Scan every n in [n_lo, n_hi]; see the module docstring."""
    t0 = time.perf_counter()
    if spec.long_running:
        log.warning("scan spec is long-running: %d nodes x %d values of n",
                    spec.intervals + 1, spec.n_hi - spec.n_lo + 1)
    done: list[NRecord] = []
    resumed_from = None
    writer = None
    if checkpoint is not None:
        path = Path(checkpoint)
        if resume and path.exists():
            done = read_checkpoint(path, spec)
            resumed_from = f"{path.name}:{len(done)}"
            log.info("resuming with %d of %d values of n done", len(done), spec.n_hi - spec.n_lo + 1)
            writer = _CheckpointWriter(path, spec, fresh=False)
        else:
            writer = _CheckpointWriter(path, spec, fresh=True)

    have = {r.n for r in done}
    todo = [n for n in range(spec.n_lo, spec.n_hi + 1) if n not in have]
    records = list(done)

    def collect(rec: NRecord) -> None:
        records.append(rec)
        if writer is not None:
            writer.add(rec)

    try:
        if spec.workers == 1 or len(todo) <= 1:
            for n in todo:
                collect(scan_n(n, spec))
        else:
            order = _interleave(todo, spec.workers)
            with multiprocessing.get_context("fork").Pool(spec.workers) as pool:
                for rec in pool.imap_unordered(_job, [(n, spec) for n in order], chunksize=1):
                    collect(rec)
    finally:
        if writer is not None:
            writer.flush()
    return ScanReport.from_records(spec, records, time.perf_counter() - t0, resumed_from)


# ---------------------------------------------------------------------------
# global certificate
# ---------------------------------------------------------------------------


class TailChoice(str, enum.Enum):
    THEOREM_A = "TheoremA"
    COROLLARY_C = "CorollaryC"
    NEAMMANEE = "Neammanee"


@dataclass(frozen=True)
class CertificatePart:
    regime: str
    bound: float
    n_range: tuple[int, int | None]  # None: unbounded above
    p_range: tuple[float, float]
    source: str
    rigorous: bool = True
    argmax_p: float | None = None


@dataclass
class CertificateResult:
    finite_part: CertificatePart
    small_p_part: CertificatePart
    tail_part: CertificatePart
    verdict: float
    verdict_regime: str
    tool_version: str = __version__
    config: dict = field(default_factory=dict)

    @property
    def parts(self) -> list[CertificatePart]:
        return [self.finite_part, self.small_p_part, self.tail_part]

    def to_dict(self) -> dict:
        return {
            "finite_part": asdict(self.finite_part),
            "small_p_part": asdict(self.small_p_part),
            "tail_part": asdict(self.tail_part),
            "verdict": self.verdict,
            "verdict_regime": self.verdict_regime,
            "tool_version": self.tool_version,
            "config": self.config,
        }


def _tail_part(choice: TailChoice, N: int, p_lo: float) -> CertificatePart:
    if choice is TailChoice.THEOREM_A:
        if N < 200 or p_lo < 4.0 / N:
            raise PreconditionError("expansion majorant needs N_tail >= 200 and p_lo >= 4/N_tail")
        val, arg = maximize_over_p(lambda p: E_bound(p, N), p_lo, 0.5)
        src = (f"expansion majorant E(p,n) = E(p) + sqrt(n) R(p,n)/rho(p), "
               f"nonincreasing in n, maximised over p at n={N}")
        return CertificatePart("tail", val, (N, None), (p_lo, 0.5), src, True, arg)
    if choice is TailChoice.COROLLARY_C:
        if p_lo < 0.1689:
            raise PreconditionError("the 0.05532/sigma^2 bound needs p_lo >= 0.1689")
        val, arg = maximize_over_p(lambda p: normal_part_bound(p, N, COROLLARY_C_D), p_lo, 0.5)
        src = (f"E1(p)/sigma + {COROLLARY_C_D}/sigma^2 (sigma^2 R coefficient bound), "
               f"maximised over p at n={N}; established for n >= {N0}")
        return CertificatePart("tail", val, (N, None), (p_lo, 0.5), src, N >= N0, arg)
    if N * p_lo * (1.0 - p_lo) < 100.0:
        raise PreconditionError("Neammanee's inequality needs sigma^2 >= 100 at p_lo")
    val, arg = maximize_over_p(lambda p: normal_part_bound(p, N, NEAMMANEE_D), p_lo, 0.5)
    src = (f"E1(p)/sigma + {NEAMMANEE_D}/sigma^2 from Neammanee's refinement of "
           f"Uspensky's estimate, maximised over p at n={N}")
    return CertificatePart("tail", val, (N, None), (p_lo, 0.5), src, True, arg)


def certify_global(
    report: ScanReport,
    small_p_variant: SmallPVariant | str = SmallPVariant.KS2010,
    tail_choice: TailChoice | str = TailChoice.THEOREM_A,
    N_tail: int | None = None,
) -> CertificateResult:
    """Combine the finite scan, the small-p bound and a large-n majorant.

    The scan must start at n = 1, reach ``N_tail`` and extend in p to 0.5;
    the small-p bound covers (0, p_lo] for every n and the tail majorant
    covers [p_lo, 0.5] for every n >= N_tail.
    """
    spec = report.spec
    tail_choice = TailChoice(tail_choice)
    small_p_variant = SmallPVariant(small_p_variant)
    if N_tail is None:
        N_tail = spec.n_hi
    if spec.n_lo != 1 or spec.n_hi < N_tail:
        raise CoverageGapError(
            f"scan covers n in [{spec.n_lo}, {spec.n_hi}], certificate needs [1, {N_tail}]"
        )
    if spec.p_hi != 0.5:
        raise CoverageGapError(f"scan stops at p={spec.p_hi}, certificate needs p up to 0.5")
    _check_coverage(spec, report.per_n)

    finite = CertificatePart(
        "finite",
        report.global_certified,
        (1, spec.n_hi),
        (spec.p_lo, 0.5),
        (f"grid maximum of T_n (step {spec.step!r}) plus Lipschitz interpolation slack "
         f"sqrt(n) (h/2) L(p)" + (", cells bisected to the refinement target"
                                   if spec.refine_target is not None else "")),
        True,
        report.global_argmax[1],
    )
    small = CertificatePart(
        "small_p",
        small_p_T_bound(spec.p_lo, small_p_variant),
        (1, None),
        (0.0, spec.p_lo),
        f"modified Berry-Esseen inequality ({small_p_variant.value}), increasing in p, "
        f"evaluated at p={spec.p_lo!r}",
        True,
        spec.p_lo,
    )
    tail = _tail_part(tail_choice, N_tail, spec.p_lo)
    parts = [finite, small, tail]
    top = max(parts, key=lambda part: part.bound)
    return CertificateResult(
        finite, small, tail, top.bound, top.regime,
        config={
            "scan_spec": spec.numeric_dict(),
            "small_p_variant": small_p_variant.value,
            "tail_choice": tail_choice.value,
            "N_tail": N_tail,
        },
    )


def with_workers(spec: ScanSpec, workers: int) -> ScanSpec:
    return replace(spec, workers=workers)
