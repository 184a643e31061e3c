"""Range searches: partition primes by e, run the tree stages, recover, check.

Each prime p in (lo, hi] is assigned e = best_e(p) (p = 2 gets the plain
class e = 1).  For every class the tree engine yields f! mod p^2, the
cyclotomic reduction turns that into (p - 1)! mod p^2, and each record is
checked before it is accepted:

* (p - 1)! = -1 (mod p);
* (-f!)^e gamma is an e-th root of unity mod p, and the Stage 3 context
  passes its own consistency checks;
* near misses (|w_p| <= ratio * p) are recomputed by the square-root-time
  method, which shares no code with the main path.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import checkpoint as ckpt
from . import identities, primes, verify, wilson
from .identities import ESet
from .wilson import IntegrityError, WilsonRecord

log = logging.getLogger(__name__)

DEFAULT_NEAR_RATIO = Fraction(1, 50000)
MERTENS_C = 0.2615
HEADER = "wilsonsearch v1"


@dataclass(frozen=True)
class SearchConfig:
    lo: int
    hi: int
    byte_budget: int = wilson.DEFAULT_BYTE_BUDGET
    e_set: ESet = field(default_factory=ESet)
    near_ratio: Fraction = DEFAULT_NEAR_RATIO
    seed: int = 0
    threads: int = 1
    checkpoint_dir: str | None = None
    out: str | None = None

    def __post_init__(self):
        if self.lo < 0 or self.hi < self.lo:
            raise ValueError(f"bad interval ({self.lo}, {self.hi}]")
        if not (0 < self.near_ratio <= 1):
            raise ValueError("near_ratio must lie in (0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def identity(self) -> dict:
        """The fields that determine the output (hashed into checkpoints)."""
        return {
            "lo": self.lo,
            "hi": self.hi,
            "byte_budget": self.byte_budget,
            "e_set": list(self.e_set.values),
            "near_ratio": [self.near_ratio.numerator, self.near_ratio.denominator],
            "seed": self.seed,
        }


@dataclass
class SearchResult:
    records: list[WilsonRecord]
    near_misses: list[WilsonRecord]
    class_counts: dict[int, int]
    peak_bytes: int
    timings: dict[str, float]

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def wilson_primes(self) -> list[int]:
        return [r.p for r in self.records if r.w == 0]

    def summary(self) -> dict:
        return {
            "primes": self.count,
            "wilson_primes": self.wilson_primes,
            "near_misses": [(r.p, r.w) for r in self.near_misses],
            "classes": {str(e): n for e, n in sorted(self.class_counts.items())},
            "peak_bytes": self.peak_bytes,
            "timings": {k: round(v, 4) for k, v in self.timings.items()},
        }


def is_near_miss(rec: WilsonRecord, ratio: Fraction) -> bool:
    return abs(rec.w) * ratio.denominator <= ratio.numerator * rec.p


def partition(ps: list[int], e_set: ESet) -> dict[int, list[int]]:
    """{e: primes with best_e = e}, with p = 2 in the class e = 1."""
    out: dict[int, list[int]] = {}
    for p in ps:
        e = 1 if p == 2 else identities.best_e(p, e_set)
        out.setdefault(e, []).append(p)
    return out


def stage3_residue(p: int, e: int, f_fact: int, seed: int) -> int:
    """(p - 1)! mod p^2 from f! mod p^2, with every Stage 3 check applied."""
    if e == 1:
        return f_fact
    ctx = identities.stage3_context(p, e, seed)
    ctx.validate()
    if not identities.stage3_root_check(p, e, f_fact, ctx.gamma, ctx.C):
        raise IntegrityError(f"p={p}, e={e}: (-f!)^e gamma is not an e-th root of unity")
    return identities.recover_wilson(p, e, f_fact, ctx)


def cross_check(rec: WilsonRecord) -> None:
    method = "naive" if rec.p < 3 else "sqrt"
    report = verify.check_record(rec, method)
    if not report.agree:
        raise IntegrityError(f"independent recomputation disagrees for p={rec.p}: {report.residues}")


def write_near_misses(path: str | Path, records: list[WilsonRecord]) -> None:
    lines = [HEADER] + [f"{r.p} {r.w} {r.a0} {r.a1}" for r in sorted(records)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_near_misses(path: str | Path) -> list[WilsonRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != HEADER:
        raise ValueError(f"{path}: missing '{HEADER}' header")
    out = []
    for line in lines[1:]:
        p, w, a0, a1 = map(int, line.split(" "))
        rec = WilsonRecord(p, a0, a1, w)
        if WilsonRecord.from_residue(p, rec.residue) != rec:
            raise ValueError(f"{path}: inconsistent line {line!r}")
        out.append(rec)
    return out


class _Checkpointer:
    """Writes the search state at every stage boundary."""

    def __init__(self, cfg: SearchConfig, on_save: Callable[[str], None] | None):
        self.cfg = cfg
        self.hash = ckpt.config_hash(cfg.identity())
        self.path = Path(cfg.checkpoint_dir) / ckpt.FILENAME if cfg.checkpoint_dir else None
        self.on_save = on_save
        self.done: dict[int, int] = {}
        self.e = 0

    def load(self) -> ckpt.Checkpoint | None:
        if self.path is None or not self.path.exists():
            return None
        ck = ckpt.load(self.path, self.hash)
        if (ck.lo, ck.hi) != (self.cfg.lo, self.cfg.hi):
            raise ckpt.CheckpointError("checkpoint interval does not match the search")
        flat = ck.sections.get("done", [])
        self.done = dict(zip(flat[0::2], flat[1::2]))
        return ck

    def save(self, marker: str, payload: dict) -> None:
        if self.path is None:
            return
        sections = {"done": [x for kv in sorted(self.done.items()) for x in kv]}
        for k, v in payload.items():
            sections[k] = [int(x) for x in v] if isinstance(v, (list, tuple)) else [int(v)]
        ck = ckpt.Checkpoint(self.hash, self.e, self.cfg.lo, self.cfg.hi, marker, sections)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        ckpt.save(self.path, ck)
        if self.on_save is not None:
            self.on_save(marker)


def _resume_payload(ck: ckpt.Checkpoint) -> tuple[str, dict]:
    s = ck.sections
    if "res" in s:
        return ck.marker, {"keys": s["keys"], "res": s["res"]}
    if "W" in s:
        return ck.marker, {"W": s["W"]}
    if "C" in s:
        return ck.marker, {"C": s["C"][0]}
    return ck.marker, {}


def run_search(
    cfg: SearchConfig, *, on_checkpoint: Callable[[str], None] | None = None
) -> SearchResult:
    """All records for the primes in (cfg.lo, cfg.hi]."""
    t_start = time.perf_counter()
    timings = {"sieve": 0.0, "stage1": 0.0, "stage2": 0.0, "stage3": 0.0, "verify": 0.0}
    meter = wilson.SpaceMeter()
    cp = _Checkpointer(cfg, on_checkpoint)
    resume_ck = cp.load()

    t0 = time.perf_counter()
    classes = partition(primes.sieve_interval(cfg.lo, cfg.hi), cfg.e_set)
    timings["sieve"] = time.perf_counter() - t0

    residues: dict[int, int] = dict(cp.done)
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        for e in sorted(classes):
            ps = classes[e]
            resume = None
            if resume_ck is not None and e <= resume_ck.e:
                if e < resume_ck.e or resume_ck.marker == "stage3":
                    continue
                resume = _resume_payload(resume_ck)
            cp.e = e
            # the plain class only ever holds p = 2
            lo_c, hi_c = (cfg.lo, cfg.hi) if e > 1 else (min(cfg.lo, 1), 2)
            f_facts = wilson.reduced_factorials(
                lo_c,
                hi_c,
                e,
                cfg.byte_budget,
                primes=ps,
                meter=meter,
                on_boundary=cp.save,
                resume=resume,
                timings=timings,
            )
            t0 = time.perf_counter()
            seeds = [cfg.seed] * len(ps)
            es = [e] * len(ps)
            ffs = [f_facts[p] for p in ps]
            mapper = pool.map if pool is not None else map
            for p, r in zip(ps, mapper(stage3_residue, ps, es, ffs, seeds)):
                residues[p] = r
                cp.done[p] = r
            timings["stage3"] += time.perf_counter() - t0
            cp.save("stage3", {})
    finally:
        if pool is not None:
            pool.shutdown()

    records = []
    for p in sorted(residues):
        if not (cfg.lo < p <= cfg.hi):
            continue
        records.append(WilsonRecord.from_residue(p, residues[p]))
    t0 = time.perf_counter()
    near = [r for r in records if is_near_miss(r, cfg.near_ratio)]
    for r in near:
        cross_check(r)
    timings["verify"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start
    if cfg.out:
        write_near_misses(cfg.out, near)
    counts = {e: len(ps) for e, ps in classes.items()}
    return SearchResult(records, near, counts, meter.peak_bytes, timings)


def expected_count(x: float) -> tuple[float, float]:
    """(sum of 1/p over primes p < x, log log x + 0.2615).

    Under the heuristic that w_p is uniform mod p, this is the expected
    number of Wilson primes below x.
    """
    if x < 3:
        raise ValueError("x must be >= 3")
    n = math.ceil(x) - 1
    ps = primes.small_primes(n)
    partial = float((1.0 / ps.astype(float)).sum())
    return partial, math.log(math.log(x)) + MERTENS_C
