"""Monte-Carlo and targeted-prefix experiments over the expansion geometry.

Everything here is replayable: seeds are drawn from a seeded PRNG as
decimal strings, targeted seeds serialize to exact binary-rational
expressions, and summaries are plain dicts with deterministic ordering.
Per-seed results are folded through associative merges so that any
evaluation order yields the same summary.

Bound checks follow a report-don't-crash policy: a failed inequality is a
ViolationRecord in the output, never an exception.  Upper-bound violations
are treated as fatal by the CLI; lower-bound violations are reported as
data (they do occur, systematically; see the bundled tests).
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from mpmath import mp, mpf, nstr, sqrt as mp_sqrt

from .core import (
    ConstructionFailedError,
    Orbit,
    expand,
    seed_with_prefix,
    theta_perron,
)
from .geometry import (
    JagerPoint,
    SubdivisionRegion,
    contains,
    psi,
    subdivision,
    theorem_bounds,
    corollary_bounds,
)
from .params import Params, parse_real, real_to_expr

MAX_RECORDED_VIOLATIONS = 500


@dataclass(frozen=True)
class ExperimentConfig:
    params: Params
    seed_count: int = 1000
    rng_seed: int = 1
    prefix: Optional[tuple[int, ...]] = None
    depth: int = 32
    fmt: str = "json"

    def __post_init__(self):
        if self.seed_count < 1:
            raise ValueError("seed_count must be >= 1")
        if not (1 <= self.depth <= self.params.max_depth):
            raise ValueError("depth must lie in 1..params.max_depth")
        if self.prefix is not None:
            object.__setattr__(self, "prefix", tuple(self.prefix))

    def config_dict(self) -> dict:
        d = self.params.config_dict()
        d.update({
            "seed_count": self.seed_count,
            "rng_seed": self.rng_seed,
            "prefix": list(self.prefix) if self.prefix else None,
            "depth": self.depth,
            "format": self.fmt,
        })
        return d


@dataclass
class ViolationRecord:
    """A failed check, replayable from the seed expression alone."""

    x0_expr: str
    n: int
    kind: str  # membership | upper | upper_max | lower | lower_min | classical
    observed: mpf
    bound: mpf

    def to_dict(self, sig: int) -> dict:
        return {
            "x0": self.x0_expr,
            "n": self.n,
            "kind": self.kind,
            "observed": format_real(self.observed, sig),
            "bound": format_real(self.bound, sig),
        }


@dataclass
class Summary:
    """Counts, extremes, and violations from one experiment."""

    config: ExperimentConfig
    counts: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    violations: list[ViolationRecord] = field(default_factory=list)

    def merge_violation(self, rec: ViolationRecord):
        self.counts[rec.kind + "_violations"] = self.counts.get(rec.kind + "_violations", 0) + 1
        if len(self.violations) < MAX_RECORDED_VIOLATIONS:
            self.violations.append(rec)

    def stat_max(self, key: str, value):
        cur = self.stats.get(key)
        if cur is None or value > cur:
            self.stats[key] = value

    def stat_min(self, key: str, value):
        cur = self.stats.get(key)
        if cur is None or value < cur:
            self.stats[key] = value

    def to_dict(self) -> dict:
        sig = max(10, self.config.params.precision_bits // 3)
        return {
            "config": self.config.config_dict(),
            "counts": dict(sorted(self.counts.items())),
            "stats": {key: format_real(val, sig) if isinstance(val, mpf) else val
                      for key, val in sorted(self.stats.items())},
            "violations": [v.to_dict(sig) for v in self.violations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def format_real(x, sig: int) -> str:
    if isinstance(x, int):
        return str(x)
    return nstr(mpf(x) if not isinstance(x, mpf) else x, sig)


def sample_seed_exprs(config: ExperimentConfig) -> Iterable[str]:
    """Deterministic stream of uniform decimal seeds on (0,1)."""
    rng = random.Random(config.rng_seed)
    digits = max(40, int(config.params.precision_bits * 0.302) + 4)
    while True:
        raw = rng.randrange(1, 10 ** digits)
        yield "0." + str(raw).zfill(digits)


def collect_orbits(config: ExperimentConfig) -> list[tuple[str, Orbit]]:
    """Expand seed_count accepted seeds, rejecting ones that terminate or
    lose precision before the working depth (boundary-ties resample)."""
    params = config.params
    out: list[tuple[str, Orbit]] = []
    if config.prefix:
        rng = random.Random(config.rng_seed)
        attempts = 0
        while len(out) < config.seed_count and attempts < config.seed_count * 50:
            attempts += 1
            tail = mpf(rng.random())
            try:
                x0 = seed_with_prefix(config.prefix, tail, params)
            except ConstructionFailedError:
                continue
            orbit = expand(x0, params, depth=config.depth)
            need = min(config.depth, len(config.prefix) + 3)
            if orbit.terminated_at is None and orbit.trusted_depth >= need:
                out.append((real_to_expr(x0), orbit))
        return out
    seeds = sample_seed_exprs(config)
    attempts = 0
    for expr in seeds:
        if len(out) >= config.seed_count or attempts >= config.seed_count * 50:
            break
        attempts += 1
        x0 = parse_real(expr, params.precision_bits)
        orbit = expand(x0, params, depth=config.depth)
        if orbit.terminated_at is None and orbit.trusted_depth >= config.depth:
            out.append((expr, orbit))
    return out


def replay_orbit(x0_expr: str, config: ExperimentConfig) -> Orbit:
    """Regenerate the orbit behind a ViolationRecord."""
    x0 = parse_real(x0_expr, config.params.precision_bits)
    return expand(x0, config.params, depth=config.depth)


def _pair_points(orbit: Orbit, params: Params) -> Iterable[tuple[int, JagerPoint]]:
    """(n, psi point) for each consecutive-theta pair the orbit supports."""
    usable = orbit.usable_depth()
    for n in range(1, usable - 1):
        point = psi(orbit.futures[n], orbit.pasts[n], params)
        yield n, JagerPoint(point.u, point.v, orbit.digits[n], orbit.digits[n + 1])


def run_membership(config: ExperimentConfig,
                   orbits: Optional[list[tuple[str, Orbit]]] = None,
                   tol=None) -> Summary:
    """Assert every sampled pair lies in the closure of its predicted cell."""
    params = config.params
    tol = params.boundary_tolerance if tol is None else tol
    summary = Summary(config)
    orbits = collect_orbits(config) if orbits is None else orbits
    cells: dict[tuple[int, int], SubdivisionRegion] = {}
    pairs = 0
    with mp.workprec(params.precision_bits):
        for expr, orbit in orbits:
            for n, point in _pair_points(orbit, params):
                pairs += 1
                key = (point.predicted_a, point.predicted_b)
                region = cells.get(key)
                if region is None:
                    region = cells[key] = subdivision(key[0], key[1], params)
                verdict = contains(region, point, tol)
                if verdict == "outside":
                    worst = min(hp.margin(point.u, point.v) for hp in region.halfplanes)
                    summary.merge_violation(
                        ViolationRecord(expr, n, "membership", worst, mpf(tol)))
                    summary.stat_max("max_violation_distance", -worst)
    summary.counts.update({"seeds": len(orbits), "pairs": pairs})
    summary.counts.setdefault("membership_violations", 0)
    _sort_violations(summary)
    return summary


def _window_checks(expr: str, orbit: Orbit, params: Params, tol,
                   summary: Summary):
    """Window-by-window bound checks for one orbit; pure reducer over state."""
    m, k = params.m, params.k
    usable = orbit.usable_depth()
    thetas = [None] + [theta_perron(orbit.futures[n], orbit.pasts[n], params)
                       for n in range(1, usable)]
    root2 = mp_sqrt(mpf(2))
    for N in range(1, usable - 2):
        d1, d2, d3 = orbit.digits[N], orbit.digits[N + 1], orbit.digits[N + 2]
        l, L = min(d1, d2, d3), max(d1, d2, d3)
        diff1 = thetas[N + 1] - thetas[N]
        diff2 = thetas[N + 2] - thetas[N + 1]
        sum_sq = diff1 ** 2 + diff2 ** 2
        summary.counts["windows"] = summary.counts.get("windows", 0) + 1
        skip_upper = (m == 1 and k == 1 and d2 == 0 and (d1 == 0 or d3 == 0))
        if skip_upper:
            summary.counts["skipped_exception_windows"] = \
                summary.counts.get("skipped_exception_windows", 0) + 1
        else:
            tb = theorem_bounds(l, L, params)
            cb = corollary_bounds(l, L, params)
            if tb.upper is not None:
                summary.stat_max("max_sum_sq_over_bound", sum_sq / tb.upper)
                if sum_sq >= tb.upper + tol:
                    summary.merge_violation(ViolationRecord(expr, N, "upper", sum_sq, tb.upper))
            if cb.upper is not None:
                worst = max(abs(diff1), abs(diff2))
                if worst >= cb.upper + tol:
                    summary.merge_violation(ViolationRecord(expr, N, "upper_max", worst, cb.upper))
        if L - l <= 1:
            continue
        tb = theorem_bounds(l, L, params)
        cb = corollary_bounds(l, L, params)
        if tb.lower is not None:
            summary.counts["lower_checked"] = summary.counts.get("lower_checked", 0) + 1
            if sum_sq <= tb.lower - tol:
                summary.merge_violation(ViolationRecord(expr, N, "lower", sum_sq, tb.lower))
        if cb.lower is not None:
            best = min(abs(diff1), abs(diff2))
            if best <= cb.lower - tol:
                summary.merge_violation(ViolationRecord(expr, N, "lower_min", best, cb.lower))


def run_bounds(config: ExperimentConfig,
               orbits: Optional[list[tuple[str, Orbit]]] = None,
               tol=None) -> Summary:
    """Check the window bounds (sum-of-squares and max/min forms) on every
    supported window of every orbit.

    The m=1, k=1 windows matching the digit-level classical exception are
    skipped for upper checks and counted.
    """
    params = config.params
    tol = params.bound_tolerance if tol is None else tol
    summary = Summary(config)
    orbits = collect_orbits(config) if orbits is None else orbits
    with mp.workprec(params.precision_bits):
        for expr, orbit in orbits:
            _window_checks(expr, orbit, params, tol, summary)
    summary.counts.setdefault("windows", 0)
    for kind in ("upper", "upper_max", "lower", "lower_min"):
        summary.counts.setdefault(kind + "_violations", 0)
    summary.counts["seeds"] = len(orbits)
    _sort_violations(summary)
    return summary


def sharpness_scan(l: int, L: int, config: ExperimentConfig) -> Summary:
    """Push targeted seeds toward the extreme corners of the [l, L] window
    and report how closely the observed quantities approach the bounds.

    Digit windows are realized as (l, L, l) and (L, l, L) with huge free
    digits on both sides, which drives the consecutive pairs toward the
    opposite acute corners of the union cell.  The primary sharpness
    metric is the diagonal length sqrt(sum of squared differences), the
    quantity the sum-of-squares bound is actually about; the largest
    single |difference| is reported alongside.
    """
    params = config.params
    summary = Summary(config)
    tb = theorem_bounds(l, L, params)
    cb = corollary_bounds(l, L, params)
    rng = random.Random(config.rng_seed)
    huge = (10, 25, 60, 150)
    arrangements = [(l, L, l), (L, l, L)] if l != L else [(l, l, l)]
    count = 0
    with mp.workprec(params.precision_bits):
        sup_diag = mpf(0)
        sup_single = mpf(0)
        inf_diag = None
        for i in range(config.seed_count):
            arr = arrangements[i % len(arrangements)]
            big1 = huge[i % len(huge)]
            big2 = huge[(i // len(huge)) % len(huge)]
            prefix = (big1,) + arr + (big2,)
            tail = mpf(rng.random())
            try:
                x0 = seed_with_prefix(prefix, tail, params)
            except ConstructionFailedError:
                continue
            orbit = expand(x0, params, depth=min(len(prefix) + 3, params.max_depth))
            if orbit.usable_depth() < 5 or orbit.digits[1:4] != list(arr):
                continue
            count += 1
            th = [theta_perron(orbit.futures[n], orbit.pasts[n], params)
                  for n in range(1, 5)]
            diff1, diff2 = th[1] - th[0], th[2] - th[1]
            diag = mp_sqrt(diff1 ** 2 + diff2 ** 2)
            single = max(abs(diff1), abs(diff2))
            sup_diag = max(sup_diag, diag)
            sup_single = max(sup_single, single)
            inf_diag = diag if inf_diag is None else min(inf_diag, diag)
        summary.counts["seeds"] = count
        summary.stats["empirical_sup_diagonal"] = sup_diag
        summary.stats["empirical_sup_single_diff"] = sup_single
        if inf_diag is not None:
            summary.stats["empirical_inf_diagonal"] = inf_diag
        if tb.upper is not None:
            diag_bound = mp_sqrt(tb.upper)
            summary.stats["diagonal_bound"] = diag_bound
            summary.stats["sup_ratio_diagonal"] = sup_diag / diag_bound
        if cb.upper is not None:
            summary.stats["single_diff_bound"] = cb.upper
            summary.stats["sup_ratio_single_diff"] = sup_single / cb.upper
        if tb.lower is not None and inf_diag is not None:
            summary.stats["diagonal_lower_bound"] = mp_sqrt(tb.lower)
            summary.stats["inf_ratio_diagonal"] = inf_diag / mp_sqrt(tb.lower)
        summary.stats["classical_exception"] = tb.classical_exception
    return summary


def classical_checks(config: ExperimentConfig,
                     orbits: Optional[list[tuple[str, Orbit]]] = None) -> Summary:
    """k=1 sanity: for m=0 consecutive coefficients sum below 1; for m=1
    their difference stays within 1 (equality occurs on all-zero digit
    runs) while the coefficients themselves are unbounded.

    For m=1 a zero-digit-prefix probe measures how large the coefficients
    get at the working depth.
    """
    params = config.params
    if not params.k == 1:
        raise ValueError("classical_checks requires k = 1")
    tol = params.bound_tolerance
    summary = Summary(config)
    orbits = collect_orbits(config) if orbits is None else orbits
    pairs = 0
    with mp.workprec(params.precision_bits):
        for expr, orbit in orbits:
            usable = orbit.usable_depth()
            thetas = [theta_perron(orbit.futures[n], orbit.pasts[n], params)
                      for n in range(1, usable)]
            for i, th in enumerate(thetas):
                summary.stat_max("max_theta", th)
                if i == 0:
                    continue
                pairs += 1
                if params.m == 0:
                    total = thetas[i - 1] + th
                    summary.stat_max("sup_theta_sum", total)
                    if total >= 1 + tol:
                        summary.merge_violation(
                            ViolationRecord(expr, i, "classical", total, mpf(1)))
                else:
                    gap = abs(th - thetas[i - 1])
                    summary.stat_max("sup_theta_gap", gap)
                    if gap >= 1 + tol:
                        summary.merge_violation(
                            ViolationRecord(expr, i, "classical", gap, mpf(1)))
        if params.m == 1:
            probe = ExperimentConfig(
                params=params, seed_count=min(32, config.seed_count),
                rng_seed=config.rng_seed + 1, prefix=(0,) * 8, depth=config.depth)
            for expr, orbit in collect_orbits(probe):
                usable = orbit.usable_depth()
                for n in range(1, usable):
                    summary.stat_max(
                        "max_theta_zero_prefix",
                        theta_perron(orbit.futures[n], orbit.pasts[n], params))
    summary.counts.update({"seeds": len(orbits), "pairs": pairs})
    summary.counts.setdefault("classical_violations", 0)
    _sort_violations(summary)
    return summary


def _sort_violations(summary: Summary):
    summary.violations.sort(key=lambda r: (r.x0_expr, r.n, r.kind))


def merge_summaries(a: Summary, b: Summary) -> Summary:
    """Associative, commutative combination of two partial summaries."""
    merged = Summary(a.config)
    for counts in (a.counts, b.counts):
        for key, val in counts.items():
            merged.counts[key] = merged.counts.get(key, 0) + val
    for stats in (a.stats, b.stats):
        for key, val in stats.items():
            if key.startswith(("max_", "sup_")):
                merged.stat_max(key, val)
            elif key.startswith(("min_", "inf_")):
                merged.stat_min(key, val)
            else:
                merged.stats[key] = val
    merged.violations = a.violations + b.violations
    _sort_violations(merged)
    del merged.violations[MAX_RECORDED_VIOLATIONS:]
    return merged


# ---------------------------------------------------------------------------
# export

REGION_FIELDS = ["m", "k", "a", "b", "vertex_index", "u", "v", "degenerate", "unbounded"]
PAIR_FIELDS = ["m", "k", "x0_expr", "n", "a_next", "a_next2", "theta_n", "theta_n1"]


def export_regions(regions: Sequence[SubdivisionRegion], params: Params,
                   destination) -> None:
    """CSV of region vertices: m,k,a,b,vertex_index,u,v,degenerate,unbounded."""
    sig = max(10, params.precision_bits // 3)
    rows = []
    for region in regions:
        for idx, pt in enumerate(region.vertices):
            rows.append([
                params.m, format_real(params.k, sig), region.a, region.b, idx,
                format_real(pt.u, sig), format_real(pt.v, sig),
                int(region.degenerate), int(region.unbounded),
            ])
    rows.sort(key=lambda r: (r[2], r[3], r[4]))
    _write_csv(destination, REGION_FIELDS, rows)


def export_pairs(orbits: Sequence[tuple[str, Orbit]], params: Params,
                 destination) -> None:
    """CSV of sampled pairs: m,k,x0_expr,n,a_next,a_next2,theta_n,theta_n1."""
    sig = max(10, params.precision_bits // 3)
    rows = []
    with mp.workprec(params.precision_bits):
        for expr, orbit in orbits:
            usable = orbit.usable_depth()
            for n in range(1, usable - 1):
                th_n = theta_perron(orbit.futures[n], orbit.pasts[n], params)
                th_n1 = theta_perron(orbit.futures[n + 1], orbit.pasts[n + 1], params)
                rows.append([
                    params.m, format_real(params.k, sig), expr, n,
                    orbit.digits[n], orbit.digits[n + 1],
                    format_real(th_n, sig), format_real(th_n1, sig),
                ])
    rows.sort(key=lambda r: (r[2], r[3]))
    _write_csv(destination, PAIR_FIELDS, rows)


def import_pairs(source) -> list[dict]:
    """Rows of a pairs CSV with all fields kept as the exported strings."""
    try:
        if hasattr(source, "read"):
            text = source.read()
        else:
            with open(source, "r", encoding="utf-8", newline="") as fh:
                text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read pairs csv at {source}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    return list(reader)


def _write_csv(destination, fields: list[str], rows: list[list]) -> None:
    def dump(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        writer.writerows(rows)

    if hasattr(destination, "write"):
        dump(destination)
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            dump(fh)
    except OSError as exc:
        raise OSError(f"cannot write csv to {destination}: {exc}") from exc


def export_summary(summary: Summary, destination) -> None:
    text = summary.to_json()
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write summary to {destination}: {exc}") from exc
