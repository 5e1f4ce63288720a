"""Command-line front end: ``qfgaps <subcommand> [options]``.

Exit codes: 0 pass, 1 usage error, 2 failed mathematical check,
3 delta variant found no interval, 4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import mpmath

from . import __version__, harmonic
from .arith import DEFAULT_DPS
from .characters import CHAR_CAP, bordignon_table, nicolas_check, threshold_table, pv_check
from .gaps import (
    ConstructionError,
    GapCertificate,
    NoIntervalFound,
    certify_gap,
    constants_table,
    gap_report,
    verify_certificate,
)
from .harmonic import EXACT_CAP, ResourceError
from .qform import SIEVE_CAP, DiscriminantSet, iter_sieve_segments

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_NO_INTERVAL, EXIT_RESOURCE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@dataclass
class RunConfig:
    precision: int = DEFAULT_DPS
    sieve_cap: int = SIEVE_CAP
    char_cap: int = CHAR_CAP
    exact_cap: int = EXACT_CAP
    output_format: str = "json"
    output_path: Optional[str] = None
    parallelism: object = 1  # worker count or "auto"

    def __post_init__(self):
        if self.precision < 15:
            raise UsageError(f"precision must be >= 15, got {self.precision}")
        for name in ("sieve_cap", "char_cap", "exact_cap"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be positive")
        if self.output_format not in ("json", "csv", "plain"):
            raise UsageError(f"unknown output format {self.output_format!r}")
        if self.parallelism != "auto" and (not isinstance(self.parallelism, int) or self.parallelism < 1):
            raise UsageError("parallelism must be a positive integer or 'auto'")

    @property
    def workers(self) -> int:
        if self.parallelism == "auto":
            return os.cpu_count() or 1
        return int(self.parallelism)

    @classmethod
    def from_sources(cls, args: argparse.Namespace) -> "RunConfig":
        """Defaults, then the JSON config file, then explicit flags."""
        values: dict = {}
        if args.config:
            try:
                values.update(json.loads(Path(args.config).read_text()))
            except (OSError, ValueError) as exc:
                raise UsageError(f"cannot read config {args.config}: {exc}") from exc
            unknown = set(values) - {f.name for f in fields(cls)}
            if unknown:
                raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for name in ("precision", "sieve_cap", "char_cap", "exact_cap", "output_format", "output_path"):
            v = getattr(args, name, None)
            if v is not None:
                values[name] = v
        if args.jobs is not None:
            values["parallelism"] = "auto" if args.jobs == "auto" else _positive_int(args.jobs)
        return cls(**values)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise UsageError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise UsageError(f"expected a positive integer, got {v}")
    return v


def _parse_real(text: str):
    """Integers, a/b and decimals, all kept exact."""
    try:
        f = Fraction(text)
    except ValueError:
        raise UsageError(f"cannot parse {text!r} as a number") from None
    return int(f) if f.denominator == 1 else f


# ---------------------------------------------------------------------------
# output


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return v if abs(v) < 2**53 else str(v)
    if isinstance(v, float):
        return v if math.isfinite(v) else str(v)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, mpmath.mpf):
        return mpmath.nstr(v, 20)
    return str(v)


def _render(payload, cfg: RunConfig, rows: Optional[list[dict]] = None) -> str:
    if cfg.output_format == "json":
        return json.dumps(_jsonable(payload), indent=2) + "\n"
    if cfg.output_format == "csv":
        table = rows if rows is not None else [payload]
        buf = io.StringIO()
        if table:
            keys = list(table[0])
            w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
            w.writeheader()
            for r in table:
                w.writerow({k: _jsonable(r.get(k)) for k in keys})
        return buf.getvalue()
    lines = []
    if rows is not None:
        for r in rows:
            lines.append("  ".join(f"{k}={_jsonable(v)}" for k, v in r.items()))
    else:
        for k, v in payload.items():
            lines.append(f"{k}: {json.dumps(_jsonable(v)) if isinstance(v, (dict, list)) else _jsonable(v)}")
    return "\n".join(lines) + "\n"


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)


def _chunks(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    """Split [lo, hi] into contiguous ranges; order fixes the merged output."""
    n = hi - lo + 1
    if n <= 0:
        return []
    parts = max(1, min(parts, n))
    step = -(-n // parts)
    return [(a, min(hi, a + step - 1)) for a in range(lo, hi + 1, step)]


def _pmap(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*items)))


# ---------------------------------------------------------------------------
# harmonic


def _theorem_chunk(lo: int, hi: int, mults: tuple, dps: int):
    return harmonic.theorem_scan(hi, mults, N_min=lo, dps=dps)


def _corollary_chunk(lo: int, hi: int, dps: int):
    return harmonic.corollary_scan(hi, N_min=lo, dps=dps)


def _merge_scans(results) -> harmonic.ScanResult:
    out = harmonic.ScanResult(0, [], [])
    for r in results:
        out.checked += r.checked
        out.violations += r.violations
        out.indeterminate += r.indeterminate
        out.min_margin = min(out.min_margin, r.min_margin)
        out.notes += r.notes
    return out


def cmd_harmonic(args, cfg: RunConfig) -> int:
    if args.scan:
        if args.N_max is None:
            raise UsageError("--scan needs --N-max")
        if args.kind == "lemma":
            res = harmonic.lemma_scan(args.N_max, dps=cfg.precision)
        elif args.kind == "corollary":
            lo = max(5, args.N_min or 5)
            res = _merge_scans(
                _pmap(_corollary_chunk, [(a, b, cfg.precision) for a, b in _chunks(lo, args.N_max, cfg.workers)], cfg.workers)
            )
        else:
            mults = tuple(args.multipliers)
            if args.N_max * max(mults) > cfg.exact_cap:
                raise ResourceError(f"x up to {args.N_max * max(mults)} exceeds the exact cap {cfg.exact_cap}")
            lo = max(2, args.N_min or 2)
            res = _merge_scans(
                _pmap(_theorem_chunk, [(a, b, mults, cfg.precision) for a, b in _chunks(lo, args.N_max, cfg.workers)], cfg.workers)
            )
        payload = {
            "kind": args.kind,
            "N_max": args.N_max,
            "checked": res.checked,
            "violations": len(res.violations),
            "indeterminate": len(res.indeterminate),
            "min_relative_margin": res.min_margin,
            "status": "pass" if res.passed else "fail",
            "first_violations": [list(v) if isinstance(v, tuple) else v for v in res.violations[:10]],
        }
        _emit(_render(payload, cfg), cfg)
        return EXIT_OK if res.passed else EXIT_FAIL
    if args.N is None:
        raise UsageError("--N is required (or use --scan)")
    x = args.N if args.x is None else _parse_real(args.x)
    if x <= 0:
        raise UsageError("x must be positive")
    if x > cfg.exact_cap:
        raise ResourceError(f"x = {x} exceeds the exact cap {cfg.exact_cap}")
    try:
        rep = harmonic.verify_error_bound(args.N, x, cfg.precision)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(_render(rep.to_dict(), cfg), cfg)
    return EXIT_OK if rep.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# certificates and gaps


def _ds(args) -> DiscriminantSet:
    if not args.disc:
        raise UsageError("at least one --disc is required")
    try:
        return DiscriminantSet(tuple(args.disc))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_certify(args, cfg: RunConfig) -> int:
    ds = _ds(args)
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    variant = "delta" if (args.delta is not None or args.variant == "delta") else "plain"
    delta = None
    if args.delta is not None:
        delta = Fraction(args.delta)
        if not 0 < delta < 1:
            raise UsageError("--delta must lie in (0, 1)")
    try:
        cert = certify_gap(ds, args.k, variant, delta, args.witness_bound)
    except NoIntervalFound as exc:
        print(f"no interval found: {exc}", file=sys.stderr)
        return EXIT_NO_INTERVAL
    except ConstructionError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = cert.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    digits = len(str(cert.interval_start)) if cert.interval_start.bit_length() < 14000 else None
    if digits is None:
        digits = int(cert.interval_start.bit_length() * math.log10(2)) + 1
    print(
        f"interval_start digits: {digits}  log(modulus)/k: {cert.log_modulus_per_k:.6f}",
        file=sys.stderr,
    )
    ok = verify_certificate(cert)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args, cfg: RunConfig) -> int:
    try:
        text = Path(args.file).read_text()
        cert = GapCertificate.from_json(text)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        payload = {"file": args.file, "ok": False, "diagnostics": [f"unreadable certificate: {exc}"]}
        _emit(_render(payload, cfg), cfg)
        return EXIT_FAIL
    res = verify_certificate(cert)
    payload = {
        "file": args.file,
        "ok": res.ok,
        "round_trip": cert.to_json() == text,
        "diagnostics": res.diagnostics,
    }
    _emit(_render(payload, cfg), cfg)
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_gaps(args, cfg: RunConfig) -> int:
    ds = _ds(args)
    if not ds.all_negative:
        raise UsageError("gap statistics need negative discriminants")
    if args.X > cfg.sieve_cap:
        raise ResourceError(f"X = {args.X} exceeds the sieve cap {cfg.sieve_cap}")
    rep = gap_report(ds, args.X)
    recs = rep.running_records() if args.records_only else rep.records()
    rows = [{"s_n": a, "s_next": b, "gap": g, "ratio": r} for a, b, g, r in recs]
    if cfg.output_format == "json":
        payload = {
            "ds": list(ds),
            "X": args.X,
            "count": int(len(rep.values)),
            "max_ratio": rep.max_ratio,
            "max_pair": list(rep.max_pair),
            "theorem_bound": rep.theorem_bound,
            "richards_bounds": rep.richards_bounds,
            "records": rows if args.records_only else None,
        }
        _emit(_render(payload, cfg), cfg)
    else:
        _emit(_render({}, cfg, rows), cfg)
    return EXIT_OK


def cmd_sieve(args, cfg: RunConfig) -> int:
    ds = _ds(args)
    if not ds.all_negative:
        raise UsageError("the value sieve needs negative discriminants")
    cap = cfg.sieve_cap
    out = open(cfg.output_path, "w") if cfg.output_path else sys.stdout
    try:
        if cfg.output_format == "csv":
            out.write("n\n")
        for seg in iter_sieve_segments(ds, args.X, cap):
            if len(seg):
                out.write("\n".join(map(str, seg.tolist())) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# character sums and constants


def _pv_chunk(lo: int, hi: int, cap: int) -> list[dict]:
    out = []
    for q in range(lo, hi + 1):
        rep = pv_check(q, cap)
        s = rep.summary()
        s["real_exact_ok"] = rep.real_exact_ok
        out.append(s)
    return out


def cmd_pv(args, cfg: RunConfig) -> int:
    if args.q is None and args.q_max is None:
        raise UsageError("give --q or --q-max")
    if args.q is not None:
        lo = hi = args.q
    else:
        lo, hi = args.q_min, args.q_max
    if lo < 3:
        raise UsageError("q must be >= 3")
    if hi > cfg.char_cap:
        raise ResourceError(f"q = {hi} exceeds the character cap {cfg.char_cap}")
    # interleave-free contiguous chunks keep the row order independent of the worker count
    parts = _pmap(_pv_chunk, [(a, b, cfg.char_cap) for a, b in _chunks(lo, hi, cfg.workers * 4)], cfg.workers)
    rows = [r for part in parts for r in part]
    in_scope = [r for r in rows if r["q"] >= 5]
    all_pass = all(r["pass"] and r["real_exact_ok"] for r in in_scope)
    if cfg.output_format == "json":
        worst = max(in_scope, key=lambda r: r["worst_max"] / r["bound_new"], default=None)
        payload = {
            "q_min": lo,
            "q_max": hi,
            "moduli": len(rows),
            "characters": sum(r["phi"] - 1 for r in rows),
            "all_pass": all_pass,
            "failing_q": [r["q"] for r in in_scope if not (r["pass"] and r["real_exact_ok"])],
            "worst_ratio": None if worst is None else worst["worst_max"] / worst["bound_new"],
            "worst_q": None if worst is None else worst["q"],
            "rows": rows if args.q is not None or args.rows else None,
        }
        _emit(_render(payload, cfg), cfg)
    else:
        _emit(_render({}, cfg, rows), cfg)
    return EXIT_OK if all_pass else EXIT_FAIL


def cmd_constants(args, cfg: RunConfig) -> int:
    payload: dict = {}
    ok = True
    if args.thresholds or not (args.disc or args.nicolas or args.bordignon):
        payload["thresholds"] = threshold_table(cfg.precision)
    if args.disc:
        table = constants_table(_ds(args))
        payload["gap_constants"] = [asdict(r) for r in table.rows]
        payload["gap_comparisons_hold"] = table.comparisons_hold
        ok &= table.comparisons_hold
    if args.nicolas:
        payload["nicolas"] = []
        for q in args.nicolas:
            if q < 3:
                raise UsageError("nicolas needs q >= 3")
            payload["nicolas"].append({"q": q, "holds": nicolas_check(q, cfg.precision)})
    if args.bordignon:
        payload["bordignon"] = {}
        for q in args.bordignon:
            if q < 5:
                raise UsageError("bordignon table needs q >= 5")
            payload["bordignon"][str(q)] = [asdict(r) for r in bordignon_table(q, cfg.precision)]
    if cfg.output_format == "csv" and "thresholds" in payload and len(payload) == 1:
        _emit(_render({}, cfg, payload["thresholds"]), cfg)
    else:
        _emit(_render(payload, cfg), cfg)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration")
    g.add_argument("--precision", type=int, help="working precision in decimal digits (>= 15)")
    g.add_argument("--format", dest="output_format", choices=("json", "csv", "plain"))
    g.add_argument("--output", "-o", dest="output_path", help="write the report here instead of stdout")
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--jobs", "-j", help="worker processes, or 'auto'")
    g.add_argument("--sieve-cap", type=int)
    g.add_argument("--char-cap", type=int)
    g.add_argument("--exact-cap", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qfgaps", description="Gap certificates, coprime harmonic sums and character sum bounds.")
    parser.add_argument("--version", action="version", version=f"qfgaps {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("harmonic", help="error term of the coprime harmonic sum")
    p.add_argument("--N", type=int)
    p.add_argument("--x", help="upper limit (integer, a/b or decimal); defaults to N")
    p.add_argument("--scan", action="store_true", help="scan a range of N instead of one pair")
    p.add_argument("--kind", choices=("theorem", "corollary", "lemma"), default="theorem")
    p.add_argument("--N-min", type=int)
    p.add_argument("--N-max", type=int)
    p.add_argument("--multipliers", type=int, nargs="+", default=[1, 2, 10])
    p.set_defaults(func=cmd_harmonic)

    p = sub.add_parser("certify", help="build a gap certificate")
    p.add_argument("--disc", type=int, action="append", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--variant", choices=("plain", "delta"), default="plain")
    p.add_argument("--delta", help="delta as a fraction such as 1/6 (implies --variant delta)")
    p.add_argument("--witness-bound", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="check a certificate file")
    p.add_argument("file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("pv", help="maximal character sums against the bound")
    p.add_argument("--q", type=int)
    p.add_argument("--q-min", type=int, default=5)
    p.add_argument("--q-max", type=int)
    p.add_argument("--rows", action="store_true", help="include per-modulus rows in JSON output")
    p.set_defaults(func=cmd_pv)

    p = sub.add_parser("constants", help="threshold, gap and Nicolas tables")
    p.add_argument("--thresholds", "--paper-table", dest="thresholds", action="store_true", help="threshold indices for the four constants")
    p.add_argument("--disc", type=int, action="append")
    p.add_argument("--nicolas", type=int, action="append")
    p.add_argument("--bordignon", type=int, action="append")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("gaps", help="gap statistics of represented values")
    p.add_argument("--disc", type=int, action="append", required=True)
    p.add_argument("--X", type=int, required=True)
    p.add_argument("--records-only", action="store_true")
    p.set_defaults(func=cmd_gaps)

    p = sub.add_parser("sieve", help="stream represented values up to X")
    p.add_argument("--disc", type=int, action="append", required=True)
    p.add_argument("--X", type=int, required=True)
    p.set_defaults(func=cmd_sieve)

    for name in ("harmonic", "certify", "verify", "pv", "constants", "gaps", "sieve"):
        _add_common(sub.choices[name])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_sources(args)
        if args.command == "gaps" and args.output_format is None and not args.config:
            cfg.output_format = "csv"  # gap records are tabular
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"qfgaps: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"qfgaps: resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
