"""Command-line interface: ``lmoment <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import List, Optional, Sequence

from .analysis import iter_scan, moment_mk, proof_parameters, ScanResult
from .arith import primes_up_to
from .cache import LValueCache
from .chargroup import build_group, characters, conductor
from .config import ConfigError, RunConfig, load_config
from .lfun import EvaluationContext
from .meanvalue import KINDS, WeightSpec, aggregate, vertical_integral

logger = logging.getLogger("lmoment")

MOMENTS_HEADER = "q,phi,k,M_k,ratio"
SCAN_HEADER = "q,phi,M_k,ratio"


def fmt(x) -> str:
    """17 significant digits, or NA for missing values."""
    if x is None:
        return "NA"
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "NA"
    return format(x, ".17g")


class UsageError(Exception):
    """Invalid arguments detected after parsing."""


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="key=value configuration file")
    g.add_argument("--k", type=float, default=None)
    g.add_argument("--v", type=int, default=None)
    g.add_argument("--mode", choices=["GRH", "unconditional"], default=None)
    g.add_argument("--delta", dest="delta_override", type=float, default=None)
    g.add_argument("--quad-tol", dest="quad_tol", type=float, default=None)
    g.add_argument("--identity-tol", dest="identity_tol", type=float, default=None)
    g.add_argument("--t-max", dest="t_max", type=float, default=None)
    g.add_argument("--cache-dir", dest="cache_dir", default=None)
    g.add_argument("--format", dest="output_format", choices=["csv", "json"], default=None)
    g.add_argument("--parallelism", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lmoment", description="Dirichlet L-function moments and mean values")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("group", help="list the characters mod q")
    p.add_argument("--q", type=int, required=True)
    _common(p)

    p = sub.add_parser("moments", help="M_k(q) and its normalized ratio")
    p.add_argument("--q", type=int, nargs="+", required=True)
    _common(p)

    p = sub.add_parser("scan", help="scaling scan over a range of moduli")
    p.add_argument("--q-min", type=int, required=True)
    p.add_argument("--q-max", type=int, required=True)
    p.add_argument("--primes", action="store_true", help="keep prime moduli only")
    _common(p)

    p = sub.add_parser("integral", help="weighted vertical-line integral")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--char", type=int, default=None, help="enumeration index; default all non-principal")
    _common(p)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True)
    _common(p)

    p = sub.add_parser("params", help="delta, kappa, sigma0 and R")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--c-k", dest="c_k", type=float, default=1.0)
    _common(p)
    return parser


def _config(args) -> RunConfig:
    keys = ["k", "v", "mode", "delta_override", "quad_tol", "identity_tol", "t_max",
            "cache_dir", "output_format", "parallelism"]
    flags = {k: getattr(args, k, None) for k in keys}
    return load_config(flags, args.config)


def _cache(cfg: RunConfig) -> Optional[LValueCache]:
    return LValueCache(cfg.cache_dir) if cfg.cache_dir else None


def _ctx(cfg: RunConfig) -> EvaluationContext:
    return EvaluationContext(t_max=cfg.t_max)


def _emit_json(obj, out) -> None:
    out.write(json.dumps(obj) + "\n")


def cmd_group(args, cfg: RunConfig, out) -> int:
    if args.q < 1:
        raise UsageError("q must be positive")
    table = build_group(args.q)
    rows = []
    for chi in characters(table):
        rows.append({
            "index": chi.index,
            "exponents": list(chi.exponents),
            "conductor": conductor(chi),
            "parity": chi.parity,
            "primitive": conductor(chi) == args.q,
        })
    if cfg.output_format == "json":
        _emit_json({"q": args.q, "phi": table.phi, "orders": list(table.orders), "characters": rows}, out)
    else:
        out.write("index,exponents,conductor,parity,primitive\n")
        for r in rows:
            exps = ";".join(str(e) for e in r["exponents"])
            out.write(f"{r['index']},{exps},{r['conductor']},{r['parity']},{int(r['primitive'])}\n")
    return 0


def cmd_moments(args, cfg: RunConfig, out) -> int:
    if cfg.k < 0:
        raise UsageError("k must be nonnegative")
    if any(q < 1 for q in args.q):
        raise UsageError("q must be positive")
    cache = _cache(cfg)
    reports = [moment_mk(q, cfg.k, _ctx(cfg), cache) for q in args.q]
    if cfg.output_format == "json":
        objs = [{
            "q": r.q, "phi": r.phi, "k": r.k, "M_k": r.M_k,
            "ratio": r.ratio if r.q >= 3 else None,
            "per_character": [float(x) for x in r.per_character_moment],
            "zeros": r.zeros,
        } for r in reports]
        _emit_json(objs[0] if len(objs) == 1 else {"reports": objs}, out)
    else:
        out.write(MOMENTS_HEADER + "\n")
        for r in reports:
            if r.q < 3:
                out.write(f"{r.q},{r.phi},{fmt(r.k)},NA,NA\n")
            else:
                out.write(f"{r.q},{r.phi},{fmt(r.k)},{fmt(r.M_k)},{fmt(r.ratio)}\n")
    return 0


def cmd_scan(args, cfg: RunConfig, out) -> int:
    if args.q_min < 3 or args.q_max < args.q_min:
        raise UsageError("need 3 <= q-min <= q-max")
    if args.primes:
        qs = [int(p) for p in primes_up_to(args.q_max) if p >= args.q_min]
    else:
        qs = list(range(args.q_min, args.q_max + 1))
    rows = []
    out.write(SCAN_HEADER + "\n")
    for row in iter_scan(qs, cfg.k, _ctx(cfg), cfg.parallelism, _cache(cfg)):
        rows.append(row)
        out.write(f"{row.q},{fmt(row.phi)},{fmt(row.M_k)},{fmt(row.ratio)}\n")
        out.flush()
        if not row.ok:
            print(f"lmoment: q={row.q} failed: {row.error}", file=sys.stderr)
    summary = ScanResult(cfg.k, rows).summary()
    out.write("# summary " + " ".join(f"{k}={fmt(v)}" for k, v in summary.items()) + "\n")
    return 1 if rows and not any(r.ok for r in rows) else 0


def cmd_integral(args, cfg: RunConfig, out) -> int:
    if args.q < 3:
        raise UsageError("q must be at least 3")
    delta = cfg.delta_override if cfg.delta_override is not None else 0.15
    spec = WeightSpec(args.q, delta)
    ctx = _ctx(cfg)
    if args.char is not None:
        table = build_group(args.q)
        if not 0 <= args.char < table.phi:
            raise UsageError(f"character index must lie in [0, {table.phi - 1}]")
        chi = characters(table)[args.char]
        val, err, T = vertical_integral(args.kind, chi, args.sigma, cfg.k, cfg.v, spec, cfg.quad_tol,
                                        ctx, relative=True)
        entries = [(args.char, val, err)]
        total, total_err = val, err
    else:
        res = aggregate(args.kind, args.q, args.sigma, cfg.k, cfg.v, spec, cfg.quad_tol, ctx, relative=True)
        entries = list(zip(res.character_indices, res.per_character, res.per_character_error))
        total, total_err, T = res.aggregate, res.quadrature_error, res.truncation_height
    if cfg.output_format == "json":
        _emit_json({
            "kind": args.kind, "q": args.q, "sigma": args.sigma, "k": cfg.k, "v": cfg.v, "delta": delta,
            "per_character": [{"index": int(i), "value": float(v), "error": float(e)} for i, v, e in entries],
            "aggregate": float(total), "quadrature_error": float(total_err), "truncation_height": float(T),
        }, out)
    else:
        out.write("kind,q,sigma,k,index,value,error,T\n")
        for i, v, e in entries:
            out.write(f"{args.kind},{args.q},{fmt(args.sigma)},{fmt(cfg.k)},{i},{fmt(v)},{fmt(e)},{fmt(T)}\n")
        if args.char is None:
            out.write(f"{args.kind},{args.q},{fmt(args.sigma)},{fmt(cfg.k)},all,{fmt(total)},{fmt(total_err)},{fmt(T)}\n")
    return 0


def cmd_verify(args, cfg: RunConfig, out) -> int:
    from .suites import SUITES, run_suite

    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    report = run_suite(args.suite, cfg)
    _emit_json(report, out)
    return 0 if report["pass"] else 1


def cmd_params(args, cfg: RunConfig, out) -> int:
    p = proof_parameters(args.q, cfg.k, cfg.mode, args.c_k)
    _emit_json({
        "q": p.q, "k": p.k, "mode": p.mode, "v": p.v, "delta": p.delta, "c_k_surrogate": p.c_k_surrogate,
        "kappa": p.kappa, "sigma0": p.sigma0, "disc_radius": p.disc_radius,
        "contraction_value": p.contraction_value, "contraction_holds": p.contraction_holds,
    }, out)
    return 0


COMMANDS = {
    "group": cmd_group,
    "moments": cmd_moments,
    "scan": cmd_scan,
    "integral": cmd_integral,
    "verify": cmd_verify,
    "params": cmd_params,
}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="lmoment: %(levelname)s: %(message)s")
    try:
        cfg = _config(args)
    except (ConfigError, OSError) as exc:
        print(f"lmoment: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args, cfg, out)
    except (UsageError, ValueError) as exc:
        print(f"lmoment: invalid arguments: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"lmoment: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
