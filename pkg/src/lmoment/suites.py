"""Named verification suites behind ``lmoment verify``.

Each suite returns a list of case dictionaries with keys
``id, lhs, rhs, rel_err, pass`` plus optional extras.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, List

import numpy as np

from .analysis import convexity_check, proof_parameters, subharmonic_bound_check
from .arith import dirichlet_convolve, dk_table, tail_coeffs
from .chargroup import build_group, characters, conductor, gauss_sum
from .config import RunConfig
from .lfun import EvaluationContext, _completed, fe_residual
from .meanvalue import (
    WeightSpec,
    aggregate,
    g_tail_identity_check,
    k_identity_check,
)

__all__ = ["SUITES", "run_suite", "convexity_triples"]

Case = Dict[str, object]
SEED = 20240601


def _case(cid: str, lhs: float, rhs: float, ok: bool, rel_err=None, **extra) -> Case:
    if rel_err is None:
        rel_err = abs(lhs - rhs) / abs(rhs) if rhs else abs(lhs - rhs)
    out = {"id": cid, "lhs": float(lhs), "rhs": float(rhs), "rel_err": float(rel_err), "pass": bool(ok)}
    out.update(extra)
    return out


def _delta(cfg: RunConfig) -> float:
    return cfg.delta_override if cfg.delta_override is not None else 0.15


def _ctx(cfg: RunConfig) -> EvaluationContext:
    return EvaluationContext(t_max=cfg.t_max)


def suite_orthogonality(cfg: RunConfig) -> List[Case]:
    cases = []
    for q in (5, 7, 12):
        for k in (0.5, 1.0, 1.5):
            for sigma in (0.6, 1.0, 1.5):
                r = k_identity_check(q, sigma, k, WeightSpec(q, _delta(cfg)), 1e-9, _ctx(cfg))
                cases.append(_case(f"K q={q} k={k} sigma={sigma}", r.lhs, r.rhs,
                                   r.rel_err < cfg.identity_tol, r.rel_err))
    return cases


def suite_gtail(cfg: RunConfig) -> List[Case]:
    cases = []
    for q in (5, 7):
        for k in (0.5, 1.0):
            r = g_tail_identity_check(q, k, 200, tol=1e-6)
            cases.append(_case(f"G q={q} k={k} M=200", r.lhs, r.rhs, r.rel_err < 1e-5, r.rel_err,
                               tail_bound=r.tail_bound, lhs_error=r.lhs_error))
    return cases


FE_POINTS = (0.1 - 5j, 0.3 + 2j, 0.5 + 0.5j, 0.7 - 3j, 0.9 + 5j)


def suite_fe(cfg: RunConfig) -> List[Case]:
    cases = []
    for q in range(3, 51):
        table = build_group(q)
        for chi in characters(table)[1:]:
            if conductor(chi) != q:
                continue
            for s in FE_POINTS:
                res = fe_residual(chi, s)
                size = abs(complex(_completed(s, chi, EvaluationContext().widened(0.1, 0.9))))
                cases.append(_case(f"fe q={q} chi={chi.index} s={s}", res, 0.0, res < 1e-8,
                                   res / size if size else res))
    return cases


def suite_gauss(cfg: RunConfig) -> List[Case]:
    cases = []
    for q in range(3, 101):
        for chi in characters(build_group(q))[1:]:
            if conductor(chi) != q:
                continue
            mag = abs(gauss_sum(chi))
            rel = abs(mag - math.sqrt(q)) / math.sqrt(q)
            cases.append(_case(f"tau q={q} chi={chi.index}", mag, math.sqrt(q), rel < 1e-9, rel))
    return cases


def convexity_triples(n: int, seed: int = SEED, lo: float = 0.5, hi: float = 1.5):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a, b = np.sort(rng.uniform(lo, hi, 2))
        out.append((float(a), float(rng.uniform(a, b)), float(b)))
    return out


def suite_convexity(cfg: RunConfig, n_triples: int = 20) -> List[Case]:
    cases = []
    for kind in ("J", "K"):
        for q in (5, 7):
            spec = WeightSpec(q, _delta(cfg))
            for a, g, b in convexity_triples(n_triples):
                c = convexity_check(kind, q, a, g, b, cfg.k, cfg.v, spec, tol=1e-9, quad_tol=1e-7,
                                    ctx=_ctx(cfg))
                cases.append(_case(f"{kind} q={q} ({a:.4f},{g:.4f},{b:.4f})", c.lhs, c.rhs, c.passed,
                                   (c.lhs - c.rhs) / c.rhs, quadrature_error=c.quadrature_error))
    return cases


def suite_subharmonic(cfg: RunConfig) -> List[Case]:
    cases = []
    for q in range(3, 14):
        for k in (0.5, 1.0):
            params = proof_parameters(q, k, "GRH", 1.0)
            for chi in characters(build_group(q))[1:]:
                c = subharmonic_bound_check(chi, k, q, params, tol=1e-6)
                cases.append(_case(f"disc q={q} k={k} chi={chi.index}", c.point_value, c.disc_average,
                                   c.passed, (c.point_value - c.disc_average) / c.disc_average,
                                   radius=c.radius, converged=c.converged))
    return cases


def suite_dk(cfg: RunConfig) -> List[Case]:
    rng = np.random.default_rng(SEED)
    cases = []
    N = 1000
    for _ in range(10):
        k1, k2 = (float(x) for x in 2.0 - 2.0 * rng.random(2))  # (0, 2]
        conv = dirichlet_convolve(dk_table(k1, N), dk_table(k2, N)).values[1:]
        direct = dk_table(k1 + k2, N).values[1:]
        rel = np.abs(conv - direct) / np.abs(direct)
        worst = int(np.argmax(rel))
        cases.append(_case(f"d_{k1:.6f}*d_{k2:.6f}", conv[worst], direct[worst], rel[worst] < 1e-10,
                           rel[worst], n=worst + 1))
    for v in (1, 2, 3):
        for q in (10, 50):
            try:
                tail_coeffs(v, q, 4 * q)
                ok = True
            except ArithmeticError:
                ok = False
            cases.append(_case(f"tail_coeffs v={v} q={q}", 0.0, 0.0, ok, 0.0))
    return cases


def suite_tails(cfg: RunConfig) -> List[Case]:
    cases = []
    ctx = _ctx(cfg)
    for kind in ("J", "K", "H"):
        k, v = (0.5, 2) if kind == "H" else (cfg.k, cfg.v)
        for sigma in (0.6, 1.0, 1.5):
            q = 5
            spec = WeightSpec(q, _delta(cfg))
            base = aggregate(kind, q, sigma, k, v, spec, 1e-7, ctx, relative=True)
            tol_abs = base.quadrature_error
            big = aggregate(kind, q, sigma, k, v, spec, tol_abs, ctx, T=2 * base.truncation_height)
            diff = abs(big.aggregate - base.aggregate)
            cases.append(_case(f"{kind} q={q} sigma={sigma} T={base.truncation_height:.1f}",
                               big.aggregate, base.aggregate, diff < base.quadrature_error,
                               diff / base.aggregate, reported_error=base.quadrature_error))
    return cases


SUITES: Dict[str, Callable[[RunConfig], List[Case]]] = {
    "orthogonality": suite_orthogonality,
    "gtail": suite_gtail,
    "fe": suite_fe,
    "gauss": suite_gauss,
    "convexity": suite_convexity,
    "subharmonic": suite_subharmonic,
    "dk": suite_dk,
    "tails": suite_tails,
}


def run_suite(name: str, cfg: RunConfig) -> Dict[str, object]:
    if name not in SUITES:
        raise KeyError(name)
    cases = SUITES[name](cfg)
    return {"suite": name, "cases": cases, "pass": all(c["pass"] for c in cases)}
