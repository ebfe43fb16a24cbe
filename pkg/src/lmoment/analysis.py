"""Moment sums, scaling scans and numerical instances of the proof machinery."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .arith import dk_table
from .chargroup import (
    DirichletCharacter,
    build_group,
    characters,
    conductor,
    factorize,
    induced_primitive,
)
from .lfun import DEFAULT_CONTEXT, EvaluationContext, l_value, l_values_all
from .meanvalue import WeightSpec, aggregate, vertical_integral, weight_w
from .quadrature import adaptive_integrate

logger = logging.getLogger(__name__)

__all__ = [
    "MomentReport",
    "ScanRow",
    "ScanResult",
    "ProofParameters",
    "ConvexityCheck",
    "SubharmonicCheck",
    "MontgomeryResult",
    "central_values",
    "moment_mk",
    "iter_scan",
    "scaling_scan",
    "proof_parameters",
    "convexity_check",
    "subharmonic_bound_check",
    "montgomery_scan",
    "imprimitive_factor_check",
    "dksum_norm",
]

ZERO_THRESHOLD = 1e-12


# -- moments ----------------------------------------------------------------------

@dataclass
class MomentReport:
    q: int
    k: float
    per_character_moment: np.ndarray
    M_k: float
    phi: int
    ratio: float
    zeros: List[int] = field(default_factory=list)

    @property
    def normalizer(self) -> float:
        return self.phi * math.log(self.q) ** (self.k * self.k) if self.q > 1 else 0.0


def central_values(q: int, ctx: EvaluationContext = DEFAULT_CONTEXT, cache=None) -> np.ndarray:
    """L(1/2, chi) for the non-principal characters mod q, in enumeration order.

    ``cache`` may be an LValueCache; hits are returned bit-for-bit.
    """
    if cache is not None:
        hit = cache.lookup(q, 0.5, ctx)
        if hit is not None:
            return hit
    table = build_group(q, ctx.char_cache_size)
    L = l_values_all(0.5, table, ctx, include_principal=False)[0]
    if cache is not None:
        cache.store(q, 0.5, ctx, L)
    return L


def moment_mk(q: int, k: float, ctx: EvaluationContext = DEFAULT_CONTEXT, cache=None) -> MomentReport:
    """M_k(q) = sum over non-principal chi of |L(1/2, chi)|^(2k).

    Characters with |L(1/2, chi)| below ZERO_THRESHOLD are listed in ``zeros``
    (their enumeration indices).  k = 0 is admitted for calibration.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if q < 3:
        logger.warning("moment_mk: q = %d has no non-principal characters worth summing", q)
        return MomentReport(q, k, np.zeros(0), 0.0, 1, 0.0)
    table = build_group(q, ctx.char_cache_size)
    L = central_values(q, ctx, cache)
    mod = np.abs(L)
    zeros = [int(i) + 1 for i in np.flatnonzero(mod < ZERO_THRESHOLD)]
    if zeros:
        logger.warning("moment_mk: L(1/2, chi) vanishes numerically for q=%d, characters %s", q, zeros)
    per = mod ** (2.0 * k)
    total = 0.0
    for x in per:
        total += float(x)
    norm = table.phi * math.log(q) ** (k * k)
    return MomentReport(q, k, per, total, table.phi, total / norm, zeros)


@dataclass
class ScanRow:
    q: int
    phi: Optional[int]
    M_k: Optional[float]
    ratio: Optional[float]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ScanResult:
    k: float
    rows: List[ScanRow]

    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.rows if r.ok])

    def summary(self) -> Dict[str, float]:
        r = self.ratios()
        if r.size == 0:
            return {"count": 0, "failed": len(self.rows)}
        qs = np.array([row.q for row in self.rows if row.ok])
        out = {
            "count": int(r.size),
            "failed": len(self.rows) - int(r.size),
            "min": float(r.min()),
            "median": float(np.median(r)),
            "max": float(r.max()),
            "max_over_median": float(r.max() / np.median(r)),
        }
        if r.size >= 3:
            rho, p = stats.spearmanr(qs, r)
            out["spearman_rho"] = float(rho)
            out["spearman_p"] = float(p)
        return out


def _scan_one(args):
    q, k, ctx, cache = args
    try:
        rep = moment_mk(q, k, ctx, cache)
        if q < 3:
            raise ValueError("q must be at least 3")
        if not (math.isfinite(rep.ratio) and rep.ratio > 0):
            raise ArithmeticError(f"non-positive or non-finite ratio {rep.ratio!r}")
        return ScanRow(q, rep.phi, rep.M_k, rep.ratio)
    except Exception as exc:  # failures become isolated rows
        return ScanRow(q, None, None, None, f"{type(exc).__name__}: {exc}")


def iter_scan(q_list: Sequence[int], k: float, ctx: EvaluationContext = DEFAULT_CONTEXT,
              parallelism: int = 1, cache=None) -> Iterator[ScanRow]:
    """Yield scan rows in input order as they become available."""
    jobs = [(int(q), k, ctx, cache) for q in q_list]
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            yield from pool.map(_scan_one, jobs)
    else:
        for job in jobs:
            yield _scan_one(job)


def scaling_scan(q_list: Sequence[int], k: float, ctx: EvaluationContext = DEFAULT_CONTEXT,
                 parallelism: int = 1, cache=None) -> ScanResult:
    """moment_mk over q_list; rows come back in input order."""
    return ScanResult(k, list(iter_scan(q_list, k, ctx, parallelism, cache)))


# -- proof parameters --------------------------------------------------------------

@dataclass(frozen=True)
class ProofParameters:
    mode: str
    q: int
    k: float
    v: Optional[int]
    delta: float
    c_k_surrogate: float
    kappa: float
    sigma0: float
    disc_radius: float
    contraction_value: float

    @property
    def contraction_holds(self) -> bool:
        return self.contraction_value <= 0.5


def proof_parameters(q: int, k: float, mode: str = "GRH", c_k_surrogate: float = 1.0) -> ProofParameters:
    """delta, kappa, sigma0 and the disc radius R for modulus q.

    GRH mode: delta = (2-k)/10 for 0 < k < 2.  Unconditional mode: k = 1/v
    and delta = k/10.  The contraction quantity c q^(-delta (2 sigma0 - 1))
    is reported, not assumed.
    """
    if q < 2:
        raise ValueError("q must be at least 2")
    if c_k_surrogate <= 0:
        raise ValueError("c_k surrogate must be positive")
    mode_key = mode.lower()
    v = None
    if mode_key == "grh":
        if not 0 < k < 2:
            raise ValueError("GRH mode needs 0 < k < 2")
        delta = (2.0 - k) / 10.0
        mode = "GRH"
    elif mode_key == "unconditional":
        if k <= 0:
            raise ValueError("k must be positive")
        v = int(round(1.0 / k))
        if v < 1 or abs(k * v - 1.0) > 1e-12:
            raise ValueError("unconditional mode needs k = 1/v for a positive integer v")
        delta = k / 10.0
        mode = "unconditional"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    logq = math.log(q)
    kappa = max(1.0, math.log(2.0 * c_k_surrogate)) / (2.0 * delta)
    sigma0 = 0.5 + kappa / logq
    R = min(kappa, 1.0 / delta) / logq
    contraction = c_k_surrogate * q ** (-delta * (2.0 * sigma0 - 1.0))
    return ProofParameters(mode, q, k, v, delta, c_k_surrogate, kappa, sigma0, R, contraction)


# -- Gabriel convexity -------------------------------------------------------------

@dataclass
class ConvexityCheck:
    lhs: float
    rhs: float
    slack: float
    tol: float
    quadrature_error: float
    values: Dict[float, float]
    per_character_slack: Optional[np.ndarray] = None
    per_character_rhs: Optional[np.ndarray] = None
    truncation_heights: Dict[float, float] = field(default_factory=dict)
    errors: Dict[float, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        ok = self.slack >= -self.tol * self.rhs
        if self.per_character_slack is not None:
            ok = ok and bool(np.all(self.per_character_slack >= -self.tol * self.per_character_rhs))
        return ok


def convexity_check(kind: str, target: Union[DirichletCharacter, int], alpha: float, gamma: float,
                    beta: float, k: float, v: int, spec: WeightSpec, tol: float = 1e-9,
                    quad_tol: float = 1e-8, ctx: EvaluationContext = DEFAULT_CONTEXT) -> ConvexityCheck:
    """I(gamma) against I(alpha)^a I(beta)^b with a = (beta-gamma)/(beta-alpha).

    ``target`` is a character or a modulus.  For a modulus the headline
    check uses the aggregates over non-principal characters (the form
    obtained by Hoelder's inequality) and the per-character inequalities are
    reported alongside.  ``quad_tol`` is the relative quadrature accuracy
    per integral.
    """
    if not alpha <= gamma <= beta:
        raise ValueError("need alpha <= gamma <= beta")
    if alpha == beta:
        raise ValueError("need alpha < beta")
    values: Dict[float, float] = {}
    errors: Dict[float, float] = {}
    heights: Dict[float, float] = {}
    per: Dict[float, np.ndarray] = {}
    for sig in dict.fromkeys((alpha, gamma, beta)):
        if isinstance(target, DirichletCharacter):
            val, err, T = vertical_integral(kind, target, sig, k, v, spec, quad_tol, ctx, relative=True)
        else:
            res = aggregate(kind, int(target), sig, k, v, spec, quad_tol, ctx, relative=True)
            val, err, T = res.aggregate, res.quadrature_error, res.truncation_height
            per[sig] = res.per_character
        values[sig], errors[sig], heights[sig] = val, err, T
    a = (beta - gamma) / (beta - alpha)
    b = (gamma - alpha) / (beta - alpha)

    def interpolate(x_alpha, x_beta):
        if b == 0.0:
            return x_alpha
        if a == 0.0:
            return x_beta
        return x_alpha**a * x_beta**b

    lhs = values[gamma]
    rhs = interpolate(values[alpha], values[beta])
    pc_slack = pc_rhs = None
    if per:
        pc_rhs = interpolate(per[alpha], per[beta])
        pc_slack = pc_rhs - per[gamma]
    err = errors[gamma] + a * errors[alpha] * rhs / values[alpha] + b * errors[beta] * rhs / values[beta]
    return ConvexityCheck(lhs, rhs, rhs - lhs, tol, err, values, pc_slack, pc_rhs, heights, errors)


# -- subharmonic disc bound ---------------------------------------------------------

@dataclass
class SubharmonicCheck:
    point_value: float
    disc_average: float
    slack: float
    radius: float
    tol: float
    level_change: float
    converged: bool
    w_floor: float
    w_floor_ratio: float

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tol * self.disc_average


def _disc_average(f, R: float, nr: int, nt: int) -> float:
    x, w = np.polynomial.legendre.leggauss(nr)
    r = 0.5 * R * (x + 1.0)
    wr = 0.5 * R * w * r
    theta = 2.0 * math.pi * np.arange(nt) / nt
    z = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    vals = f(z).reshape(nr, nt)
    integral = float(wr @ vals.mean(axis=1)) * 2.0 * math.pi
    return integral / (math.pi * R * R)


def subharmonic_bound_check(chi: DirichletCharacter, k: float, q: Optional[int] = None,
                            params: Optional[ProofParameters] = None, tol: float = 1e-6,
                            radius: Optional[float] = None, max_level: int = 6,
                            ctx: EvaluationContext = DEFAULT_CONTEXT) -> SubharmonicCheck:
    """|L(1/2, chi)|^(2k) against its mean over the disc |z| <= R around 1/2.

    R comes from ``params.disc_radius`` unless ``radius`` is given.  The
    polar product rule (Gauss radial x uniform angular nodes) is doubled in
    both directions until two levels agree to ``tol`` relative, or until
    ``max_level`` refinements.  Also reports min |W(1/2+z)| over the circle
    |z| = R (the minimum over the disc, by the minimum modulus principle)
    and its ratio to W(1/2) = delta.
    """
    if chi.is_principal:
        raise ValueError("subharmonic check needs a non-principal character")
    q = chi.modulus if q is None else q
    if params is None:
        params = proof_parameters(q, k, "GRH")
    R = params.disc_radius if radius is None else float(radius)
    if R <= 0:
        raise ValueError("disc radius must be positive")
    wide = ctx.widened(0.5 - R, 0.5 + R)

    def f(z):
        return np.abs(l_value(0.5 + z, chi, wide)) ** (2.0 * k)

    point = float(np.abs(l_value(0.5, chi, ctx)) ** (2.0 * k))
    nr, nt = 16, 32
    prev = _disc_average(f, R, nr, nt)
    change = math.inf
    converged = False
    for _ in range(max_level):
        nr, nt = 2 * nr, 2 * nt
        cur = _disc_average(f, R, nr, nt)
        change = abs(cur - prev)
        prev = cur
        if change <= tol * abs(cur):
            converged = True
            break
    spec = WeightSpec(q, params.delta)
    circle = 0.5 + R * np.exp(2j * math.pi * np.arange(2048) / 2048)
    w_floor = float(np.min(np.abs(weight_w(circle, spec))))
    return SubharmonicCheck(point, prev, prev - point, R, tol, change, converged,
                            w_floor, w_floor / params.delta)


# -- Montgomery fourth moment --------------------------------------------------------

@dataclass
class MontgomeryResult:
    q: int
    T: float
    lhs: float
    normalizer: float
    ratio: float
    primitive_count: int
    quadrature_error: float


def montgomery_scan(q: int, T: float, ctx: EvaluationContext = DEFAULT_CONTEXT,
                    rel_tol: float = 1e-9) -> MontgomeryResult:
    """sum over primitive chi mod q of int_{-T}^{T} |L(1/2+it, chi)|^4 dt."""
    if q < 3:
        raise ValueError("q must be at least 3")
    if T < 2:
        raise ValueError("T must be at least 2")
    table = build_group(q, ctx.char_cache_size)
    prim = [c.index for c in characters(table)[1:] if conductor(c) == q]
    if not prim:
        return MontgomeryResult(q, T, 0.0, table.phi * T * math.log(q * T) ** 4, 0.0, 0, 0.0)
    cols = np.array(prim) - 1

    def f(t):
        L = l_values_all(0.5 + 1j * t, table, ctx, include_principal=False)[:, cols]
        return (np.abs(L) ** 4).sum(axis=1)

    scale = 2 * T * float(np.mean(f(np.linspace(-T, T, 33))))
    res = adaptive_integrate(f, -T, T, rel_tol * max(scale, 1e-300), initial_panels=max(8, int(2 * T)))
    lhs = float(res.value)
    norm = table.phi * T * math.log(q * T) ** 4
    return MontgomeryResult(q, T, lhs, norm, lhs / norm, len(prim), float(res.error))


def imprimitive_factor_check(chi: DirichletCharacter, t: np.ndarray,
                             ctx: EvaluationContext = DEFAULT_CONTEXT) -> float:
    """max over t of |L(1/2+it, chi)|^4 / (|L(1/2+it, psi)|^4 prod (1+p^-1/2)^4).

    The product runs over p | q with p not dividing the conductor; the
    returned value is at most 1 whenever the extension bound holds.
    """
    psi = induced_primitive(chi)
    q1 = psi.modulus
    bound = 1.0
    for p, _ in factorize(chi.modulus):
        if q1 % p:
            bound *= (1.0 + p ** -0.5) ** 4
    s = 0.5 + 1j * np.asarray(t, dtype=float)
    num = np.abs(l_value(s, chi, ctx)) ** 4
    if q1 == 1:
        from .lfun import hurwitz_zeta
        den = np.abs(hurwitz_zeta(s, 1.0, ctx)) ** 4
    else:
        den = np.abs(l_value(s, psi, ctx)) ** 4
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / (den * bound), 0.0)
    return float(np.max(ratio))


def dksum_norm(q: int, k: float):
    """(sum_{n<=q} d_k(n)^2/n, its ratio to (log q)^(k^2))."""
    if q < 2:
        raise ValueError("q must be at least 2")
    if k <= 0:
        raise ValueError("k must be positive")
    d = dk_table(k, q).values[1:]
    total = float(np.sum(d * d / np.arange(1, q + 1)))
    return total, total / math.log(q) ** (k * k)
