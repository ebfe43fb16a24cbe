"""Weighted vertical-line mean values of L-functions.

All integrals carry the weight |W(sigma+it)|^6 with
W(s) = (q^(delta (s-1/2)) - 1) / ((s-1/2) log q), except J* which uses the
kernel 1/(1+t^2).  Integration runs over [-T, T]; T is the smallest height
at which an explicit tail majorant drops below a tenth of the tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .arith import dk_table
from .chargroup import CharacterTable, DirichletCharacter, build_group, characters
from .lfun import (
    DEFAULT_CONTEXT,
    EvaluationContext,
    branch_log_all,
    convexity_envelope,
    l_values_all,
)
from .quadrature import QuadratureError, adaptive_integrate, gk15

logger = logging.getLogger(__name__)

__all__ = [
    "KINDS",
    "WeightSpec",
    "MeanValueResult",
    "SixthMoment",
    "IdentityCheck",
    "GTailCheck",
    "weight_w",
    "weight_sixth_moment",
    "integrand",
    "vertical_integral",
    "aggregate",
    "k_identity_check",
    "g_tail_identity_check",
]

KINDS = ("J", "K", "G", "H", "Jstar")
G_MARGIN = 0.02


@dataclass(frozen=True)
class WeightSpec:
    modulus: int
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.modulus < 2:
            raise ValueError("the weight needs log q > 0")

    @property
    def log_q(self) -> float:
        return math.log(self.modulus)

    def decay_constant(self, sigma: float) -> float:
        """C with |W(sigma+it)| <= C/|t|."""
        return (self.modulus ** (self.delta * (sigma - 0.5)) + 1.0) / self.log_q


def weight_w(s, spec: WeightSpec):
    """W(s), with a degree-6 Taylor series in u = (s-1/2) delta log q for |u| < 1e-3."""
    s = np.asarray(s, dtype=complex)
    u = (s - 0.5) * spec.delta * spec.log_q
    small = np.abs(u) < 1e-3
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.expm1(u) / np.where(small, 1.0, u)
    series = 1 + u * (1 / 2 + u * (1 / 6 + u * (1 / 24 + u * (1 / 120 + u * (1 / 720 + u / 5040)))))
    out = spec.delta * np.where(small, series, direct)
    return complex(out) if out.ndim == 0 else out


def _abs_w6(sigma: float, t: np.ndarray, spec: WeightSpec) -> np.ndarray:
    return np.abs(weight_w(sigma + 1j * t, spec)) ** 6


def _pilot(f: Callable, half_width: float, panels: int = 64) -> float:
    """Coarse fixed-panel estimate of the integral's size."""
    edges = np.linspace(-half_width, half_width, panels + 1)
    k, _, _ = gk15(f, edges[:-1], edges[1:])
    return float(np.max(np.abs(k.sum(axis=0))))


def _solve_height(tail: Callable[[float], float], target: float, t_max: float, t_min: float = 4.0) -> float:
    """Smallest T (to 1%) with tail(T) <= target."""
    if tail(t_min) <= target:
        return t_min
    if tail(t_max) > target:
        raise QuadratureError(
            f"tail bound {tail(t_max):.3g} at t_max = {t_max:g} exceeds {target:.3g}"
        )
    return float(optimize.brentq(lambda x: math.log(tail(x)) - math.log(target), t_min, t_max, rtol=1e-2)) * 1.01


@dataclass
class SixthMoment:
    value: float
    error: float
    truncation_height: float
    ratio: float


def weight_sixth_moment(sigma: float, spec: WeightSpec, tol: float, T: Optional[float] = None,
                        t_max: float = 1e5) -> SixthMoment:
    """int |W(sigma+it)|^6 dt to absolute error tol.

    Uses evenness in t.  ``ratio`` compares against q^(3 delta (2 sigma-1)) / log q.
    """
    C = spec.decay_constant(sigma)
    tail = lambda x: 2 * C**6 / (5 * x**5)
    if T is None:
        T = _solve_height(tail, tol / 10, t_max)
    f = lambda t: _abs_w6(sigma, t, spec)
    panels = max(16, int(math.ceil(T * spec.delta * spec.log_q)))
    res = adaptive_integrate(f, 0.0, T, 0.45 * tol, initial_panels=panels)
    value = 2 * float(res.value)
    err = 2 * float(res.error) + tail(T)
    scale = spec.modulus ** (3 * spec.delta * (2 * sigma - 1)) / spec.log_q
    return SixthMoment(value, err, T, value / scale)


# -- integrands ---------------------------------------------------------------

def _coeff_matrix(chars: Sequence[DirichletCharacter], k: float, cutoff: int) -> np.ndarray:
    """(cutoff, nchar) matrix d_k(n) chi(n) for n = 1..cutoff."""
    d = dk_table(k, cutoff).values[1:]
    q = chars[0].modulus
    n = np.arange(1, cutoff + 1)
    vals = np.stack([c.values[n % q] for c in chars], axis=1)
    return d[:, None] * vals


def _dirichlet_poly(s: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """sum_n coeffs[n-1, j] n^-s for each s (rows) and column j."""
    logs = np.log(np.arange(1, coeffs.shape[0] + 1))
    out = np.empty((s.size, coeffs.shape[1]), dtype=complex)
    step = max(1, 2_000_000 // max(1, logs.size))
    for i in range(0, s.size, step):
        E = np.exp(-np.outer(s[i:i + step], logs))
        out[i:i + step] = E @ coeffs
    return out


class _Integrand:
    """Vectorized integrand t -> (len(t), nchar) on the line Re s = sigma."""

    def __init__(self, kind: str, chars: Sequence[DirichletCharacter], sigma: float, k: float,
                 v: int, spec: WeightSpec, ctx: EvaluationContext):
        if kind not in KINDS:
            raise ValueError(f"unknown integral kind {kind!r}")
        if not chars:
            raise ValueError("no characters to integrate")
        q = chars[0].modulus
        if q != spec.modulus:
            raise ValueError("weight modulus does not match the characters")
        if kind != "K" and any(c.is_principal for c in chars):
            raise ValueError(f"{kind} integrand is not defined for the principal character")
        if kind == "H":
            if v < 1 or abs(k * v - 1) > 1e-12:
                raise ValueError("H requires k = 1/v")
        if kind == "G" and sigma <= 0.5:
            raise ValueError("G requires sigma > 1/2")
        self.kind, self.chars, self.sigma, self.k, self.v = kind, list(chars), sigma, k, v
        self.spec, self.ctx = spec, ctx
        self.table = chars[0].table
        self.cols = np.array([c.index for c in chars])
        if kind in ("K", "G", "H"):
            self.S_coeffs = _coeff_matrix(self.chars, k, q)
            self.S_abs = float(np.sum(dk_table(k, q).values[1:] * np.arange(1, q + 1) ** (-sigma)))

    def l_values(self, s: np.ndarray) -> np.ndarray:
        all_vals = l_values_all(s, self.table, self.ctx, include_principal=True) if 0 in self.cols \
            else l_values_all(s, self.table, self.ctx, include_principal=False)
        offset = 0 if 0 in self.cols else 1
        return all_vals[:, self.cols - offset]

    def factor(self, s: np.ndarray) -> np.ndarray:
        """L-factor without the weight, shape (len(s), nchar)."""
        kind = self.kind
        if kind == "J" or kind == "Jstar":
            return np.abs(self.l_values(s)) ** (2 * self.k)
        S = _dirichlet_poly(s, self.S_coeffs)
        if kind == "K":
            return np.abs(S) ** 2
        if kind == "G":
            logL, _ = branch_log_all(s, self.table, self.cols, self.ctx)
            return np.abs(np.exp(self.k * logL) - S) ** 2
        L = self.l_values(s)
        return np.abs(L - S**self.v) ** (2.0 / self.v)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        s = self.sigma + 1j * np.asarray(t, dtype=float)
        f = self.factor(s)
        if self.kind == "Jstar":
            return f / (1.0 + t[:, None] ** 2)
        return f * _abs_w6(self.sigma, t, self.spec)[:, None]

    def envelope(self, t: np.ndarray) -> np.ndarray:
        """Majorant of the L-factor used to size the truncation height."""
        q, sigma, k = self.spec.modulus, self.sigma, self.k
        if self.kind == "K":
            return np.full_like(t, self.S_abs**2)
        F = convexity_envelope(sigma, t, q)
        if self.kind in ("J", "Jstar"):
            return F ** (2 * k)
        if self.kind == "G":
            return (F**k + self.S_abs) ** 2
        return (F + self.S_abs**self.v) ** (2.0 / self.v)

    def tail(self, T: float) -> float:
        """Bound for the two-sided integral over |t| > T."""
        if self.kind == "Jstar":
            g = lambda x: float(self.envelope(np.array([x]))[0]) / (1 + x * x)
        else:
            C6 = self.spec.decay_constant(self.sigma) ** 6
            g = lambda x: float(self.envelope(np.array([x]))[0]) * C6 / x**6
        val, _ = integrate.quad(g, T, np.inf, limit=200)
        return 2 * val * len(self.chars)


def integrand(kind: str, chi: DirichletCharacter, s, k: float, v: int, spec: WeightSpec,
              ctx: EvaluationContext = DEFAULT_CONTEXT):
    """Pointwise integrand values at complex s (all with a common real part)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    sig = float(s_arr.real[0])
    if np.any(np.abs(s_arr.real - sig) > 1e-14):
        raise ValueError("integrand points must share a real part")
    f = _Integrand(kind, [chi], sig, k, v, spec, ctx)
    out = f(s_arr.imag)[:, 0]
    return float(out[0]) if np.ndim(s) == 0 else out


@dataclass
class MeanValueResult:
    kind: str
    sigma: float
    k: float
    v: int
    per_character: np.ndarray
    aggregate: float
    quadrature_error: float
    truncation_height: float
    character_indices: List[int] = field(default_factory=list)
    per_character_error: Optional[np.ndarray] = None
    modulus: int = 0


def _integrate_chars(kind, chars, sigma, k, v, spec, tol, ctx, T=None, relative=False):
    f = _Integrand(kind, chars, sigma, k, v, spec, ctx)
    if relative:
        scale = _pilot(f, 40.0)
        if scale <= 0:
            raise QuadratureError("pilot estimate vanished; cannot set a relative tolerance")
        tol = tol * scale
    if T is None:
        T = _solve_height(f.tail, tol / 10, ctx.t_max)
    width = 2.0 if kind != "Jstar" else 4.0
    panels = max(16, int(math.ceil(2 * T / width)))
    res = adaptive_integrate(f, -T, T, 0.9 * tol / len(chars), initial_panels=panels)
    tail = f.tail(T) / len(chars)
    vals = np.atleast_1d(np.asarray(res.value, dtype=float))
    errs = np.atleast_1d(np.asarray(res.error, dtype=float)) + tail
    return vals, errs, T


def vertical_integral(kind: str, chi: DirichletCharacter, sigma: float, k: float, v: int,
                      spec: WeightSpec, tol: float, ctx: EvaluationContext = DEFAULT_CONTEXT,
                      T: Optional[float] = None, relative: bool = False):
    """(value, error, T) for a single character; full two-sided integration."""
    vals, errs, T = _integrate_chars(kind, [chi], sigma, k, v, spec, tol, ctx, T, relative)
    return float(vals[0]), float(errs[0]), T


def aggregate(kind: str, q: int, sigma: float, k: float, v: int, spec: WeightSpec, tol: float,
              ctx: EvaluationContext = DEFAULT_CONTEXT, T: Optional[float] = None,
              include_principal: bool = False, relative: bool = False) -> MeanValueResult:
    """Sum over non-principal characters (optionally all) in enumeration order.

    ``tol`` bounds the error of the aggregate; with ``relative=True`` it is
    taken relative to a pilot estimate of the largest per-character value.
    """
    if q < 3:
        raise ValueError("aggregate needs q >= 3")
    table = build_group(q, ctx.char_cache_size)
    chars = characters(table)
    if not include_principal:
        chars = chars[1:]
    n = len(chars)
    try:
        vals, errs, T = _integrate_chars(kind, chars, sigma, k, v, spec, tol, ctx, T, relative)
    except QuadratureError:
        raise
    except Exception as exc:  # isolate the failing character
        for chi in chars:
            try:
                _integrate_chars(kind, [chi], sigma, k, v, spec, tol / n, ctx, T, relative)
            except Exception as inner:
                raise RuntimeError(f"{kind} integral failed for character index {chi.index}: {inner}") from inner
        raise
    total = 0.0
    for x in vals:  # deterministic left fold in enumeration order
        total += float(x)
    return MeanValueResult(kind, sigma, k, v, vals, total, float(errs.sum()), T,
                           [c.index for c in chars], errs, q)


# -- exact identities -----------------------------------------------------------

@dataclass
class IdentityCheck:
    lhs: float
    rhs: float
    rel_err: float
    lhs_error: float
    rhs_error: float
    truncation_height: float


def k_identity_check(q: int, sigma: float, k: float, spec: WeightSpec, tol: float = 1e-9,
                     ctx: EvaluationContext = DEFAULT_CONTEXT, T: Optional[float] = None) -> IdentityCheck:
    """Compare sum over all chi of K(sigma, chi) with its diagonal evaluation.

    lhs is pure quadrature of |S|^2 |W|^6 per character; rhs is
    phi(q) sum_{n<=q, (n,q)=1} d_k(n)^2 n^(-2 sigma) int |W|^6.  ``tol`` is a
    relative accuracy target for both sides.
    """
    table = build_group(q, ctx.char_cache_size)
    d = dk_table(k, q).values
    n = np.arange(1, q + 1)
    coprime = np.gcd(n, q) == 1
    diag = float(np.sum(d[1:][coprime] ** 2 * n[coprime] ** (-2.0 * sigma)))
    # size of int |W|^6: at least the contribution of |t| <= 1
    w6_scale = _pilot(lambda t: _abs_w6(sigma, t, spec)[:, None], 10.0)
    w6 = weight_sixth_moment(sigma, spec, tol * w6_scale, T=T)
    rhs = table.phi * diag * w6.value
    res = aggregate("K", q, sigma, k, 1, spec, tol * rhs, ctx, T=T, include_principal=True)
    rel = abs(res.aggregate - rhs) / abs(rhs)
    return IdentityCheck(res.aggregate, rhs, rel, res.quadrature_error,
                         table.phi * diag * w6.error, res.truncation_height)


@dataclass
class GTailCheck:
    lhs: float
    rhs: float
    rel_err: float
    tail_bound: float
    lhs_error: float
    truncation_height: float


def _g_tail_rhs(q: int, k: float, M: int) -> float:
    d = dk_table(k, M).values
    n = np.arange(q + 1, M + 1)
    n = n[np.gcd(n, q) == 1]
    dn = d[n]
    total = 0.0
    for r in range(q):
        sel = n % q == r
        if not np.any(sel):
            continue
        m_ = n[sel].astype(float)
        dm = dn[sel]
        lo = np.minimum.outer(m_, m_)
        hi = np.maximum.outer(m_, m_)
        kern = lo ** -0.5 * hi ** -2.5
        total += float(dm @ kern @ dm)
    return math.pi * (q if q == 1 else build_group(q).phi) * total


def g_tail_identity_check(q: int, k: float, M: int, tol: float = 1e-7,
                          T: Optional[float] = None, max_T: float = 2e5) -> GTailCheck:
    """Tail identity at sigma = 3/2 for the truncated series sum_{q<n<=M} d_k(n) chi(n) n^-s.

    lhs: for every chi, quadrature of |D(3/2+it)|^2/(1+t^2) over [-T, T] plus
    the mean-square (diagonal) part of the two tails; the off-diagonal tail
    is bounded by 4 sum_{m != n} |c_m c_n| / (|log(m/n)| (1+T^2)) and
    included in ``lhs_error``.  rhs: pi phi(q) times the congruence-restricted
    double sum with kernel min(m^-1/2 n^-5/2, n^-1/2 m^-5/2).  ``tail_bound``
    estimates the n > M remainder as 2 (rhs(2M) - rhs(M)).
    """
    if M <= q:
        raise ValueError("need M > q")
    if not 0 < k < 2:
        raise ValueError("k must lie in (0, 2)")
    table = build_group(q)
    chars = characters(table)
    d = dk_table(k, M).values
    n = np.arange(q + 1, M + 1)
    c = d[q + 1:] * n ** -1.5
    coeffs = np.stack([c * chi.values[n % q] for chi in chars], axis=1)
    logs = np.log(n.astype(float))
    abs2 = np.abs(coeffs) ** 2
    diag = abs2.sum(axis=0)

    # size of the answer: pi * sum of diagonal terms over characters
    scale = math.pi * float(diag.sum())
    tol_abs = tol * scale
    absc = np.abs(coeffs)
    with np.errstate(divide="ignore"):
        inv_gap = 1.0 / np.abs(np.subtract.outer(logs, logs))
    np.fill_diagonal(inv_gap, 0.0)
    pair = float(np.einsum("mj,mn,nj->", absc, inv_gap, absc))
    off_tail = lambda x: 4.0 * pair / (1.0 + x * x)
    if T is None:
        T = min(max_T, max(50.0, math.sqrt(4.0 * pair / (0.5 * tol_abs))))

    def f(t):
        E = np.exp(-1j * np.outer(t, logs))
        D = E @ coeffs
        return np.abs(D) ** 2 / (1.0 + t[:, None] ** 2)

    width = min(2.0, math.pi / max(logs[-1] - logs[0], 1e-3))
    panels = int(math.ceil(2 * T / width))
    res = _chunked_integrate(f, T, panels, 0.5 * tol_abs)
    diag_tail = float(diag.sum()) * 2.0 * (math.pi / 2 - math.atan(T))
    lhs = float(np.sum(res[0])) + diag_tail
    lhs_err = float(np.sum(res[1])) + off_tail(T)
    rhs = _g_tail_rhs(q, k, M)
    tail_bound = 2.0 * abs(_g_tail_rhs(q, k, 2 * M) - rhs)
    return GTailCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs), tail_bound, lhs_err, T)


def _chunked_integrate(f, T, panels, tol, block=2000):
    """Adaptive integration of f over [-T, T] in consecutive blocks of panels.

    Keeps peak memory bounded for integrands with many oscillations.
    """
    edges = np.linspace(-T, T, panels + 1)
    total_v = None
    total_e = None
    nblocks = max(1, math.ceil(panels / block))
    for b in range(nblocks):
        lo = edges[b * block]
        hi = edges[min(panels, (b + 1) * block)]
        npan = min(panels, (b + 1) * block) - b * block
        frac = (hi - lo) / (2 * T)
        res = adaptive_integrate(f, lo, hi, tol * frac, initial_panels=npan)
        v = np.atleast_1d(res.value)
        e = np.atleast_1d(res.error)
        total_v = v if total_v is None else total_v + v
        total_e = e if total_e is None else total_e + e
    return total_v, total_e
