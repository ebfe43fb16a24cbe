"""Hurwitz zeta, Dirichlet L-functions, fractional powers and the functional equation.

L(s, chi) = q^-s sum_{a=1}^{q} chi(a) zeta(s, a/q), with zeta(s, a) from
Euler-Maclaurin summation.  The 1/(s-1) pole of each Hurwitz value is split
off so that sums against non-principal characters are pole-free (the split
part cancels exactly because sum_a chi(a) = 0).
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import bernoulli

from .chargroup import (
    CharacterTable,
    DirichletCharacter,
    conductor,
    gauss_sum,
    induced_primitive,
)

__all__ = [
    "EvaluationContext",
    "DEFAULT_CONTEXT",
    "PoleError",
    "ConvergenceError",
    "BranchError",
    "DegenerateError",
    "gamma",
    "hurwitz_zeta",
    "hurwitz_vector",
    "l_value",
    "l_values_all",
    "l_power",
    "branch_log",
    "branch_log_all",
    "euler_correction",
    "fe_residual",
    "fe_ratio",
    "rho_factor",
    "rho_log_bound",
    "convexity_envelope",
]


class PoleError(ValueError):
    """Evaluation requested at s = 1 where the function has a pole."""


class ConvergenceError(RuntimeError):
    """Euler-Maclaurin remainder exceeds the requested error."""


class BranchError(RuntimeError):
    """Continuation of log L failed; a zero is suspected near the path."""

    def __init__(self, message: str, points=None):
        super().__init__(message)
        self.points = points


class DegenerateError(ValueError):
    """An L-value in a denominator is too close to zero."""


@dataclass(frozen=True)
class EvaluationContext:
    """Numeric controls for every L-function evaluation.

    The default strip [0.3, 3.5] is the operating envelope.  Operations that
    legitimately leave it (reflected points of the functional equation, disc
    averages around 1/2) call :meth:`widened`, which marks the context
    ``extended`` instead of silently relaxing the check.
    """

    em_terms: int = 16
    em_bernoulli_depth: int = 40
    target_abs_error: float = 1e-12
    branch_step: float = 0.1
    branch_max_refine: int = 12
    sigma_min: float = 0.3
    sigma_max: float = 3.5
    t_max: float = 5000.0
    char_cache_size: int = 256
    extended: bool = False

    def __post_init__(self):
        if not self.target_abs_error > 0:
            raise ValueError("target_abs_error must be positive")
        if self.branch_step > 0.1 or self.branch_step <= 0:
            raise ValueError("branch_step must lie in (0, 0.1]")
        if self.sigma_min >= self.sigma_max:
            raise ValueError("empty strip")
        if not self.extended and (self.sigma_min < 0.3 or self.sigma_max > 3.5):
            raise ValueError("strip outside the operating envelope [0.3, 3.5]")
        if self.em_terms < 1 or self.em_bernoulli_depth < 1:
            raise ValueError("Euler-Maclaurin parameters must be positive")

    def widened(self, sigma_min: float, sigma_max: float) -> "EvaluationContext":
        lo, hi = min(self.sigma_min, sigma_min), max(self.sigma_max, sigma_max)
        if lo == self.sigma_min and hi == self.sigma_max:
            return self
        return dataclasses.replace(self, sigma_min=lo, sigma_max=hi, extended=True)

    def fingerprint(self) -> str:
        payload = repr(dataclasses.astuple(self)).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


DEFAULT_CONTEXT = EvaluationContext()


# -- Gamma ------------------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS_P = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])


def _gamma_right(z):
    z = z - 1.0
    x = np.full_like(z, _LANCZOS_P[0])
    for i in range(1, _LANCZOS_P.size):
        x = x + _LANCZOS_P[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return np.sqrt(2 * np.pi) * np.exp((z + 0.5) * np.log(t) - t) * x


def gamma(z):
    """Complex Gamma function (Lanczos, g=7) with reflection for Re z < 1/2."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    left = z.real < 0.5
    out[~left] = _gamma_right(z[~left])
    if np.any(left):
        zl = z[left]
        out[left] = np.pi / (np.sin(np.pi * zl) * _gamma_right(1.0 - zl))
    return out[0] if scalar else out


# -- Hurwitz zeta -----------------------------------------------------------

@lru_cache(maxsize=8)
def _bernoulli_coeffs(depth: int) -> np.ndarray:
    """B_{2j}/(2j)! for j = 1..depth+1 (the extra one feeds the error bound)."""
    b = bernoulli(2 * depth + 2)
    return np.array([b[2 * j] / math.factorial(2 * j) for j in range(1, depth + 2)])


def _check_strip(s: np.ndarray, ctx: EvaluationContext) -> None:
    if s.size == 0:
        return
    re = s.real
    if re.min() < ctx.sigma_min - 1e-12 or re.max() > ctx.sigma_max + 1e-12:
        raise ValueError(
            f"Re(s) in [{re.min():.4g}, {re.max():.4g}] outside strip "
            f"[{ctx.sigma_min}, {ctx.sigma_max}]"
        )
    if np.abs(s.imag).max() > ctx.t_max:
        raise ValueError(f"|Im s| exceeds t_max = {ctx.t_max}")


def _em_cutoff(abs_s: float, ctx: EvaluationContext) -> int:
    # with N >= |s|/pi the Bernoulli terms shrink by about 4 per step
    return int(max(ctx.em_terms, math.ceil(float(abs_s) / math.pi) + 10))


def _hurwitz_regular(s: np.ndarray, a: np.ndarray, ctx: EvaluationContext):
    """zeta(s, a) - 1/(s-1) on the grid s x a, plus the EM error bound.

    Finite at s = 1, where it equals the limit -digamma(a).
    """
    ns, na = s.size, a.size
    out = np.empty((ns, na), dtype=complex)
    errs = np.empty((ns, na))
    order = np.argsort(np.abs(s), kind="stable")
    sorted_abs = np.abs(s)[order]
    coeffs = _bernoulli_coeffs(ctx.em_bernoulli_depth)
    pos = 0
    while pos < ns:
        # rows sorted by |s|; size the chunk so the (rows, N, na) block stays small
        rows = max(1, min(ns - pos, int(4_000_000 // (_em_cutoff(sorted_abs[pos], ctx) * na))))
        N = _em_cutoff(sorted_abs[pos + rows - 1], ctx)
        while rows > 1 and rows * N * na > 8_000_000:
            rows //= 2
            N = _em_cutoff(sorted_abs[pos + rows - 1], ctx)
        idx = order[pos:pos + rows]
        ss = s[idx][:, None]
        logs = np.log(np.arange(N)[:, None] + a[None, :])  # (N, na)
        sig = ss.real
        if np.all(sig == sig[0, 0]):
            # common real part: shared amplitudes, only the phases vary
            amp = np.exp(-sig[0, 0] * logs)
            phase = ss.imag[:, :, None] * logs[None, :, :]
            head = np.einsum("rna,na->ra", np.cos(phase), amp) - 1j * np.einsum(
                "rna,na->ra", np.sin(phase), amp
            )
        else:
            head = np.exp(-ss[:, :, None] * logs[None, :, :]).sum(axis=1)  # (rows, na)
        Na = N + a[None, :]
        logNa = np.log(Na)
        pw = np.exp(-ss * logNa)  # (N+a)^-s
        one_minus = 1.0 - ss
        with np.errstate(invalid="ignore", divide="ignore"):
            pole_free = np.where(
                np.abs(one_minus) > 0,
                np.expm1(one_minus * logNa) / np.where(one_minus == 0, 1.0, -one_minus),
                -logNa,
            )
        val = head + pole_free + 0.5 * pw
        # Bernoulli corrections: B_2j/(2j)! (s)_(2j-1) (N+a)^(-s-2j+1)
        term = ss * pw / Na
        inv2 = 1.0 / (Na * Na)
        for j in range(ctx.em_bernoulli_depth):
            val = val + coeffs[j] * term
            term = term * (ss + 2 * j + 1) * (ss + 2 * j + 2) * inv2
        bound = np.abs(coeffs[ctx.em_bernoulli_depth] * term)
        bound *= np.abs(ss + 2 * ctx.em_bernoulli_depth + 1) / np.maximum(
            ss.real + 2 * ctx.em_bernoulli_depth + 1, 1.0
        )
        out[idx] = val
        errs[idx] = bound
        pos += rows
    return out, errs


def _regular_checked(s: np.ndarray, a: np.ndarray, ctx: EvaluationContext) -> np.ndarray:
    _check_strip(s, ctx)
    val, err = _hurwitz_regular(s, a, ctx)
    worst = float(err.max()) if err.size else 0.0
    if worst > ctx.target_abs_error:
        raise ConvergenceError(
            f"Euler-Maclaurin remainder {worst:.3g} exceeds {ctx.target_abs_error:.3g}; "
            "increase em_bernoulli_depth or em_terms"
        )
    return val


def hurwitz_zeta(s, a, ctx: EvaluationContext = DEFAULT_CONTEXT):
    """zeta(s, a) for 0 < a <= 1 (scalars or broadcastable arrays)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    a_arr = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any(s_arr == 1):
        raise PoleError("zeta(s, a) has a pole at s = 1")
    if np.any(a_arr <= 0) or np.any(a_arr > 1):
        raise ValueError("a must lie in (0, 1]")
    val = _regular_checked(s_arr, a_arr, ctx) + (1.0 / (s_arr - 1.0))[:, None]
    if np.ndim(s) == 0 and np.ndim(a) == 0:
        return complex(val[0, 0])
    if np.ndim(a) == 0:
        return val[:, 0]
    if np.ndim(s) == 0:
        return val[0]
    return val


@lru_cache(maxsize=512)
def hurwitz_vector(s: complex, q: int, ctx: EvaluationContext = DEFAULT_CONTEXT) -> np.ndarray:
    """Pole-free parts zeta(s, a/q) - 1/(s-1) for a = 1..q, as a length-q+1 array
    indexed by a (slot 0 unused).  Memoized per (s, q, ctx)."""
    a = np.arange(1, q + 1) / q
    row = _regular_checked(np.array([complex(s)]), a, ctx)[0]
    out = np.concatenate([[0.0], row])
    out.setflags(write=False)
    return out


def l_value(s, chi: DirichletCharacter, ctx: EvaluationContext = DEFAULT_CONTEXT):
    """L(s, chi) for scalar or array s."""
    q = chi.modulus
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    principal = chi.is_principal
    if principal and np.any(s_arr == 1):
        raise PoleError("L(s, chi_0) has a pole at s = 1")
    vals = chi.values
    units = np.flatnonzero(vals)
    units = units[units > 0] if q > 1 else np.array([0])
    a_idx = np.where(units == 0, q, units)
    if scalar:
        H = hurwitz_vector(complex(s_arr[0]), q, ctx)[a_idx][None, :]
    else:
        H = _regular_checked(s_arr, a_idx / q, ctx)
    total = H @ vals[units]
    if principal:
        total = total + len(units) / (s_arr - 1.0)
    out = np.exp(-s_arr * math.log(q)) * total
    return complex(out[0]) if scalar else out


def l_values_all(s, table: CharacterTable, ctx: EvaluationContext = DEFAULT_CONTEXT,
                 include_principal: bool = True) -> np.ndarray:
    """L(s_i, chi_j) for all characters in enumeration order: shape (len(s), phi).

    One Hurwitz vector per s is shared by every character.  When
    ``include_principal`` is False the principal column is dropped.
    """
    q = table.modulus
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    mat = table.value_matrix()
    if q == 1:
        units = np.array([0])
        a_idx = np.array([1])
    else:
        units = np.flatnonzero(table._units)
        a_idx = units
    cols = mat[:, units]
    if not include_principal:
        cols = cols[1:]
    H = _regular_checked(s_arr, a_idx / q, ctx)
    total = H @ cols.T
    if include_principal:
        if np.any(s_arr == 1):
            raise PoleError("principal character has a pole at s = 1")
        total[:, 0] += len(units) / (s_arr - 1.0)
    return np.exp(-s_arr * math.log(q))[:, None] * total


def euler_correction(s, chi: DirichletCharacter):
    """prod_{p | q} (1 - psi(p) p^-s) with psi the primitive character inducing chi."""
    from .chargroup import factorize

    psi = induced_primitive(chi)
    s_arr = np.asarray(s, dtype=complex)
    out = np.ones_like(s_arr)
    for p, _ in factorize(chi.modulus) if chi.modulus > 1 else []:
        out = out * (1.0 - psi.values[p % psi.modulus] * np.exp(-s_arr * math.log(p)))
    return out


# -- fractional powers --------------------------------------------------------

_ANCHOR = 3.0


def branch_log_all(s, table: CharacterTable, columns=None, ctx: EvaluationContext = DEFAULT_CONTEXT):
    """log L(s, chi) for several non-principal characters at once.

    ``columns`` are enumeration indices (default: every non-principal
    character).  The path runs horizontally from Re s = 3 in steps of at most
    ``ctx.branch_step``; a step is bisected, only at the offending points,
    while some argument jump exceeds pi/2.  Returns (log L of shape
    (len(s), len(columns)), largest accepted argument increment).
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    cols = np.arange(1, table.phi) if columns is None else np.asarray(columns, dtype=int)
    if cols.size and cols.min() < 1:
        raise ValueError("branch tracking needs non-principal characters")
    if np.any(s_arr.real <= 0.5):
        raise ValueError("fractional powers are defined here only for Re s > 1/2")
    t = s_arr.imag
    target = s_arr.real
    span = np.abs(_ANCHOR - target)
    n_steps = max(1, int(math.ceil(float(span.max()) / ctx.branch_step))) if s_arr.size else 1
    wide = ctx.widened(min(float(target.min(initial=_ANCHOR)), _ANCHOR),
                       max(float(target.max(initial=_ANCHOR)), _ANCHOR))

    def at(lam, idx):
        sig = _ANCHOR + lam * (target[idx] - _ANCHOR)
        return l_values_all(sig + 1j * t[idx], table, wide, include_principal=False)[:, cols - 1]

    all_idx = np.arange(s_arr.size)
    prev = at(0.0, all_idx)
    # at Re s = 3 |log L| < log zeta(3) < pi/2, so the principal branch is right
    arg = np.angle(prev)
    max_inc = 0.0

    def advance(lo, hi, idx, L_lo, depth):
        """Argument increment and L at hi for the points idx."""
        L_hi = at(hi, idx)
        with np.errstate(divide="ignore", invalid="ignore"):
            inc = np.angle(L_hi / L_lo)
        bad_rows = np.any(~np.isfinite(inc) | (np.abs(inc) > np.pi / 2), axis=1)
        worst = float(np.max(np.abs(inc[~bad_rows]), initial=0.0))
        if not np.any(bad_rows):
            return inc, L_hi, worst
        if depth >= ctx.branch_max_refine:
            raise BranchError(
                "argument of L jumps by more than pi/2 after refinement; "
                "suspected zero near the continuation path",
                points=s_arr[idx[bad_rows]],
            )
        sub = idx[bad_rows]
        mid = 0.5 * (lo + hi)
        inc1, L_mid, m1 = advance(lo, mid, sub, L_lo[bad_rows], depth + 1)
        inc2, L_end, m2 = advance(mid, hi, sub, L_mid, depth + 1)
        inc[bad_rows] = inc1 + inc2
        L_hi[bad_rows] = L_end
        return inc, L_hi, max(worst, m1, m2)

    for i in range(n_steps):
        inc, prev, m = advance(i / n_steps, (i + 1) / n_steps, all_idx, prev, 0)
        arg = arg + inc
        max_inc = max(max_inc, m)
    zero = np.any(prev == 0, axis=1)
    if np.any(zero):
        raise BranchError("L vanishes at the target point", points=s_arr[zero])
    return np.log(np.abs(prev)) + 1j * arg, max_inc


def branch_log(s, chi: DirichletCharacter, ctx: EvaluationContext = DEFAULT_CONTEXT):
    """log L(s, chi) continued horizontally from Re s = 3.

    Returns (log L, largest accepted argument increment).  Steps are at most
    ``ctx.branch_step`` and are bisected while any argument jump exceeds
    pi/2; after ``branch_max_refine`` bisections a BranchError is raised.
    """
    if chi.is_principal:
        raise ValueError("branch tracking needs a non-principal character")
    logL, max_inc = branch_log_all(s, chi.table, [chi.index], ctx)
    logL = logL[:, 0]
    return (complex(logL[0]) if np.ndim(s) == 0 else logL), max_inc


def l_power(s, chi: DirichletCharacter, k: float, ctx: EvaluationContext = DEFAULT_CONTEXT):
    """L(s, chi)^k on the branch fixed by continuation from Re s = 3."""
    if k <= 0:
        raise ValueError("k must be positive")
    logL, _ = branch_log(s, chi, ctx)
    return np.exp(k * logL) if np.ndim(logL) else complex(np.exp(k * logL))


# -- functional equation -------------------------------------------------------

def _completed(s, chi: DirichletCharacter, ctx: EvaluationContext):
    q = chi.modulus
    a = chi.parity
    s = np.asarray(s, dtype=complex)
    half = (s + a) / 2.0
    return np.exp(half * math.log(q / math.pi)) * gamma(half) * l_value(s, chi, ctx)


def fe_residual(chi: DirichletCharacter, s, ctx: EvaluationContext = DEFAULT_CONTEXT) -> float:
    """|Lambda(s, chi) - eps(chi) Lambda(1-s, conj chi)| for primitive chi."""
    if chi.is_principal or conductor(chi) != chi.modulus:
        raise ValueError("functional equation check needs a primitive non-principal character")
    s = complex(s)
    wide = ctx.widened(min(s.real, 1 - s.real), max(s.real, 1 - s.real))
    q = chi.modulus
    a = chi.parity
    eps = gauss_sum(chi) / ((1j**a) * math.sqrt(q))
    left = _completed(s, chi, wide)
    right = eps * _completed(1.0 - s, chi.conj(), wide)
    return float(abs(left - right))


def root_number(chi: DirichletCharacter) -> complex:
    return gauss_sum(chi) / ((1j**chi.parity) * math.sqrt(chi.modulus))


def rho_factor(sigma: float, t: float, chi: DirichletCharacter) -> float:
    """|E(1-sigma+it)| / |E(sigma+it)| with E(s) = prod_{p|q2} (1 - psi(p) p^-s).

    This is the exact factor by which an imprimitive chi changes the ratio
    |L(1-sigma+it)|/|L(sigma+it)| relative to the primitive psi.
    """
    from .chargroup import factorize

    psi = induced_primitive(chi)
    q2 = chi.modulus // psi.modulus
    out = 1.0
    for p, _ in factorize(q2) if q2 > 1 else []:
        c = psi.values[p % psi.modulus]
        num = abs(1.0 - c * p ** (sigma - 1.0 - 1j * t))
        den = abs(1.0 - c * p ** (-sigma - 1j * t))
        out *= num / den
    return out


def rho_log_bound(sigma: float, chi: DirichletCharacter) -> float:
    """(2 sigma - 1) sum_{p | q2} log p / (p^(1-sigma) - 1)."""
    from .chargroup import factorize

    q2 = chi.modulus // conductor(chi)
    total = sum(math.log(p) / (p ** (1.0 - sigma) - 1.0) for p, _ in (factorize(q2) if q2 > 1 else []))
    return (2 * sigma - 1) * total


def fe_ratio(sigma: float, t: float, chi: DirichletCharacter,
             ctx: EvaluationContext = DEFAULT_CONTEXT, floor: float = 1e-10) -> float:
    """|L(1-sigma+it)| / [(1+|t|)^(sigma-1/2) q^(sigma-1/2) |L(sigma+it)|]."""
    if not 0.5 <= sigma <= 0.75:
        raise ValueError("sigma must lie in [1/2, 3/4]")
    wide = ctx.widened(1.0 - sigma, sigma)
    den = abs(l_value(complex(sigma, t), chi, wide))
    if den < floor:
        raise DegenerateError(f"|L({sigma}+{t}i)| = {den:.3g} below the floor {floor:.3g}")
    if sigma == 0.5:
        return 1.0
    num = abs(l_value(complex(1.0 - sigma, t), chi, wide))
    scale = ((1 + abs(t)) * chi.modulus) ** (sigma - 0.5)
    return num / (scale * den)


# -- growth envelope ------------------------------------------------------------

def convexity_envelope(sigma: float, t, q: int):
    """Convexity-shaped majorant of |L(sigma+it, chi)| used only to size tails.

    zeta(sigma) for sigma >= 1.1; otherwise (q(|t|+2))^mu log(q(|t|+2)) with
    mu = max(0, (1-sigma)/2) for sigma >= 0 and 1/2 - sigma below.
    """
    from scipy.special import zeta as _zeta

    t = np.abs(np.asarray(t, dtype=float))
    x = q * (t + 2.0)
    if sigma >= 1.1:
        return np.full_like(t, float(_zeta(sigma)))
    if sigma >= 1.0:
        mu = 0.0
    elif sigma >= 0.0:
        mu = (1.0 - sigma) / 2.0
    else:
        mu = 0.5 - sigma
    return 2.0 * x**mu * np.log(x)
