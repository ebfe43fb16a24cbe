"""Fractional divisor functions and related arithmetic.

d_k is the multiplicative function with Euler factor
d_k(p^e) = k (k+1) ... (k+e-1) / e!, i.e. the coefficients of (1-x)^(-k),
so that sum d_k(n) n^-s = zeta(s)^k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple, Union

import numpy as np

from .chargroup import factorize

__all__ = [
    "CoefficientSeries",
    "TailCoefficients",
    "dk_local",
    "dk_coeff",
    "dk_table",
    "dirichlet_convolve",
    "tail_coeffs",
    "imprimitivity_f",
    "imprimitivity_f_table",
    "prime_log_sum_threshold",
    "primes_up_to",
    "smallest_prime_factor",
]

Number = Union[float, Fraction]


def primes_up_to(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve)


def smallest_prime_factor(n: int) -> np.ndarray:
    spf = np.arange(n + 1, dtype=np.int64)
    for p in range(2, math.isqrt(n) + 1):
        if spf[p] == p:
            block = spf[p * p::p]
            np.minimum(block, p, out=block)
    return spf


def dk_local(k: Number, e: int) -> Number:
    """d_k(p^e) = prod_{j<e} (k+j)/(j+1)."""
    c = Fraction(1) if isinstance(k, Fraction) else 1.0
    for j in range(e):
        c = c * (k + j) / (j + 1)
    return c


def dk_coeff(k: Number, n: int) -> Number:
    if n < 1:
        raise ValueError("n must be positive")
    out = Fraction(1) if isinstance(k, Fraction) else 1.0
    if n == 1:
        return out
    for _, e in factorize(n):
        out = out * dk_local(k, e)
    return out


@dataclass(frozen=True)
class CoefficientSeries:
    """Coefficients c(1..N) stored with a dummy slot at index 0.

    ``values[n]`` is c(n); ``values[0]`` is always 0.  ``order`` is the k of
    d_k (or the sum of orders for a convolution of d_k tables).
    """

    order: Number
    cutoff: int
    values: np.ndarray

    def __getitem__(self, n):
        return self.values[n]

    @property
    def exact(self) -> bool:
        return self.values.dtype == object


def dk_table(k: Number, N: int, exact: bool = False) -> CoefficientSeries:
    """Sieve d_k(1..N).

    Multiples of p^e are scaled by d_k(p^e)/d_k(p^(e-1)) = (k+e-1)/e, which
    builds the full Euler product in O(N log log N).  With ``exact=True`` the
    order is converted to a Fraction and the values are exact rationals.
    """
    N = int(N)
    if N < 1:
        raise ValueError("cutoff must be positive")
    if exact:
        kk = k if isinstance(k, Fraction) else Fraction(str(k))
        vals = np.empty(N + 1, dtype=object)
        vals[:] = [Fraction(1)] * (N + 1)
    else:
        kk = float(k)
        vals = np.ones(N + 1)
    vals[0] = 0
    for p in primes_up_to(N):
        p = int(p)
        pe, e = p, 1
        while pe <= N:
            vals[pe::pe] = vals[pe::pe] * ((kk + e - 1) / e)
            pe *= p
            e += 1
    if not exact:
        vals.setflags(write=False)
    return CoefficientSeries(kk, N, vals)


def dirichlet_convolve(a: CoefficientSeries, b: CoefficientSeries) -> CoefficientSeries:
    """(a*b)(n) = sum_{de=n} a(d) b(e) for n <= N."""
    if a.cutoff != b.cutoff:
        raise ValueError(f"cutoff mismatch: {a.cutoff} != {b.cutoff}")
    N = a.cutoff
    exact = a.exact or b.exact
    if exact:
        out = np.empty(N + 1, dtype=object)
        out[:] = [Fraction(0)] * (N + 1)
    else:
        out = np.zeros(N + 1)
    av, bv = a.values, b.values
    for d in range(1, N + 1):
        ad = av[d]
        if ad == 0:
            continue
        m = N // d
        out[d::d][:m] += ad * bv[1:m + 1]
    return CoefficientSeries(a.order + b.order, N, out)


def _truncated(series: CoefficientSeries, support: int) -> CoefficientSeries:
    vals = np.array(series.values, copy=True)
    vals[support + 1:] = 0
    return CoefficientSeries(series.order, series.cutoff, vals)


@dataclass(frozen=True)
class TailCoefficients:
    """a_k(n) for q < n <= M, with k = 1/v.

    ``values[i]`` is a_k(q + 1 + i).  Indices n <= q are zero by construction.
    """

    v: int
    modulus_cutoff: int
    upper: int
    values: np.ndarray

    @property
    def order(self) -> float:
        return 1.0 / self.v

    def at(self, n: int) -> float:
        if n < 1 or n > self.upper:
            raise IndexError(n)
        if n <= self.modulus_cutoff:
            return 0.0
        return float(self.values[n - self.modulus_cutoff - 1])

    def full(self) -> np.ndarray:
        """Length M+1 array indexed by n, zero at n <= q."""
        out = np.zeros(self.upper + 1)
        out[self.modulus_cutoff + 1:] = self.values
        return out

    def growth(self, eps: float = 0.1) -> float:
        """max |a_k(n)| / n^eps over the table."""
        n = np.arange(self.modulus_cutoff + 1, self.upper + 1)
        return float(np.max(np.abs(self.values) / n**eps)) if n.size else 0.0


def tail_coeffs(v: int, q: int, M: int, check_tol: float = 1e-12) -> TailCoefficients:
    """Coefficients of L(s) - S(s)^v where S keeps the d_{1/v}(n), n <= q.

    a(n) = 1 - (v-fold convolution of d_{1/v} restricted to n_i <= q)(n).
    """
    v, q, M = int(v), int(q), int(M)
    if v < 1:
        raise ValueError("v must be a positive integer")
    if M <= q:
        raise ValueError("need M > q")
    base = _truncated(dk_table(1.0 / v, M), q)
    power = base
    for _ in range(v - 1):
        power = dirichlet_convolve(power, base)
    a = 1.0 - power.values
    a[0] = 0.0
    head = np.abs(a[1:q + 1])
    if head.size and head.max() > check_tol:
        bad = int(np.argmax(head)) + 1
        raise ArithmeticError(f"a_k({bad}) = {a[bad]!r} is not zero for n <= q")
    return TailCoefficients(v, q, M, np.array(a[q + 1:], copy=True))


def _local_f(p: int, e: int) -> float:
    # sum_{j=1}^{e} phi(p^j) = p^e - 1
    return (1.0 + p**-0.5) ** 4 + p**e - 1


def imprimitivity_f(q: int) -> float:
    """f(q) = prod_{p^e || q} [(1+p^-1/2)^4 + phi(p) + ... + phi(p^e)]."""
    if q < 1:
        raise ValueError("q must be positive")
    out = 1.0
    for p, e in (factorize(q) if q > 1 else []):
        out *= _local_f(p, e)
    return out


def imprimitivity_f_table(N: int) -> np.ndarray:
    """f(q)/q for q = 0..N (index 0 unused), by sieve."""
    ratio = np.ones(N + 1)
    ratio[0] = 0.0
    for p in primes_up_to(N):
        p = int(p)
        pe, e = p, 1
        prev = 1.0
        while pe <= N:
            cur = _local_f(p, e) / pe
            ratio[pe::pe] *= cur / prev
            prev = cur
            pe *= p
            e += 1
    return ratio


def prime_log_sum_threshold(limit: int) -> Tuple[int, np.ndarray, np.ndarray]:
    """Scan g(m) = sum_{p|m} log p/(p^(1/4)-1) - (1/2) log m for m <= limit.

    Returns (largest m with g(m) > 0, sorted array of all such m, g values
    indexed by m).  Threshold is 0 when there is no violation.
    """
    if limit < 2:
        raise ValueError("limit must be at least 2")
    g = np.zeros(limit + 1)
    for p in primes_up_to(limit):
        p = int(p)
        g[p::p] += math.log(p) / (p**0.25 - 1.0)
    m = np.arange(1, limit + 1)
    g[1:] -= 0.5 * np.log(m)
    bad = np.flatnonzero(g[1:] > 0) + 1
    return (int(bad[-1]) if bad.size else 0), bad, g
