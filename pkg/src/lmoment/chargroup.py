"""Dirichlet characters modulo q.

The unit group (Z/qZ)* is split by CRT into prime-power factors, each carrying
one cyclic generator (two, -1 and 5, for 2^e with e >= 3).  A character is an
exponent vector over the flattened list of cyclic components; its value at a
unit a with discrete-log vector x is exp(2 pi i sum_j e_j x_j / n_j).
"""

from __future__ import annotations

import itertools
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "Component",
    "CharacterTable",
    "DirichletCharacter",
    "factorize",
    "euler_phi",
    "build_group",
    "characters",
    "eval_char",
    "conductor",
    "induced_primitive",
    "gauss_sum",
]


def factorize(n: int) -> List[Tuple[int, int]]:
    """Prime factorization of n >= 1 as a sorted list of (p, e)."""
    n = int(n)
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def euler_phi(n: int) -> int:
    result = n
    for p, _ in factorize(n):
        result = result // p * (p - 1)
    return result


def _smallest_primitive_root(p: int, e: int) -> int:
    m = p**e
    phi = (p - 1) * p ** (e - 1)
    prime_divisors = [r for r, _ in factorize(phi)]
    for g in range(2, m):
        if math.gcd(g, p) != 1:
            continue
        if all(pow(g, phi // r, m) != 1 for r in prime_divisors):
            return g
    return 1  # m == 2


@dataclass(frozen=True)
class Component:
    """One prime-power factor p^e of q with its cyclic generators.

    ``generators`` are residues mod q (lifted by CRT so they are 1 modulo the
    other prime-power factors); ``local_generators`` are the same generators
    reduced mod p^e.
    """

    prime: int
    exponent: int
    modulus: int
    local_generators: Tuple[int, ...]
    generators: Tuple[int, ...]
    orders: Tuple[int, ...]


class CharacterTable:
    """Group of Dirichlet characters mod q.

    Immutable after construction apart from an internal, lock-protected LRU
    cache of character value vectors.
    """

    def __init__(self, modulus: int, cache_size: int = 256):
        q = int(modulus)
        if q < 1:
            raise ValueError(f"modulus must be >= 1, got {modulus}")
        self.modulus = q
        self.factorization = factorize(q) if q > 1 else []
        self.phi = euler_phi(q) if q > 1 else 1
        self.components: List[Component] = []
        for p, e in self.factorization:
            m = p**e
            if p == 2:
                if e == 1:
                    continue
                local = (m - 1,) if e == 2 else (m - 1, 5)
                orders = (2,) if e == 2 else (2, 2 ** (e - 2))
            else:
                local = (_smallest_primitive_root(p, e),)
                orders = ((p - 1) * p ** (e - 1),)
            lifted = tuple(_crt_lift(g, m, q) for g in local)
            self.components.append(Component(p, e, m, local, lifted, orders))
        self.orders: Tuple[int, ...] = tuple(
            n for c in self.components for n in c.orders
        )
        self.exponent_lcm = math.lcm(*self.orders) if self.orders else 1
        self.dlog_tables = [_local_dlog(c) for c in self.components]
        self._dlog = self._build_dlog()
        self._roots = np.exp(2j * np.pi * np.arange(self.exponent_lcm) / self.exponent_lcm)
        self._cache_size = max(int(cache_size), 1)
        self._cache: "OrderedDict[Tuple[int, ...], np.ndarray]" = OrderedDict()
        self._lock = threading.Lock()
        self._matrix: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        return f"CharacterTable(q={self.modulus}, orders={self.orders})"

    # -- discrete logarithms -------------------------------------------------

    def _build_dlog(self) -> np.ndarray:
        q = self.modulus
        r = len(self.orders)
        dlog = np.full((q, r), -1, dtype=np.int64)
        residues = np.arange(q)
        units = np.gcd(residues, q) == 1
        col = 0
        for comp, table in zip(self.components, self.dlog_tables):
            local = table[residues % comp.modulus]
            width = len(comp.orders)
            dlog[:, col:col + width] = local
            col += width
        dlog[~units] = -1
        self._units = units
        return dlog

    def is_unit(self, n: int) -> bool:
        return bool(self._units[int(n) % self.modulus])

    def dlog(self, n: int) -> Optional[Tuple[int, ...]]:
        """Exponent vector of the unit n, or None when gcd(n, q) > 1."""
        a = int(n) % self.modulus
        if not self._units[a]:
            return None
        return tuple(int(x) for x in self._dlog[a])

    def element(self, exponents: Sequence[int]) -> int:
        """Re-exponentiate a dlog vector to a residue mod q."""
        a = 1
        gens = [g for c in self.components for g in c.generators]
        for g, x in zip(gens, exponents):
            a = a * pow(g, int(x), self.modulus) % self.modulus
        return a % self.modulus if self.modulus > 1 else 0

    # -- character values ----------------------------------------------------

    def _index_vector(self, exponents: Tuple[int, ...]) -> np.ndarray:
        """Per-residue index k with chi(a) = exp(2 pi i k / lcm), -1 off units."""
        L = self.exponent_lcm
        idx = np.zeros(self.modulus, dtype=np.int64)
        for j, (e, n) in enumerate(zip(exponents, self.orders)):
            if e:
                idx += self._dlog[:, j] * (e * (L // n))
        idx %= L
        idx[~self._units] = -1
        return idx

    def values(self, exponents: Tuple[int, ...]) -> np.ndarray:
        """Length-q complex vector chi(0..q-1), cached (LRU)."""
        key = tuple(int(e) for e in exponents)
        with self._lock:
            hit = self._cache.get(key)
            if hit is not None:
                self._cache.move_to_end(key)
                return hit
        idx = self._index_vector(key)
        vals = np.where(idx >= 0, self._roots[np.maximum(idx, 0)], 0.0 + 0.0j)
        vals.setflags(write=False)
        with self._lock:
            self._cache[key] = vals
            self._cache.move_to_end(key)
            while len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        return vals

    def exponent_vectors(self) -> Iterator[Tuple[int, ...]]:
        return itertools.product(*(range(n) for n in self.orders))

    def value_matrix(self) -> np.ndarray:
        """phi(q) x q matrix of all character values in enumeration order."""
        with self._lock:
            if self._matrix is not None:
                return self._matrix
        L = self.exponent_lcm
        exps = np.array(list(self.exponent_vectors()), dtype=np.int64).reshape(self.phi, len(self.orders))
        scale = np.array([L // n for n in self.orders], dtype=np.int64)
        dl = np.where(self._dlog >= 0, self._dlog, 0)
        idx = (exps * scale) @ dl.T % L if self.orders else np.zeros((1, self.modulus), dtype=np.int64)
        mat = self._roots[idx]
        mat[:, ~self._units] = 0.0
        mat.setflags(write=False)
        with self._lock:
            self._matrix = mat
        return mat


def _crt_lift(g: int, m: int, q: int) -> int:
    """Residue mod q congruent to g mod m and to 1 mod q/m."""
    rest = q // m
    if rest == 1:
        return g % q
    # x = g + m*t with x = 1 mod rest
    t = ((1 - g) * pow(m, -1, rest)) % rest
    return (g + m * t) % q


def _local_dlog(comp: Component) -> np.ndarray:
    """Map residues mod p^e to exponent vectors (-1 for non-units)."""
    m = comp.modulus
    width = len(comp.orders)
    table = np.full((m, width), -1, dtype=np.int64)
    if width == 1:
        g = comp.local_generators[0]
        x = 1
        for j in range(comp.orders[0]):
            table[x, 0] = j
            x = x * g % m
    else:
        # 2^e, e >= 3: a = (-1)^x0 * 5^x1
        x = 1
        for j in range(comp.orders[1]):
            table[x] = (0, j)
            table[(m - x) % m] = (1, j)
            x = x * 5 % m
    return table


@dataclass(frozen=True)
class DirichletCharacter:
    """A character identified by its exponent vector over ``table.orders``."""

    table: CharacterTable = field(repr=False, compare=False)
    exponents: Tuple[int, ...]
    index: int = -1

    def __post_init__(self):
        reduced = tuple(int(e) % n for e, n in zip(self.exponents, self.table.orders))
        if len(reduced) != len(self.table.orders):
            raise ValueError("exponent vector length does not match the group")
        object.__setattr__(self, "exponents", reduced)

    @property
    def modulus(self) -> int:
        return self.table.modulus

    @property
    def values(self) -> np.ndarray:
        return self.table.values(self.exponents)

    @property
    def is_principal(self) -> bool:
        return all(e == 0 for e in self.exponents)

    @property
    def parity(self) -> int:
        """0 for even characters, 1 for odd ones."""
        if self.modulus <= 2:
            return 0
        return 0 if self.values[self.modulus - 1].real > 0 else 1

    def conj(self) -> "DirichletCharacter":
        neg = tuple((-e) % n for e, n in zip(self.exponents, self.table.orders))
        return DirichletCharacter(self.table, neg, _enumeration_index(self.table, neg))

    def __call__(self, n: int) -> complex:
        return eval_char(self, n)


def _enumeration_index(table: CharacterTable, exponents: Tuple[int, ...]) -> int:
    idx = 0
    for e, n in zip(exponents, table.orders):
        idx = idx * n + e
    return idx


@lru_cache(maxsize=64)
def build_group(q: int, cache_size: int = 256) -> CharacterTable:
    """Construct (and memoize) the character table mod q."""
    return CharacterTable(q, cache_size=cache_size)


def characters(table: CharacterTable) -> List[DirichletCharacter]:
    """All phi(q) characters, principal first, lexicographic in exponents."""
    return [
        DirichletCharacter(table, e, i) for i, e in enumerate(table.exponent_vectors())
    ]


def eval_char(chi: DirichletCharacter, n: int) -> complex:
    return complex(chi.values[int(n) % chi.modulus])


def conductor(chi: DirichletCharacter) -> int:
    """Smallest q1 | q such that chi is induced from a character mod q1."""
    f = 1
    pos = 0
    for comp in chi.table.components:
        xs = chi.exponents[pos:pos + len(comp.orders)]
        pos += len(comp.orders)
        p, e = comp.prime, comp.exponent
        if p != 2:
            x = xs[0]
            if x == 0:
                continue
            # trivial on {a = 1 mod p^f} iff p^(e-f) | x
            ff = 1
            while x % p ** (e - ff) != 0:
                ff += 1
            f *= p**ff
        elif e == 2:
            if xs[0]:
                f *= 4
        else:
            x0, x1 = xs
            if x1 == 0:
                if x0:
                    f *= 4
                continue
            # units = 1 mod 2^f (f >= 2) are generated by 5^(2^(f-2))
            ff = 3
            while x1 % 2 ** (e - ff) != 0:
                ff += 1
            f *= 2**ff
    return f


def induced_primitive(chi: DirichletCharacter) -> DirichletCharacter:
    """The primitive character mod conductor(chi) that induces chi."""
    q = chi.modulus
    q1 = conductor(chi)
    if q1 == q:
        return chi
    small = build_group(q1)
    L = chi.table.exponent_lcm
    big_idx = chi.table._index_vector(chi.exponents)
    exps = []
    for comp in small.components:
        for g, n in zip(comp.generators, comp.orders):
            # lift g (mod q1) to a unit mod q
            lift = g
            while math.gcd(lift, q) != 1:
                lift += q1
            k = Fraction(int(big_idx[lift % q]), L)
            y = k * n
            if y.denominator != 1:
                raise ArithmeticError("character does not factor through its conductor")
            exps.append(int(y) % n)
    exps = tuple(exps)
    return DirichletCharacter(small, exps, _enumeration_index(small, exps))


def gauss_sum(chi: DirichletCharacter) -> complex:
    """tau(chi) = sum_{a=1}^{q} chi(a) e(a/q)."""
    q = chi.modulus
    a = np.arange(q)
    return complex(np.sum(chi.values * np.exp(2j * np.pi * a / q)))
