"""On-disk cache of L-values, one text file per modulus.

File layout::

    # lmoment-lcache v1 q=<q>
    <fingerprint> <index> <s.real hex> <s.imag hex> <L.real hex> <L.imag hex> <created_at>

Values are stored with ``float.hex`` so a hit is bit-identical to what was
written.  Lines whose fingerprint differs from the current evaluation
context are ignored.  A file that fails to parse is treated as absent and
is replaced on the next write.  Writes go to a temporary file that is then
renamed over the target.
"""

from __future__ import annotations

import logging
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .lfun import EvaluationContext

logger = logging.getLogger(__name__)

__all__ = ["CacheEntry", "LValueCache"]

MAGIC = "# lmoment-lcache v1"

Key = Tuple[int, int, complex, str]


@dataclass(frozen=True)
class CacheEntry:
    q: int
    index: int
    s: complex
    fingerprint: str
    value: complex
    created_at: float

    @property
    def key(self) -> Key:
        return (self.q, self.index, self.s, self.fingerprint)

    def to_line(self) -> str:
        return " ".join([
            self.fingerprint,
            str(self.index),
            float(self.s.real).hex(),
            float(self.s.imag).hex(),
            float(self.value.real).hex(),
            float(self.value.imag).hex(),
            repr(self.created_at),
        ])

    @classmethod
    def from_line(cls, q: int, line: str) -> "CacheEntry":
        fp, idx, sr, si, vr, vi, ts = line.split()
        return cls(q, int(idx), complex(float.fromhex(sr), float.fromhex(si)), fp,
                   complex(float.fromhex(vr), float.fromhex(vi)), float(ts))


class LValueCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path(self, q: int) -> Path:
        return self.directory / f"L_{q}.txt"

    def _read(self, q: int) -> Dict[Key, CacheEntry]:
        path = self.path(q)
        if not path.exists():
            return {}
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
            if not lines or lines[0].strip() != f"{MAGIC} q={q}":
                raise ValueError("bad header")
            entries = {}
            for line in lines[1:]:
                if line.strip():
                    e = CacheEntry.from_line(q, line)
                    entries[e.key] = e
            return entries
        except (OSError, ValueError, UnicodeDecodeError) as exc:
            logger.warning("ignoring corrupted cache file %s (%s)", path, exc)
            return {}

    def get(self, q: int, index: int, s: complex, ctx: EvaluationContext) -> Optional[CacheEntry]:
        return self._read(q).get((q, index, complex(s), ctx.fingerprint()))

    def put_many(self, entries) -> None:
        by_q: Dict[int, list] = {}
        for e in entries:
            by_q.setdefault(e.q, []).append(e)
        for q, new in by_q.items():
            merged = self._read(q)
            for e in new:
                merged[e.key] = e
            body = "\n".join([f"{MAGIC} q={q}"] + [e.to_line() for e in merged.values()]) + "\n"
            fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=f".L_{q}.", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(body)
                os.replace(tmp, self.path(q))
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise

    # vector interface used by analysis.central_values
    def lookup(self, q: int, s: complex, ctx: EvaluationContext) -> Optional[np.ndarray]:
        """Values for every non-principal character at s, or None on any miss."""
        from .chargroup import euler_phi

        entries = self._read(q)
        fp = ctx.fingerprint()
        out = []
        for idx in range(1, euler_phi(q)):
            e = entries.get((q, idx, complex(s), fp))
            if e is None:
                return None
            out.append(e.value)
        return np.array(out, dtype=complex)

    def store(self, q: int, s: complex, ctx: EvaluationContext, values: np.ndarray) -> None:
        fp = ctx.fingerprint()
        now = time.time()
        self.put_many(CacheEntry(q, i + 1, complex(s), fp, complex(v), now) for i, v in enumerate(values))
