"""Measurable regions of the mark space.

Two kinds are supported, matching the two measure kinds: unions of half-open
intervals (lo, hi] for density measures on the real line, and index sets for
finite discrete measures.  Set algebra stays within one kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _normalize(intervals) -> tuple[tuple[float, float], ...]:
    ivs = sorted((float(a), float(b)) for a, b in intervals if b > a)
    merged: list[list[float]] = []
    for a, b in ivs:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


@dataclass(frozen=True)
class Region:
    """Union of half-open intervals (lo, hi] or a finite set of atom indices."""

    kind: str  # "intervals" | "atoms"
    intervals: tuple[tuple[float, float], ...] = ()
    atoms: frozenset[int] = field(default_factory=frozenset)

    # -- constructors -------------------------------------------------
    @staticmethod
    def from_intervals(*intervals) -> "Region":
        return Region("intervals", intervals=_normalize(intervals))

    @staticmethod
    def interval(lo: float, hi: float) -> "Region":
        return Region.from_intervals((lo, hi))

    @staticmethod
    def from_atoms(indices) -> "Region":
        return Region("atoms", atoms=frozenset(int(i) for i in indices))

    @staticmethod
    def empty(kind: str = "intervals") -> "Region":
        return Region(kind)

    # -- predicates ----------------------------------------------------
    def is_empty(self) -> bool:
        return not self.intervals if self.kind == "intervals" else not self.atoms

    def contains(self, z) -> np.ndarray:
        """Pointwise membership for marks z (intervals kind only)."""
        if self.kind != "intervals":
            raise ValueError("contains() applies to interval regions only")
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (z > a) & (z <= b)
        return out

    def length(self) -> float:
        if self.kind != "intervals":
            raise ValueError("length() applies to interval regions only")
        return sum(b - a for a, b in self.intervals)

    # -- set algebra ----------------------------------------------------
    def _check(self, other: "Region"):
        if self.kind != other.kind:
            raise ValueError(f"region kinds differ: {self.kind} vs {other.kind}")

    def union(self, other: "Region") -> "Region":
        self._check(other)
        if self.kind == "atoms":
            return Region("atoms", atoms=self.atoms | other.atoms)
        return Region.from_intervals(*self.intervals, *other.intervals)

    def intersect(self, other: "Region") -> "Region":
        self._check(other)
        if self.kind == "atoms":
            return Region("atoms", atoms=self.atoms & other.atoms)
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if hi > lo:
                    out.append((lo, hi))
        return Region.from_intervals(*out)

    def difference(self, other: "Region") -> "Region":
        self._check(other)
        if self.kind == "atoms":
            return Region("atoms", atoms=self.atoms - other.atoms)
        pieces = list(self.intervals)
        for c, d in other.intervals:
            nxt = []
            for a, b in pieces:
                if d <= a or c >= b:
                    nxt.append((a, b))
                    continue
                if a < c:
                    nxt.append((a, min(b, c)))
                if d < b:
                    nxt.append((max(a, d), b))
            pieces = nxt
        return Region.from_intervals(*pieces)

    def complement(self, universe: "Region") -> "Region":
        return universe.difference(self)

    def is_subset(self, other: "Region") -> bool:
        return self.difference(other).is_empty()

    def describe(self):
        if self.kind == "atoms":
            return {"kind": "atoms", "indices": sorted(self.atoms)}
        return {"kind": "intervals", "intervals": [list(iv) for iv in self.intervals]}
