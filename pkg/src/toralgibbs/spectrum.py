"""Unmarked orbit spectra: the multiset of ``(S_n phi(x), n)`` over periodic points."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potential import Potential, periodic_birkhoff_sums
from .torus import ToralAutomorphism

MAX_SPECTRUM_PERIOD = 20


@dataclass
class OrbitSpectrum:
    """Per period ``n``: the sorted Birkhoff sums over all fixed points of ``L^n``."""

    max_period: int
    entries: dict

    def values(self, n: int) -> np.ndarray:
        return self.entries[n]

    def count(self, n: int) -> int:
        return len(self.entries[n])

    def to_json(self) -> dict:
        return {str(n): self.entries[n].tolist() for n in sorted(self.entries)}

    @classmethod
    def from_json(cls, data: dict) -> "OrbitSpectrum":
        entries = {int(k): np.sort(np.asarray(v, dtype=float)) for k, v in data.items()}
        return cls(max(entries), entries)


@dataclass
class SpectrumComparison:
    """Outcome of :func:`compare_spectra`; ``witness_period`` is ``None`` when equal."""

    equal: bool
    witness_period: int | None = None
    values_1: np.ndarray | None = None
    values_2: np.ndarray | None = None
    gap: float = 0.0

    def to_json(self) -> dict:
        return {
            "equal": self.equal,
            "period": self.witness_period,
            "values_1": None if self.values_1 is None else self.values_1.tolist(),
            "values_2": None if self.values_2 is None else self.values_2.tolist(),
            "gap": self.gap,
        }


def unmarked_spectrum(phi: Potential, L: ToralAutomorphism, N: int) -> OrbitSpectrum:
    """Spectrum up to period ``N`` from exact periodic-point enumeration."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > MAX_SPECTRUM_PERIOD:
        raise ValueError(f"N = {N} exceeds the enumeration guard {MAX_SPECTRUM_PERIOD}")
    entries = {}
    for n in range(1, N + 1):
        _, _, S = periodic_birkhoff_sums(phi, L, n)
        entries[n] = np.sort(S)
    return OrbitSpectrum(N, entries)


def compare_spectra(s1: OrbitSpectrum, s2: OrbitSpectrum, tol: float = 1e-9) -> SpectrumComparison:
    """Multiset comparison period by period.

    Two multisets of reals of equal size are matched in sorted order (the
    optimal matching on the line); the gap is the largest matched difference.
    """
    if s1.max_period != s2.max_period:
        raise ValueError("spectra must share max_period")
    for n in range(1, s1.max_period + 1):
        a, b = s1.entries[n], s2.entries[n]
        if len(a) != len(b):
            return SpectrumComparison(False, n, a, b, float("inf"))
        gap = float(np.max(np.abs(a - b))) if len(a) else 0.0
        if gap > tol:
            return SpectrumComparison(False, n, a, b, gap)
    return SpectrumComparison(True)
