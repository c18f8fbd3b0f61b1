"""Fiducial/germ experiment design for single-qubit GST."""
from __future__ import annotations

from dataclasses import dataclass

from .circuits import Circuit

MAX_GERM_LENGTH = 16

FIDUCIALS = (
    (),
    ("Gx",),
    ("Gy",),
    ("Gx", "Gx"),
    ("Gx", "Gx", "Gx"),
    ("Gy", "Gy", "Gy"),
)

GERMS = (
    ("Gx",),
    ("Gy",),
    ("Gi",),
    ("Gx", "Gy"),
    ("Gx", "Gx", "Gy"),
    ("Gx", "Gi"),
    ("Gy", "Gi"),
    ("Gx", "Gy", "Gi"),
)


@dataclass(frozen=True)
class GstDesign:
    fiducials: tuple
    germs: tuple
    lengths: tuple
    sequences: tuple

    def __post_init__(self):
        for c in self.sequences:
            if c.germ_length > MAX_GERM_LENGTH:
                raise ValueError(f"germ section of {c} exceeds {MAX_GERM_LENGTH} gates")

    def __len__(self):
        return len(self.sequences)

    def powers(self, germ) -> tuple:
        """Repetition counts used for ``germ``, in increasing order."""
        return tuple(sorted({L // len(germ) for L in self.lengths if L // len(germ) > 0}))


def make_design(max_power: int = 4, fiducials=FIDUCIALS, germs=GERMS) -> GstDesign:
    """Standard design with germ-section lengths ``L = 1, 2, ..., 2**max_power``.

    Each germ ``g`` is repeated ``L // len(g)`` times, so the longest germ
    section never exceeds ``L``. Fiducial pairs without a germ are included
    (they seed linear inversion) and sequences with identical gate strings
    are kept once, first occurrence wins.
    """
    if max_power < 0:
        raise ValueError("max_power must be >= 0")
    lengths = tuple(2 ** k for k in range(max_power + 1))
    if lengths[-1] > MAX_GERM_LENGTH:
        raise ValueError(f"germ sections are limited to {MAX_GERM_LENGTH} gates")
    seen = set()
    sequences = []

    def add(c):
        if c.gates not in seen:
            seen.add(c.gates)
            sequences.append(c)

    for prep in fiducials:
        for meas in fiducials:
            add(Circuit(prep, (), 0, meas))
    for L in lengths:
        for germ in germs:
            p = L // len(germ)
            if p == 0:
                continue
            for prep in fiducials:
                for meas in fiducials:
                    add(Circuit(prep, germ, p, meas))
    return GstDesign(tuple(fiducials), tuple(germs), lengths, tuple(sequences))
