"""
Two-Mode State Module

Sector bookkeeping and immutable state vectors of the trapped levels 1 and 2,
either in the number basis (index n1) or in the symmetric/antisymmetric mode
basis b+- = (b1 +- b2)/sqrt(2) (index n+), where cos(phi) is diagonal.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

import config

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SectorSpec:
    """Fixed-atom-number sector of levels 1 and 2.

    A sector left after outcoupling carries the mean level occupations of the
    condensate it came from; these set the cos(phi) prefactor, so the label
    of a cos(phi) eigenstate does not jump when a detection happens to take
    the integer split away from balance.

    Attributes:
        n1: Atoms in level 1.
        n2: Atoms in level 2.
        mean_occupations: Mean (N1, N2) behind the cos(phi) prefactor; None
            means the integer occupations themselves.
    """

    n1: int
    n2: int
    mean_occupations: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        for name in ("n1", "n2"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value}")
            object.__setattr__(self, name, int(value))
        if self.mean_occupations is None:
            if self.n_tot < 1:
                raise ValueError("sector must contain at least one atom")
            if self.n1 > 0 and abs(self.n1 - self.n2) > config.SECTOR_ASYMMETRY_WARN_RATIO * self.n1:
                logger.warning(f"Sector ({self.n1}, {self.n2}) is far from balanced; |N1 - N2| << N1 assumed")
            return
        o1, o2 = (float(v) for v in self.mean_occupations)
        if o1 < 0.0 or o2 < 0.0:
            raise ValueError(f"mean occupations must be non-negative, got ({o1}, {o2})")
        if abs(o1 + o2 - self.n_tot) > 1e-9 * max(1, self.n_tot):
            raise ValueError(f"mean occupations ({o1}, {o2}) do not add up to {self.n_tot}")
        object.__setattr__(self, "mean_occupations", (o1, o2))

    @property
    def n_tot(self) -> int:
        return self.n1 + self.n2

    @property
    def occupations(self) -> Tuple[float, float]:
        """Occupations entering the cos(phi) prefactor."""
        if self.mean_occupations is None:
            return float(self.n1), float(self.n2)
        return self.mean_occupations

    @property
    def cos_phi_scale(self) -> float:
        """Prefactor 2 sqrt(N1 N2) of the phase-cosine operator."""
        o1, o2 = self.occupations
        if o1 <= 0.0 or o2 <= 0.0:
            raise ValueError(f"cos(phi) is undefined for sector ({self.n1}, {self.n2})")
        return 2.0 * math.sqrt(o1 * o2)

    @property
    def is_vacuum(self) -> bool:
        return self.n_tot == 0

    @property
    def is_symmetric(self) -> bool:
        return self.n1 == self.n2

    def depleted(self, removed: int, fraction1: Optional[float] = None) -> "SectorSpec":
        """Sector left after outcoupling `removed` atoms.

        Args:
            removed: Number of atoms taken out of levels 1 and 2; removing all
                of them leaves the vacuum.
            fraction1: Share of the removed atoms taken from level 1. None
                removes atoms in proportion to the current occupations, as
                detections through the symmetric mode do on average. The
                integer split is rounded half up.

        Raises:
            ValueError: If more atoms are removed than the sector holds.
        """
        if removed < 0 or removed > self.n_tot:
            raise ValueError(f"cannot remove {removed} atoms from a sector of {self.n_tot}")
        o1, o2 = self.occupations
        if fraction1 is None:
            share = o1 / self.n_tot
            left = self.n_tot - removed
            m1, m2 = o1 * left / self.n_tot, o2 * left / self.n_tot
        else:
            share = fraction1
            m1, m2 = o1 - removed * fraction1, o2 - removed * (1.0 - fraction1)
            if m1 < 0.0:
                m1, m2 = 0.0, m1 + m2
            elif m2 < 0.0:
                m1, m2 = m1 + m2, 0.0
        from1 = min(int(math.floor(removed * share + 0.5)), self.n1)
        from2 = removed - from1
        if from2 > self.n2:
            from1, from2 = removed - self.n2, self.n2
        return SectorSpec(self.n1 - from1, self.n2 - from2, (m1, m2))


def _checked_amplitudes(amps, n_tot: int, label: str) -> np.ndarray:
    array = np.array(amps, dtype=np.complex128).reshape(-1)
    if array.shape[0] != n_tot + 1:
        raise ValueError(f"{label} needs {n_tot + 1} amplitudes, got {array.shape[0]}")
    norm = float(np.sum(np.abs(array) ** 2))
    if abs(norm - 1.0) > config.STATE_NORM_TOL:
        raise ValueError(f"{label} is not normalized (sum |a|^2 = {norm:.12g})")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PlusMinusState:
    """State of levels 1, 2 over the symmetric-mode occupation n+ = 0..N_tot."""

    sector: SectorSpec
    amps: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "amps", _checked_amplitudes(self.amps, self.sector.n_tot, "PlusMinusState"))

    @classmethod
    def from_unnormalized(cls, sector: SectorSpec, amps) -> "PlusMinusState":
        array = np.asarray(amps, dtype=np.complex128)
        return cls(sector, array / np.linalg.norm(array))

    @classmethod
    def eigenstate(cls, sector: SectorSpec, n_plus: int) -> "PlusMinusState":
        """cos(phi) eigenstate with n_plus atoms in the symmetric mode."""
        amps = np.zeros(sector.n_tot + 1, dtype=np.complex128)
        amps[n_plus] = 1.0
        return cls(sector, amps)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    @property
    def n_plus(self) -> np.ndarray:
        return np.arange(self.sector.n_tot + 1)


@dataclass(frozen=True, eq=False)
class NumberBasisState:
    """State of levels 1, 2 over the level-1 occupation n1 = 0..N_tot."""

    sector: SectorSpec
    amps: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "amps", _checked_amplitudes(self.amps, self.sector.n_tot, "NumberBasisState"))

    @classmethod
    def from_unnormalized(cls, sector: SectorSpec, amps) -> "NumberBasisState":
        array = np.asarray(amps, dtype=np.complex128)
        return cls(sector, array / np.linalg.norm(array))

    @classmethod
    def fock(cls, sector: SectorSpec) -> "NumberBasisState":
        """Product Fock state |N1, N2> of the sector."""
        amps = np.zeros(sector.n_tot + 1, dtype=np.complex128)
        amps[sector.n1] = 1.0
        return cls(sector, amps)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    @property
    def number_difference(self) -> np.ndarray:
        """Delta N = n1 - n2 for every index."""
        return number_difference_values(self.sector.n_tot)


def number_difference_values(n_tot: int) -> np.ndarray:
    """Return the grid n1 - n2 = 2 n1 - N_tot, n1 = 0..N_tot."""
    return 2 * np.arange(n_tot + 1) - n_tot
