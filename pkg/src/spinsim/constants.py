"""Physical constants and closed-form spin-resonance relations.

Every frequency exposed here is cyclic (Hz). Angular forms only appear
inside the dynamics kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "PhysicalConstants",
    "CODATA2018",
    "SpinSystem",
    "DriveSpec",
    "zeeman_splitting",
    "min_splitting_for_temperature",
    "rotation_duration",
    "rabi_from_field",
    "field_from_rabi",
    "gyromagnetic_ratio",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values in SI units."""

    h: float = 6.62607015e-34  # J s, exact
    k_B: float = 1.380649e-23  # J/K, exact
    e_charge: float = 1.602176634e-19  # C, exact
    mu_B: float = 9.2740100783e-24  # J/T
    hbar: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "hbar", self.h / (2.0 * math.pi))

    @property
    def mu_B_eV(self) -> float:
        """Bohr magneton in eV/T."""
        return self.mu_B / self.e_charge

    @property
    def k_B_eV(self) -> float:
        """Boltzmann constant in eV/K."""
        return self.k_B / self.e_charge

    def as_dict(self) -> dict[str, float]:
        return {
            "h_J_s": self.h,
            "hbar_J_s": self.hbar,
            "k_B_J_per_K": self.k_B,
            "k_B_eV_per_K": self.k_B_eV,
            "mu_B_J_per_T": self.mu_B,
            "mu_B_eV_per_T": self.mu_B_eV,
            "e_charge_C": self.e_charge,
        }


CODATA2018 = PhysicalConstants()
_C = CODATA2018


def gyromagnetic_ratio(g: float) -> float:
    """Cyclic gyromagnetic ratio ``g * mu_B / h`` in Hz/T."""
    return g * _C.mu_B / _C.h


def zeeman_splitting(g: float, B0: float) -> tuple[float, float]:
    """Return ``(E_z [eV], f_L [Hz])`` for a spin in a static field ``B0``.

    Raises:
        ValueError: if ``B0 < 0`` or ``g <= 0``.
    """
    if not g > 0:
        raise ValueError(f"g-factor must be positive, got {g}")
    if not B0 >= 0:
        raise ValueError(f"static field must be non-negative, got {B0} T")
    E_J = g * _C.mu_B * B0
    return E_J / _C.e_charge, E_J / _C.h


def min_splitting_for_temperature(T: float) -> tuple[float, float]:
    """Smallest useful qubit splitting ``k_B T``, as ``(eV, Hz)``."""
    if not T >= 0:
        raise ValueError(f"temperature must be non-negative, got {T} K")
    E_J = _C.k_B * T
    return E_J / _C.e_charge, E_J / _C.h


def rotation_duration(angle: float, f_R: float) -> float:
    """Time needed to rotate by ``angle`` radians at Rabi frequency ``f_R``."""
    if not f_R > 0:
        raise ValueError(f"Rabi frequency must be positive, got {f_R} Hz")
    if angle < 0:
        raise ValueError(f"rotation angle must be non-negative, got {angle}")
    return angle / (2.0 * math.pi * f_R)


def rabi_from_field(g: float, B1: float) -> float:
    """Rabi frequency of a linearly polarised drive with amplitude ``B1``.

    Only the co-rotating half of the linear drive contributes, hence the
    factor 2.
    """
    if B1 < 0:
        raise ValueError(f"drive amplitude must be non-negative, got {B1} T")
    return gyromagnetic_ratio(g) * B1 / 2.0


def field_from_rabi(g: float, f_R: float) -> float:
    """Inverse of :func:`rabi_from_field`."""
    if f_R < 0:
        raise ValueError(f"Rabi frequency must be non-negative, got {f_R} Hz")
    return 2.0 * f_R / gyromagnetic_ratio(g)


@dataclass(frozen=True)
class SpinSystem:
    """A single spin in a static field along z."""

    g_factor: float = 2.0
    B0: float = 2.143

    def __post_init__(self) -> None:
        zeeman_splitting(self.g_factor, self.B0)

    @property
    def E_z(self) -> float:
        return zeeman_splitting(self.g_factor, self.B0)[0]

    @property
    def f_L(self) -> float:
        return zeeman_splitting(self.g_factor, self.B0)[1]

    @classmethod
    def from_larmor(cls, f_L: float, g_factor: float = 2.0) -> SpinSystem:
        return cls(g_factor=g_factor, B0=f_L / gyromagnetic_ratio(g_factor))


@dataclass(frozen=True)
class DriveSpec:
    """Resonant drive: cyclic Rabi frequency, linear amplitude and phase."""

    f_R: float
    B1: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.f_R < 0 or self.B1 < 0:
            raise ValueError("Rabi frequency and drive amplitude must be non-negative")

    @classmethod
    def from_field(cls, B1: float, g: float = 2.0, phase: float = 0.0) -> DriveSpec:
        return cls(f_R=rabi_from_field(g, B1), B1=B1, phase=phase)

    @classmethod
    def from_rabi(cls, f_R: float, g: float = 2.0, phase: float = 0.0) -> DriveSpec:
        return cls(f_R=f_R, B1=field_from_rabi(g, f_R), phase=phase)
