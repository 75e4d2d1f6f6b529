"""Two-level spin dynamics: rotating-frame propagators, lab-frame stepping
and gate fidelity metrics.

Conventions: ``H/hbar = pi * (f_R cos(phi) sx + f_R sin(phi) sy + df sz)``
in the rotating frame, ``H/hbar = pi * f_L sz + 2 pi (gamma B_x(t) / 2) sx``
in the lab frame, with ``gamma = g mu_B / h``. Basis order is (up, down),
so ``sz |up> = +|up>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .constants import SpinSystem, field_from_rabi, gyromagnetic_ratio
from .waveform import Waveform

__all__ = [
    "SX", "SY", "SZ", "I2", "UP", "DOWN",
    "SpinPropagator",
    "RotatingFramePulse",
    "FidelityReport",
    "rotation",
    "propagator_rwa",
    "evolve_labframe",
    "labframe_interval",
    "to_rotating_frame",
    "infidelity",
    "rabi_lineshape",
    "rwa_gate_infidelity",
    "rwa_phase_scan",
    "MIN_SAMPLES_PER_CYCLE",
]

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)

UNITARY_TOL = 1e-10
MIN_SAMPLES_PER_CYCLE = 50

Metric = Literal["worst-case-state", "average-gate"]


@dataclass(frozen=True, eq=False)
class SpinPropagator:
    """2x2 unitary acting on a single spin."""

    u: np.ndarray

    def __post_init__(self) -> None:
        u = np.array(self.u, dtype=complex)
        if u.shape != (2, 2):
            raise ValueError(f"propagator must be 2x2, got shape {u.shape}")
        err = unitarity_error(u)
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (max |u^H u - I| = {err:.3g})")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    def __matmul__(self, other: SpinPropagator) -> SpinPropagator:
        return SpinPropagator(self.u @ other.u)

    def apply(self, state: np.ndarray) -> np.ndarray:
        return self.u @ state

    def transition_probability(self, initial: np.ndarray = DOWN, final: np.ndarray = UP) -> float:
        amp = np.vdot(final, self.u @ initial)
        return float(abs(amp) ** 2)

    @classmethod
    def identity(cls) -> SpinPropagator:
        return cls(I2)


def unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - I2)))


@dataclass(frozen=True)
class RotatingFramePulse:
    """Square pulse seen in the frame rotating at the drive frequency.

    ``detuning`` is ``f_drive - f_L``.
    """

    f_R: float
    detuning: float = 0.0
    phase: float = 0.0
    duration: float = 0.0

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValueError(f"pulse duration must be non-negative, got {self.duration}")
        if self.f_R < 0:
            raise ValueError(f"Rabi frequency must be non-negative, got {self.f_R}")


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    metric: str = "worst-case-state"

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


def _su2_batch(hx, hy, hz, dt):
    """exp(-i dt (hx sx + hy sy + hz sz)) for arrays of coefficients."""
    hx, hy, hz = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (hx, hy, hz)))
    norm = np.sqrt(hx**2 + hy**2 + hz**2)
    theta = norm * dt
    c = np.cos(theta)
    safe = np.where(norm > 0, norm, 1.0)
    s = np.where(norm > 0, np.sin(theta) / safe, dt)
    out = np.empty(hx.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c - 1j * s * hz
    out[..., 1, 1] = c + 1j * s * hz
    out[..., 0, 1] = -1j * s * (hx - 1j * hy)
    out[..., 1, 0] = -1j * s * (hx + 1j * hy)
    return out


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """Time-ordered product ``M[n-1] @ ... @ M[1] @ M[0]`` by pairwise reduction."""
    mats = np.asarray(mats)
    if len(mats) == 0:
        return I2.copy()
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, I2[None]], axis=0)
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def rotation(angle: float, axis=(1.0, 0.0, 0.0)) -> SpinPropagator:
    """``exp(-i angle/2 n.sigma)`` for a unit axis ``n``."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    u = math.cos(angle / 2) * I2 - 1j * math.sin(angle / 2) * (n[0] * SX + n[1] * SY + n[2] * SZ)
    return SpinPropagator(u)


def propagator_rwa(p: RotatingFramePulse) -> SpinPropagator:
    """Closed-form rotating-frame propagator of a square pulse."""
    omega = math.hypot(p.f_R, p.detuning)
    if omega == 0.0:
        return SpinPropagator.identity()
    theta = 2.0 * math.pi * omega * p.duration
    axis = (
        p.f_R * math.cos(p.phase) / omega,
        p.f_R * math.sin(p.phase) / omega,
        p.detuning / omega,
    )
    u = math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * (
        axis[0] * SX + axis[1] * SY + axis[2] * SZ
    )
    return SpinPropagator(u)


def labframe_interval(b_field: Waveform) -> tuple[float, float]:
    """Time span covered by :func:`evolve_labframe` for this waveform.

    Each sample holds the field over a cell of width ``1/fs`` centred on its
    timestamp.
    """
    half = 0.5 / b_field.fs
    return b_field.t0 - half, b_field.t_end - half


def evolve_labframe(
    b_field: Waveform,
    f_L: float,
    g: float = 2.0,
    min_samples_per_cycle: float = MIN_SAMPLES_PER_CYCLE,
) -> SpinPropagator:
    """Lab-frame propagator for a transverse (x) field, counter-rotating terms kept.

    The static field contributes ``pi f_L sz``; each sample contributes
    ``pi gamma B_k sx``. Every cell is integrated with its exact 2x2
    exponential, so the result is unitary regardless of step size.
    """
    if b_field.unit != "tesla":
        raise ValueError(f"lab-frame evolution needs a field in tesla, got {b_field.unit}")
    if b_field.is_baseband:
        raise ValueError("lab-frame evolution needs a real passband field")
    required = min_samples_per_cycle * f_L
    if b_field.fs < required:
        raise ValueError(
            f"field undersampled: fs = {b_field.fs:.4g} Hz, need at least "
            f"{required:.4g} Hz ({min_samples_per_cycle:g} samples per Larmor cycle)"
        )
    hx = math.pi * gyromagnetic_ratio(g) * np.asarray(b_field.samples, dtype=float)
    hz = math.pi * f_L
    steps = _su2_batch(hx, 0.0, hz, b_field.dt)
    return SpinPropagator(_ordered_product(steps))


def to_rotating_frame(u: SpinPropagator, f_frame: float, t_start: float, t_end: float) -> SpinPropagator:
    """Express a lab-frame propagator over ``[t_start, t_end]`` in the frame
    rotating at ``f_frame`` about z."""
    def frame(t):
        a = math.pi * f_frame * t
        return np.diag([np.exp(1j * a), np.exp(-1j * a)])

    return SpinPropagator(frame(t_end) @ u.u @ frame(t_start).conj().T)


def infidelity(
    u: SpinPropagator,
    u_id: SpinPropagator,
    metric: Metric = "worst-case-state",
) -> FidelityReport:
    """Distance between a realised and an ideal single-spin gate.

    ``worst-case-state``: ``F = (|Tr(u_id^H u)| / 2)^2``, equal to
    ``cos^2(a/2)`` for an error rotation by angle ``a``.
    ``average-gate``: ``F = (|Tr(u_id^H u)|^2 + 2) / 6``.
    Both ignore global phase.
    """
    for m in (u, u_id):
        m = m.u if isinstance(m, SpinPropagator) else np.asarray(m)
        if unitarity_error(m) > 1e-8:
            raise ValueError("infidelity needs unitary inputs")
    uu = u.u if isinstance(u, SpinPropagator) else np.asarray(u)
    ui = u_id.u if isinstance(u_id, SpinPropagator) else np.asarray(u_id)
    overlap = abs(np.trace(ui.conj().T @ uu))
    if metric == "worst-case-state":
        fid = (overlap / 2.0) ** 2
    elif metric == "average-gate":
        fid = (overlap**2 + 2.0) / 6.0
    else:
        raise ValueError(f"unknown fidelity metric {metric!r}")
    return FidelityReport(fidelity=float(min(1.0, fid)), metric=metric)


def rabi_lineshape(f_R, detuning, t):
    """Spin-up probability after driving ``|down>`` for time ``t``."""
    f_R = np.asarray(f_R, dtype=float)
    detuning = np.asarray(detuning, dtype=float)
    omega2 = f_R**2 + detuning**2
    with np.errstate(invalid="ignore", divide="ignore"):
        amp = np.where(omega2 > 0, f_R**2 / np.where(omega2 > 0, omega2, 1.0), 0.0)
    p = amp * np.sin(np.pi * np.sqrt(omega2) * np.asarray(t, dtype=float)) ** 2
    return float(p) if p.ndim == 0 else p


def _ideal_half_pi(phase: float) -> SpinPropagator:
    return rotation(math.pi / 2, (math.cos(phase), math.sin(phase), 0.0))


def _rwa_single(ratio: float, phase: float, samples_per_cycle: float, spin: SpinSystem) -> float:
    f_L = spin.f_L
    f_R = f_L / ratio
    t_gate = 1.0 / (4.0 * f_R)
    n = int(math.ceil(t_gate * f_L * samples_per_cycle))
    fs = n / t_gate
    dt = 1.0 / fs
    # cells centred on samples so the propagated span is exactly [0, t_gate]
    t = (np.arange(n) + 0.5) * dt
    B1 = field_from_rabi(spin.g_factor, f_R)
    bx = B1 * np.cos(2.0 * math.pi * f_L * t + phase)
    wave = Waveform(bx, fs=fs, t0=0.5 * dt, unit="tesla")
    u_lab = evolve_labframe(wave, f_L, spin.g_factor)
    t0, t1 = labframe_interval(wave)
    u_rot = to_rotating_frame(u_lab, f_L, t0, t1)
    return infidelity(u_rot, _ideal_half_pi(phase)).infidelity


def rwa_phase_scan(
    ratio: float,
    n_phases: int = 8,
    samples_per_cycle: float = 200,
    spin: SpinSystem | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Infidelity of a lab-frame pi/2 pulse on a uniform grid of drive phases."""
    if not ratio >= 2:
        raise ValueError(f"f_L/f_R ratio must be >= 2 for the RWA to mean anything, got {ratio}")
    spin = spin or SpinSystem()
    phases = 2.0 * math.pi * np.arange(n_phases) / n_phases
    vals = np.array([_rwa_single(ratio, p, samples_per_cycle, spin) for p in phases])
    return phases, vals


def rwa_gate_infidelity(
    ratio: float,
    phase: float | None = None,
    n_phases: int = 8,
    samples_per_cycle: float = 200,
    spin: SpinSystem | None = None,
) -> float:
    """Infidelity that the counter-rotating field alone causes in a resonant
    pi/2 gate, compared with the ideal rotating-frame gate.

    With ``phase=None`` the worst case over ``n_phases`` drive phases is
    returned.
    """
    if not ratio >= 2:
        raise ValueError(f"f_L/f_R ratio must be >= 2 for the RWA to mean anything, got {ratio}")
    spin = spin or SpinSystem()
    if phase is not None:
        return _rwa_single(ratio, phase, samples_per_cycle, spin)
    return float(rwa_phase_scan(ratio, n_phases, samples_per_cycle, spin)[1].max())
