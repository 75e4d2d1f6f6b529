"""Infidelity budget for a pi/2 gate driven by imperfect electronics.

Covers static carrier detuning, pulse-timing error, the mapping from VCO
phase noise to an rms detuning, equal-share budget allocation and a Monte
Carlo estimator that runs every trial through the spin propagators.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from . import dynamics as dyn
from .parallel import chunks, pmap, stream
from .pulsegen import ONE_MHZ, VcoSpec, wiener_phase

__all__ = [
    "SOURCES",
    "BudgetEntry",
    "PnCalibration",
    "REFERENCE_PN_PAIRS",
    "calibrate_kappa",
    "DEFAULT_CALIBRATION",
    "detuning_infidelity",
    "detuning_infidelity_small",
    "timing_infidelity",
    "timing_tolerance",
    "pn_to_rms_detuning",
    "equal_allocation",
    "budget_report",
    "NoiseModel",
    "McResult",
    "mc_gate_infidelity",
]

SOURCES = ("carrier-detuning", "timing", "pn", "rwa", "other")

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class BudgetEntry:
    source: str
    infidelity: float
    parameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"unknown budget source {self.source!r}")
        if self.infidelity < 0:
            raise ValueError("infidelity must be non-negative")


@dataclass(frozen=True)
class PnCalibration:
    """Phase noise is integrated over a bandwidth ``kappa * f_R``."""

    kappa: float
    note: str = "L(f) = S_phi(f)/2 one-sided; white FM; bandwidth kappa*f_R"

    def __post_init__(self) -> None:
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")


# (L(1 MHz) [dBc/Hz], f_R [Hz], tolerated detuning [Hz]) for a 125e-6 share
REFERENCE_PN_PAIRS = (
    (-74.0, 750e6, 11.8e6),
    (-62.0, 12e9, 190e6),
)


def _frequency_noise_density(pn_at_1MHz: float) -> float:
    if pn_at_1MHz == -math.inf:
        return 0.0
    return 2.0 * ONE_MHZ**2 * 10.0 ** (pn_at_1MHz / 10.0)


def calibrate_kappa(pn_at_1MHz: float, f_R: float, sigma_detuning: float) -> PnCalibration:
    """Bandwidth factor that maps ``pn_at_1MHz`` at ``f_R`` to ``sigma_detuning``."""
    s = _frequency_noise_density(pn_at_1MHz)
    if s == 0.0:
        raise ValueError("cannot calibrate against a noiseless oscillator")
    return PnCalibration(kappa=sigma_detuning**2 / (s * f_R))


DEFAULT_CALIBRATION = calibrate_kappa(*REFERENCE_PN_PAIRS[0])


def _half_pi_gate(f_R: float, detuning: float = 0.0, stretch: float = 0.0, phase: float = 0.0):
    return dyn.propagator_rwa(
        dyn.RotatingFramePulse(f_R=f_R, detuning=detuning, phase=phase, duration=(1.0 + stretch) / (4.0 * f_R))
    )


def _ideal(phase: float = 0.0):
    return dyn.rotation(HALF_PI, (math.cos(phase), math.sin(phase), 0.0))


def detuning_infidelity(delta_f: float, f_R: float) -> float:
    """Worst-case-state infidelity of a pi/2 pulse timed for resonance but
    driven ``delta_f`` off resonance."""
    if not f_R > 0:
        raise ValueError("Rabi frequency must be positive")
    return dyn.infidelity(_half_pi_gate(f_R, delta_f), _ideal()).infidelity


def detuning_infidelity_small(delta_f: float, f_R: float) -> float:
    """Leading-order law ``(delta_f / f_R)^2 / 2``."""
    return 0.5 * (delta_f / f_R) ** 2


def timing_infidelity(epsilon: float) -> float:
    """pi/2 gate lengthened by a fraction ``epsilon``: ``sin^2(pi eps / 4)``."""
    if not abs(epsilon) < 1:
        raise ValueError("fractional timing error must satisfy |epsilon| < 1")
    return math.sin(math.pi * epsilon / 4.0) ** 2


def timing_tolerance(f_R: float, epsilon: float) -> float:
    """Absolute timing error of a pi/2 pulse for fractional error ``epsilon``."""
    if not f_R > 0:
        raise ValueError("Rabi frequency must be positive")
    return epsilon / (4.0 * f_R)


def pn_to_rms_detuning(pn_at_1MHz: float, f_R: float, cal: PnCalibration = DEFAULT_CALIBRATION) -> float:
    """rms carrier wander ``sqrt(S_nu * kappa * f_R)`` for a -20 dB/dec VCO."""
    return math.sqrt(_frequency_noise_density(pn_at_1MHz) * cal.kappa * f_R)


def equal_allocation(target_fidelity: float, n_sources: int) -> float:
    if not 0 < target_fidelity < 1:
        raise ValueError("target fidelity must lie in (0, 1)")
    if n_sources < 1:
        raise ValueError("need at least one source")
    return (1.0 - target_fidelity) / n_sources


def budget_report(
    target_fidelity: float,
    sources: Sequence[BudgetEntry],
    n_allocations: int | None = None,
) -> dict[str, Any]:
    """Sum the contributions and flag any exceeding its equal share.

    ``n_allocations`` is the number of budget slots; defaults to the number
    of entries supplied.
    """
    n = n_allocations or max(1, len(sources))
    share = equal_allocation(target_fidelity, n)
    total = math.fsum(e.infidelity for e in sources)
    rows = []
    for e in sources:
        rows.append(
            {
                "source": e.source,
                "infidelity": e.infidelity,
                "allocation": share,
                "overrun": e.infidelity > share,
                "parameters": e.parameters,
            }
        )
    return {
        "target": target_fidelity,
        "allowed_infidelity": 1.0 - target_fidelity,
        "allocation_per_source": share,
        "n_allocations": n,
        "sources": rows,
        "total_infidelity": total,
        "fidelity": 1.0 - total,
        "pass": total <= 1.0 - target_fidelity,
    }


@dataclass(frozen=True)
class NoiseModel:
    """Per-trial error model. Timing values are fractions of the gate length."""

    detuning_offset: float = 0.0
    detuning_sigma: float = 0.0
    timing_offset: float = 0.0
    timing_sigma: float = 0.0
    pn_spec: VcoSpec | None = None
    pn_steps: int = 64

    def is_deterministic(self) -> bool:
        pn_quiet = self.pn_spec is None or self.pn_spec.frequency_noise_density == 0
        return self.detuning_sigma == 0 and self.timing_sigma == 0 and pn_quiet


@dataclass(frozen=True)
class McResult:
    mean: float
    ci95: tuple[float, float]
    std: float
    trials: int

    @property
    def ci_width(self) -> float:
        return self.ci95[1] - self.ci95[0]

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        return d


def _pn_gate(f_R: float, duration: float, detuning: float, spec: VcoSpec, steps: int, rng) -> dyn.SpinPropagator:
    # phase wander of the free-running carrier, piecewise constant over the pulse
    fs = steps / duration
    phi = wiener_phase(spec, steps + 1, fs, rng)
    mid = 0.5 * (phi[:-1] + phi[1:])
    dt = duration / steps
    hx = math.pi * f_R * np.cos(mid)
    hy = math.pi * f_R * np.sin(mid)
    hz = math.pi * detuning
    mats = dyn._su2_batch(hx, hy, hz, dt)
    return dyn.SpinPropagator(dyn._ordered_product(mats))


def _trial(noise: NoiseModel, f_R: float, seed: int, i: int) -> float:
    rng = stream(seed, i)
    det = noise.detuning_offset + (noise.detuning_sigma * rng.standard_normal() if noise.detuning_sigma else 0.0)
    eps = noise.timing_offset + (noise.timing_sigma * rng.standard_normal() if noise.timing_sigma else 0.0)
    duration = max(0.0, (1.0 + eps) / (4.0 * f_R))
    if noise.pn_spec is not None and noise.pn_spec.frequency_noise_density > 0 and duration > 0:
        u = _pn_gate(f_R, duration, det, noise.pn_spec, noise.pn_steps, rng)
    else:
        u = dyn.propagator_rwa(dyn.RotatingFramePulse(f_R=f_R, detuning=det, duration=duration))
    return dyn.infidelity(u, _ideal()).infidelity


def mc_gate_infidelity(
    noise: NoiseModel,
    f_R: float,
    trials: int,
    seed: int,
    jobs: int = 1,
) -> McResult:
    """Monte Carlo mean infidelity of a pi/2 gate with a normal-approximation 95 % CI.

    Trial ``i`` uses the generator derived from ``(seed, i)``, so the result
    is independent of ``jobs``.
    """
    if trials < 100:
        raise ValueError("Monte Carlo estimate needs at least 100 trials")
    if not f_R > 0:
        raise ValueError("Rabi frequency must be positive")

    def work(block: range) -> list[float]:
        return [_trial(noise, f_R, seed, i) for i in block]

    parts = pmap(work, chunks(trials, 256), jobs)
    vals = np.fromiter((v for part in parts for v in part), dtype=float, count=trials)
    mean = float(math.fsum(vals) / trials)
    std = float(vals.std(ddof=1))
    half = 1.959963984540054 * std / math.sqrt(trials)
    return McResult(mean=mean, ci95=(mean - half, mean + half), std=std, trials=trials)
