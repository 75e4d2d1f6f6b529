"""Behavioural pulse generator: free-running VCO with phase noise and a
startup transient, gated by pass/shunt switches, converted to a drive field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import fft, signal

from .constants import field_from_rabi
from .waveform import Waveform

__all__ = [
    "TUNING_RANGE",
    "VcoSpec",
    "SwitchSpec",
    "DriveConversion",
    "DEFAULT_ALPHA_V",
    "DEFAULT_ALPHA_I",
    "wiener_phase",
    "synthesize_vco",
    "synthesize_vco_envelope",
    "startup_settling_time",
    "switch_envelope",
    "gate_switch",
    "envelope_area",
    "drive_field",
    "extract_phase",
    "estimate_phase_noise",
    "phase_noise_psd",
]

TUNING_RANGE = (57e9, 65e9)
ONE_MHZ = 1e6


@dataclass(frozen=True)
class VcoSpec:
    """Free-running oscillator.

    ``pn_at_1MHz`` is the single-sideband phase noise L(1 MHz) in dBc/Hz;
    ``-inf`` gives a clean carrier.
    """

    f_c: float = 60e9
    pn_at_1MHz: float = -90.0
    amplitude: float = 0.8
    startup_tau: float = 50e-12

    def __post_init__(self) -> None:
        lo, hi = TUNING_RANGE
        if not lo <= self.f_c <= hi:
            raise ValueError(
                f"carrier {self.f_c / 1e9:.3f} GHz outside the {lo / 1e9:g}-{hi / 1e9:g} GHz tuning range"
            )
        if not self.amplitude > 0:
            raise ValueError("VCO amplitude must be positive")
        if self.startup_tau < 0:
            raise ValueError("startup time constant must be non-negative")
        if math.isnan(self.pn_at_1MHz) or self.pn_at_1MHz == math.inf:
            raise ValueError(f"invalid phase-noise level {self.pn_at_1MHz}")

    @property
    def frequency_noise_density(self) -> float:
        """One-sided white frequency-noise PSD in Hz^2/Hz for a -20 dB/dec L(f)."""
        if self.pn_at_1MHz == -math.inf:
            return 0.0
        return 2.0 * ONE_MHZ**2 * 10.0 ** (self.pn_at_1MHz / 10.0)


@dataclass(frozen=True)
class SwitchSpec:
    """Gating window: linear rise, flat top of length ``t_on``, linear fall.

    ``off_isolation`` (dB) sets the leakage when the switch is open;
    ``inf`` means a perfect off state.
    """

    t_start: float
    t_on: float
    rise: float = 0.0
    fall: float = 0.0
    off_isolation: float = 40.0

    def __post_init__(self) -> None:
        if self.t_on < 0 or self.rise < 0 or self.fall < 0:
            raise ValueError("switch timings must be non-negative")
        if self.off_isolation < 0:
            raise ValueError("off isolation must be >= 0 dB")

    @property
    def t_stop(self) -> float:
        return self.t_start + self.rise + self.t_on + self.fall

    @property
    def leakage(self) -> float:
        return 10.0 ** (-self.off_isolation / 20.0)

    @classmethod
    def with_timing_tolerance(cls, t_start: float, t_on: float, dt_tol: float, **kw) -> SwitchSpec:
        """Edges of ``dt_tol / 2`` each, as used for the budgeted timing error."""
        return cls(t_start=t_start, t_on=t_on, rise=dt_tol / 2, fall=dt_tol / 2, **kw)


@dataclass(frozen=True)
class DriveConversion:
    """``B = alpha * I`` (ESR line, T/A) or ``B = alpha * V`` (EDSR gate, T/V)."""

    mode: str = "EDSR"
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("ESR", "EDSR"):
            raise ValueError(f"drive mode must be ESR or EDSR, got {self.mode!r}")
        if self.alpha < 0:
            raise ValueError("conversion factor must be non-negative")

    @property
    def input_unit(self) -> str:
        return "ampere" if self.mode == "ESR" else "volt"


# Synthetic conversion factors: a 0.8 V (or 0.8 mA) amplitude gives the
# field for a 750 MHz Rabi frequency at g = 2.
DEFAULT_ALPHA_V = field_from_rabi(2.0, 750e6) / 0.8
DEFAULT_ALPHA_I = field_from_rabi(2.0, 750e6) / 0.8e-3


def wiener_phase(spec: VcoSpec, n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Random-walk phase sampled at ``fs`` with ``phi[0] = 0``."""
    s_nu = spec.frequency_noise_density
    if s_nu == 0.0:
        return np.zeros(n)
    # phase increment variance per sample: (2 pi)^2 * (S_nu / 2) / fs
    sigma = 2.0 * math.pi * math.sqrt(s_nu / 2.0 / fs)
    steps = rng.standard_normal(n - 1) * sigma
    return np.concatenate(([0.0], np.cumsum(steps)))


def _startup(spec: VcoSpec, t: np.ndarray) -> np.ndarray:
    if spec.startup_tau == 0:
        return np.ones_like(t)
    return -np.expm1(-np.clip(t, 0.0, None) / spec.startup_tau)


def _check_duration(duration: float, fs: float) -> int:
    if not duration > 0:
        raise ValueError("duration must be positive")
    return max(1, int(round(duration * fs)))


def synthesize_vco(
    spec: VcoSpec,
    duration: float,
    fs: float,
    seed: int,
    startup: bool = False,
) -> Waveform:
    """Passband VCO output ``A env(t) cos(2 pi f_c t + phi(t))`` in volts.

    ``phi`` is a Wiener process whose one-sided spectrum gives
    ``L(f) = S_phi(f) / 2`` falling at -20 dB/dec through ``pn_at_1MHz``.
    ``env`` is the exponential startup ``1 - exp(-t / tau)`` when
    ``startup`` is set.
    """
    if fs < 4.0 * spec.f_c:
        raise ValueError(f"sample rate {fs:.4g} Hz below 4 x carrier ({4 * spec.f_c:.4g} Hz)")
    n = _check_duration(duration, fs)
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    phi = wiener_phase(spec, n, fs, rng)
    env = _startup(spec, t) if startup else 1.0
    v = spec.amplitude * env * np.cos(2.0 * math.pi * spec.f_c * t + phi)
    return Waveform(v, fs=fs, unit="volt", meta={"carrier": spec.f_c, "pn_at_1MHz": spec.pn_at_1MHz, "seed": seed})


def synthesize_vco_envelope(
    spec: VcoSpec,
    duration: float,
    fs: float,
    seed: int,
    startup: bool = False,
) -> Waveform:
    """Complex envelope ``A env(t) exp(i phi(t))`` relative to ``f_c``.

    Same phase statistics as :func:`synthesize_vco`, without carrier-rate
    sampling, for driving rotating-frame simulations.
    """
    n = _check_duration(duration, fs)
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    phi = wiener_phase(spec, n, fs, rng)
    env = _startup(spec, t) if startup else 1.0
    z = spec.amplitude * env * np.exp(1j * phi)
    return Waveform(z, fs=fs, unit="volt", meta={"carrier": spec.f_c, "pn_at_1MHz": spec.pn_at_1MHz, "seed": seed})


def startup_settling_time(spec: VcoSpec, threshold: float = 0.98) -> float:
    """Time for the startup envelope to reach ``threshold`` of full swing."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    return -spec.startup_tau * math.log1p(-threshold)


def switch_envelope(sw: SwitchSpec, t) -> np.ndarray:
    """Trapezoidal on-state weight e(t) in [0, 1]."""
    t = np.asarray(t, dtype=float)
    x = t - sw.t_start
    e = np.zeros_like(x)
    top0 = sw.rise
    top1 = sw.rise + sw.t_on
    end = top1 + sw.fall
    if sw.rise > 0:
        m = (x >= 0) & (x < top0)
        e[m] = x[m] / sw.rise
    e[(x >= top0) & (x < top1)] = 1.0
    if sw.fall > 0:
        m = (x >= top1) & (x < end)
        e[m] = (end - x[m]) / sw.fall
    return e


def gate_switch(w: Waveform, sw: SwitchSpec) -> Waveform:
    """Apply the switch: ``w e + w leak (1 - e)``."""
    half = 0.5 / w.fs
    if sw.t_start < w.t0 - half or sw.t_stop > w.t_end + half:
        raise ValueError(
            f"switch window [{sw.t_start:.4g}, {sw.t_stop:.4g}] s exceeds waveform support "
            f"[{w.t0:.4g}, {w.t_end:.4g}] s"
        )
    e = switch_envelope(sw, w.time)
    gain = e + sw.leakage * (1.0 - e)
    meta = dict(w.meta, switch={"t_start": sw.t_start, "t_on": sw.t_on, "rise": sw.rise, "fall": sw.fall})
    return w.replace(w.samples * gain, meta=meta)


def envelope_area(sw: SwitchSpec, fs: float | None = None) -> float:
    """Effective on-time ``integral e(t) dt``; analytic when ``fs`` is None."""
    if fs is None:
        return sw.t_on + 0.5 * (sw.rise + sw.fall)
    n = int(math.ceil((sw.t_stop - sw.t_start) * fs)) + 2
    t = sw.t_start + (np.arange(n) - 0.5) / fs
    return float(switch_envelope(sw, t).sum() / fs)


def drive_field(w: Waveform, c: DriveConversion) -> Waveform:
    """Convert a gate voltage (EDSR) or line current (ESR) to a field in tesla."""
    if w.unit != c.input_unit:
        raise ValueError(f"{c.mode} conversion expects a waveform in {c.input_unit}, got {w.unit}")
    return w.replace(w.samples * c.alpha, unit="tesla", meta=dict(w.meta, drive=c.mode, alpha=c.alpha))


def extract_phase(w: Waveform, carrier: float | None = None) -> np.ndarray:
    """Excess phase relative to the nominal carrier, unwrapped."""
    if w.is_baseband:
        return np.unwrap(np.angle(w.samples))
    carrier = carrier if carrier is not None else w.meta.get("carrier")
    if carrier is None:
        raise ValueError("carrier frequency needed to extract phase from a passband waveform")
    n = len(w)
    analytic = signal.hilbert(w.samples, N=fft.next_fast_len(n))[:n]
    ref = np.exp(-2j * math.pi * carrier * (w.time - w.t0))
    return np.unwrap(np.angle(analytic * ref))


def phase_noise_psd(
    ensemble: Sequence[Waveform],
    carrier: float | None = None,
    nperseg: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble-averaged one-sided L(f) (linear, 1/Hz) of the excess phase."""
    acc = None
    f = None
    for w in ensemble:
        phi = extract_phase(w, carrier)
        seg = len(phi) if nperseg is None else min(nperseg, len(phi))
        f, p = signal.welch(phi, fs=w.fs, window="hann", nperseg=seg, detrend="linear")
        acc = p if acc is None else acc + p
    return f, acc / len(ensemble) / 2.0


def estimate_phase_noise(
    ensemble: Sequence[Waveform],
    offsets: Iterable[float],
    carrier: float | None = None,
    nperseg: int | None = None,
    floor: float = 1e-30,
) -> np.ndarray:
    """Single-sideband phase noise in dBc/Hz at each offset.

    Each value comes from a log-log line fitted to the Welch bins within
    +-20 % of the offset, which is unbiased for power-law spectra.
    """
    ensemble = list(ensemble)
    if len(ensemble) < 10:
        raise ValueError(f"need at least 10 realisations, got {len(ensemble)}")
    offsets = np.atleast_1d(np.asarray(list(offsets), dtype=float))
    duration = min(len(w) / w.fs for w in ensemble)
    seg_len = duration if nperseg is None else min(nperseg / ensemble[0].fs, duration)
    nyquist = ensemble[0].fs / 2
    for fo in offsets:
        if fo < 1.0 / duration or fo < 4.0 / seg_len:
            raise ValueError(f"offset {fo:g} Hz below resolvable band for {duration:.3g} s records")
        if fo >= nyquist / 1.2:
            raise ValueError(f"offset {fo:g} Hz above resolvable band")
    f, L = phase_noise_psd(ensemble, carrier, nperseg)
    out = []
    for fo in offsets:
        m = (f >= fo / 1.2) & (f <= fo * 1.2)
        x = np.log10(f[m] / fo)
        y = np.log10(np.maximum(L[m], floor))
        if m.sum() >= 2:
            slope, icpt = np.polyfit(x, y, 1)
        else:
            icpt = y[0]
        out.append(10.0 * icpt)
    return np.array(out)
