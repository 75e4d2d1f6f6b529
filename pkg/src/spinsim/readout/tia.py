"""Behavioural transimpedance amplifier and threshold detection.

The amplifier is ``n_poles`` identical real poles whose composite -3 dB
point is ``f3db``, scaled by the DC transimpedance. Input-referred current
noise is white. Simulation uses first-order bilinear sections with the
corner pre-warped so that the sampled response is also exactly -3 dB at
``f3db``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal, special

from ..parallel import pmap, stream
from ..waveform import Waveform
from .spin_to_charge import EventTrace

__all__ = [
    "TiaModel",
    "TIA_300K",
    "TIA_77K",
    "TIA_MODELS",
    "MIN_OVERSAMPLING",
    "pole_frequency",
    "transfer",
    "events_to_current",
    "tia_response",
    "boxcar_noise_std",
    "matched_filter_snr",
    "Detection",
    "detect",
    "q_function",
    "readout_error_sweep",
]

MIN_OVERSAMPLING = 10.0
PEAK_CURRENT_RANGE = (10e-12, 10e-9)


@dataclass(frozen=True)
class TiaModel:
    z21_db_ohm: float
    f3db: float
    n_poles: int = 3
    in_noise: float = 0.0
    temperature_tag: str = ""

    def __post_init__(self) -> None:
        if not self.z21_db_ohm > 0:
            raise ValueError("transimpedance must exceed 0 dBOhm")
        if not self.f3db > 0:
            raise ValueError("bandwidth must be positive")
        if int(self.n_poles) != self.n_poles or self.n_poles < 1:
            raise ValueError("n_poles must be a positive integer")
        if self.in_noise < 0:
            raise ValueError("noise density must be non-negative")

    @property
    def z0(self) -> float:
        """DC transimpedance in ohm."""
        return 10.0 ** (self.z21_db_ohm / 20.0)

    def noiseless(self) -> TiaModel:
        return TiaModel(self.z21_db_ohm, self.f3db, self.n_poles, 0.0, self.temperature_tag)


TIA_300K = TiaModel(z21_db_ohm=108.5, f3db=18e9, n_poles=3, in_noise=0.89e-12, temperature_tag="300K")
TIA_77K = TiaModel(z21_db_ohm=110.7, f3db=25e9, n_poles=3, in_noise=0.44e-12, temperature_tag="77K")
TIA_MODELS = {"300K": TIA_300K, "77K": TIA_77K}


def pole_frequency(m: TiaModel) -> float:
    """Corner of each identical pole."""
    return m.f3db / math.sqrt(2.0 ** (1.0 / m.n_poles) - 1.0)


def _section(m: TiaModel, fs: float) -> tuple[np.ndarray, np.ndarray]:
    # bilinear first-order lowpass, k = tan(pi f_p' / fs) with f_p' pre-warped
    k = math.tan(math.pi * m.f3db / fs) / math.sqrt(2.0 ** (1.0 / m.n_poles) - 1.0)
    b = np.array([k, k]) / (1.0 + k)
    a = np.array([1.0, (k - 1.0) / (1.0 + k)])
    return b, a


def transfer(m: TiaModel, f, fs: float | None = None):
    """Complex transimpedance Z(f) in ohm; the sampled realisation if ``fs`` is given."""
    f = np.asarray(f, dtype=float)
    if fs is None:
        h = 1.0 / (1.0 + 1j * f / pole_frequency(m)) ** m.n_poles
    else:
        b, a = _section(m, fs)
        zi = np.exp(-2j * math.pi * f / fs)
        h = ((b[0] + b[1] * zi) / (a[0] + a[1] * zi)) ** m.n_poles
    return m.z0 * h


def _check_rate(m: TiaModel, fs: float) -> None:
    if fs < MIN_OVERSAMPLING * m.f3db:
        raise ValueError(
            f"TIA simulation undersampled: fs = {fs:.4g} Hz, need >= {MIN_OVERSAMPLING * m.f3db:.4g} Hz"
        )


def _filter(m: TiaModel, fs: float, x: np.ndarray) -> np.ndarray:
    b, a = _section(m, fs)
    sos = np.tile(np.concatenate([b, [0.0], a, [0.0]]), (m.n_poles, 1))
    return signal.sosfilt(sos, x, axis=-1)


def _warmup_len(m: TiaModel, fs: float) -> int:
    tau = 1.0 / (2.0 * math.pi * pole_frequency(m))
    return int(math.ceil(40.0 * m.n_poles * tau * fs))


def events_to_current(
    trace: EventTrace,
    i_peak: float,
    pulse_width: float,
    fs: float,
    duration: float | None = None,
) -> Waveform:
    """Rectangular current pulse of height ``i_peak`` at every event (overlaps add)."""
    if fs * pulse_width < 10:
        raise ValueError(
            f"sample rate {fs:.4g} Hz gives fewer than 10 samples per {pulse_width:.4g} s pulse"
        )
    lo, hi = PEAK_CURRENT_RANGE
    if not lo <= i_peak <= hi:
        warnings.warn(f"peak current {i_peak:.3g} A outside the expected 10 pA - 10 nA range", stacklevel=2)
    duration = trace.window if duration is None else duration
    n = max(1, int(round(duration * fs)))
    i = np.zeros(n)
    width = int(round(pulse_width * fs))
    for ev in trace.events:
        k0 = int(round(ev.time * fs))
        i[k0 : min(n, k0 + width)] += i_peak
    return Waveform(i, fs=fs, unit="ampere", meta={"i_peak": i_peak, "pulse_width": pulse_width})


def tia_response(i: Waveform, m: TiaModel, seed=None) -> Waveform:
    """Output voltage for input current ``i``; noiseless when ``seed`` is None.

    The input is taken as zero before ``i.t0``; noise runs through a warm-up
    so it is stationary from the first sample.
    """
    if i.unit != "ampere":
        raise ValueError(f"TIA input must be a current, got {i.unit}")
    _check_rate(m, i.fs)
    x = np.asarray(i.samples, dtype=float)
    if seed is None or m.in_noise == 0:
        y = _filter(m, i.fs, x)
    else:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        nw = _warmup_len(m, i.fs)
        sigma = m.in_noise * math.sqrt(i.fs / 2.0)
        noise = rng.standard_normal(nw + x.size) * sigma
        y = _filter(m, i.fs, np.concatenate([np.zeros(nw), x]) + noise)[nw:]
    return Waveform(m.z0 * y, fs=i.fs, t0=i.t0, unit="volt", meta=dict(i.meta, tia=m.temperature_tag))


def boxcar_noise_std(m: TiaModel, fs: float, n_window: int) -> float:
    """Standard deviation of the mean output voltage over ``n_window`` samples.

    Exact for the sampled model: the boxcar and the amplifier impulse
    response are combined into one FIR weight vector acting on white input.
    """
    if m.in_noise == 0:
        return 0.0
    _check_rate(m, fs)
    nh = _warmup_len(m, fs)
    imp = np.zeros(nh)
    imp[0] = 1.0
    h = _filter(m, fs, imp)
    w = np.convolve(h, np.ones(n_window) / n_window)
    sigma_in = m.in_noise * math.sqrt(fs / 2.0)
    return float(m.z0 * sigma_in * math.sqrt(np.sum(w**2)))


def matched_filter_snr(i_peak: float, window: float, in_noise: float) -> float:
    """Ideal integrate-and-dump SNR ``i_peak sqrt(2 T) / i_n`` for a long window."""
    return math.inf if in_noise == 0 else i_peak * math.sqrt(2.0 * window) / in_noise


@dataclass(frozen=True)
class Detection:
    decision: bool
    mean: float
    snr: float
    noise_std: float


def detect(
    v: Waveform,
    window: tuple[float, float],
    threshold: float,
    m: TiaModel | None = None,
    expected: float | None = None,
) -> Detection:
    """Boxcar-average ``v`` over ``window = (start, stop)`` and compare to ``threshold``.

    ``snr`` is the expected signal mean (``expected`` if given, else the
    measured mean) over the predicted noise std of the averaged output.
    """
    start, stop = window
    if start < v.t0 - 0.5 / v.fs or stop > v.t_end + 0.5 / v.fs or stop <= start:
        raise ValueError(f"window {window} outside waveform support [{v.t0:.4g}, {v.t_end:.4g}]")
    k0 = int(round((start - v.t0) * v.fs))
    k1 = max(k0 + 1, int(round((stop - v.t0) * v.fs)))
    mean = float(np.mean(v.samples[k0:k1]))
    sigma = 0.0 if m is None else boxcar_noise_std(m, v.fs, k1 - k0)
    level = mean if expected is None else expected
    snr = math.inf if sigma == 0 else abs(level) / sigma
    return Detection(decision=mean > threshold, mean=mean, snr=snr, noise_std=sigma)


def q_function(x):
    """Gaussian tail probability P(N(0, 1) > x)."""
    return 0.5 * special.erfc(np.asarray(x) / math.sqrt(2.0))


def _sweep_cell(args) -> dict:
    (ci, i_peak, window, m, trials, seed, fs) = args
    n = max(1, int(round(window * fs)))
    nw = _warmup_len(m, fs)
    clean = m.z0 * _filter(m, fs, np.full(n, i_peak))
    level = float(clean.mean())
    threshold = 0.5 * level
    sigma = boxcar_noise_std(m, fs, n)
    if m.in_noise == 0:
        errors = 0
    else:
        rng = stream(seed, ci)
        sig_in = m.in_noise * math.sqrt(fs / 2.0)
        present = np.arange(trials) % 2 == 0
        rows = max(1, 2_000_000 // (nw + n))
        errors = 0
        for r0 in range(0, trials, rows):
            p = present[r0 : r0 + rows]
            x = np.zeros((p.size, nw + n))
            x[p, nw:] = i_peak
            x += rng.standard_normal(x.shape) * sig_in
            y = m.z0 * _filter(m, fs, x)[:, nw:]
            errors += int(np.count_nonzero((y.mean(axis=1) > threshold) != p))
    return {
        "i_peak": i_peak,
        "window": window,
        "error_rate": errors / trials,
        "snr": math.inf if sigma == 0 else level / sigma,
        "predicted_error": 0.0 if sigma == 0 else float(q_function(level / sigma / 2.0)),
        "trials": trials,
    }


def readout_error_sweep(
    i_peaks,
    windows,
    m: TiaModel,
    trials: int,
    seed: int,
    fs: float | None = None,
    jobs: int = 1,
) -> list[dict]:
    """Monte Carlo misclassification rate per (i_peak, window) cell.

    Half the trials carry a rectangular current of ``i_peak`` over the
    window, half carry none; the decision threshold sits midway between the
    noiseless mean levels. ``snr`` is mean signal over averaged-noise std.
    """
    if trials < 100:
        raise ValueError("sweep needs at least 100 trials per cell")
    fs = MIN_OVERSAMPLING * m.f3db if fs is None else fs
    _check_rate(m, fs)
    cells = [
        (ci, float(ip), float(w), m, trials, seed, fs)
        for ci, (ip, w) in enumerate((ip, w) for ip in i_peaks for w in windows)
    ]
    return pmap(_sweep_cell, cells, jobs)
