"""Stochastic spin-to-charge conversion: energy-selective readout,
tunnel-rate-selective readout and Pauli spin blockade.

Waiting times are exponential. Every function takes an explicit seed or
generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TunnelSpec",
    "Event",
    "EventTrace",
    "EVENT_KINDS",
    "ero_trace",
    "ero_miss_probability",
    "trro_decision",
    "trro_decisions",
    "trro_error_probabilities",
    "spin_blockade_trace",
]

EVENT_KINDS = ("tunnel_out", "tunnel_in", "interdot", "blocked_release")


@dataclass(frozen=True)
class TunnelSpec:
    """Tunnel rates to the reservoir (Hz), reload rate (Hz) and spin relaxation time (s).

    Defaults are synthetic placeholders.
    """

    gamma_ES: float = 10e6
    gamma_GS: float = 10e3
    gamma_in: float = 10e6
    T1: float = 1e-3

    def __post_init__(self) -> None:
        if min(self.gamma_ES, self.gamma_GS, self.gamma_in) < 0:
            raise ValueError("tunnel rates must be non-negative")
        if not self.T1 > 0:
            raise ValueError("T1 must be positive")


@dataclass(frozen=True)
class Event:
    time: float
    kind: str


@dataclass(frozen=True)
class EventTrace:
    """Charge-detector events inside ``[0, window]`` and the inferred label."""

    events: tuple[Event, ...]
    window: float
    decision: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        last = -math.inf
        for ev in self.events:
            if ev.kind not in EVENT_KINDS:
                raise ValueError(f"unknown event kind {ev.kind!r}")
            if not (0.0 <= ev.time <= self.window) or ev.time <= last:
                raise ValueError("event times must be strictly increasing inside the window")
            last = ev.time

    @property
    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.events])

    def count(self, kind: str) -> int:
        return sum(e.kind == kind for e in self.events)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _exp(rng: np.random.Generator, rate: float) -> float:
    return math.inf if rate <= 0 else rng.exponential(1.0 / rate)


def ero_trace(
    level_offset: tuple[float, float],
    ts: TunnelSpec,
    spin: str,
    window: float,
    seed,
) -> EventTrace:
    """Energy-selective readout of one spin.

    ``level_offset`` is ``(E_ES - mu_res, E_GS - mu_res)`` in eV. Only the
    excited state can leave; it is then replaced by a ground-state
    electron from the reservoir at rate ``gamma_in``.
    """
    es, gs = level_offset
    if not es > 0:
        raise ValueError(f"ERO bias violated: need E_ES > mu_res, got E_ES - mu_res = {es:.4g} eV")
    if not gs < 0:
        raise ValueError(f"ERO bias violated: need E_GS < mu_res, got E_GS - mu_res = {gs:.4g} eV")
    if spin not in ("ES", "GS"):
        raise ValueError(f"spin must be 'ES' or 'GS', got {spin!r}")
    if not window > 0:
        raise ValueError("measurement window must be positive")
    rng = _rng(seed)
    events: list[Event] = []
    if spin == "ES":
        t_out = _exp(rng, ts.gamma_ES)
        if t_out <= window:
            events.append(Event(t_out, "tunnel_out"))
            t_in = t_out + _exp(rng, ts.gamma_in)
            if t_out < t_in <= window:
                events.append(Event(t_in, "tunnel_in"))
    decision = "ES" if any(e.kind == "tunnel_out" for e in events) else "GS"
    return EventTrace(tuple(events), window, decision, {"scheme": "ERO", "spin": spin})


def ero_miss_probability(ts: TunnelSpec, window: float) -> float:
    return math.exp(-ts.gamma_ES * window)


def trro_decision(ts: TunnelSpec, tau: float, spin: str, seed) -> str:
    """Tunnel-rate-selective readout: ``ES`` if the electron left before ``tau``."""
    if not tau > 0:
        raise ValueError("readout time tau must be positive")
    if spin not in ("ES", "GS"):
        raise ValueError(f"spin must be 'ES' or 'GS', got {spin!r}")
    rate = ts.gamma_ES if spin == "ES" else ts.gamma_GS
    return "ES" if _exp(_rng(seed), rate) <= tau else "GS"


def trro_decisions(ts: TunnelSpec, tau: float, spin: str, trials: int, seed) -> np.ndarray:
    """Vectorised :func:`trro_decision`; returns a boolean array (True = ES)."""
    if not tau > 0:
        raise ValueError("readout time tau must be positive")
    rate = ts.gamma_ES if spin == "ES" else ts.gamma_GS
    if rate <= 0:
        return np.zeros(trials, dtype=bool)
    return _rng(seed).exponential(1.0 / rate, size=trials) <= tau


def trro_error_probabilities(ts: TunnelSpec, tau: float) -> dict[str, float]:
    """Closed-form misclassification probabilities per prepared state."""
    return {
        "ES": math.exp(-ts.gamma_ES * tau),
        "GS": -math.expm1(-ts.gamma_GS * tau),
    }


def spin_blockade_trace(
    state: str,
    detuning_window: float,
    T1: float,
    seed,
    latency: float | None = None,
) -> EventTrace:
    """Singlet-triplet readout by Pauli spin blockade.

    S(1,1) moves to S(0,2) as soon as the detuning pulse arrives (event at
    t = 0). T0(1,1) stays blocked until it relaxes after an Exp(T1) time.
    The decision is ``S`` when a transition is seen before ``latency``
    (default 1 % of the window).
    """
    if not detuning_window > 0:
        raise ValueError("detuning window must be positive")
    if state not in ("S", "T0"):
        raise ValueError(f"state must be 'S' or 'T0', got {state!r}")
    latency = 0.01 * detuning_window if latency is None else latency
    rng = _rng(seed)
    if state == "S":
        events = (Event(0.0, "interdot"),)
    else:
        t = rng.exponential(T1)
        events = (Event(t, "blocked_release"),) if t <= detuning_window else ()
    decision = "S" if events and events[0].time <= latency else "T"
    return EventTrace(events, detuning_window, decision, {"scheme": "spin-blockade", "state": state})
