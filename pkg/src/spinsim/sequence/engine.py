"""Interpreter for control sequences over the double-dot, spin and readout models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .. import dynamics as dyn
from ..constants import DriveSpec, SpinSystem
from ..parallel import chunks, pmap, stream
from ..readout.spin_to_charge import TunnelSpec, ero_trace
from ..readout.stability import DQDConfig, addition_energy, charge_state
from ..readout.tia import TIA_300K, TiaModel, matched_filter_snr, q_function
from .parser import SequenceProgram, Step

__all__ = [
    "Models",
    "Diagnostic",
    "TimelineEntry",
    "ExecutionRecord",
    "validate",
    "charge_path",
    "execute",
    "spin_up_estimates",
    "SequenceValidationError",
]

DOTS = ("left", "right")


@dataclass(frozen=True)
class Models:
    """Everything the interpreter needs besides the program.

    ``i_peak`` and ``sensor_pulse`` size the charge-sensor current used to
    turn a tunnelling event into a TIA decision; ``crosstalk`` is the
    fraction of a pulse's Rabi frequency seen by the other dot.
    """

    dqd: DQDConfig = field(default_factory=DQDConfig)
    tunnel: TunnelSpec = field(default_factory=TunnelSpec)
    tia: TiaModel = TIA_300K
    drive: DriveSpec = field(default_factory=lambda: DriveSpec.from_rabi(750e6))
    spin: SpinSystem = field(default_factory=SpinSystem)
    i_peak: float = 10e-9
    sensor_pulse: float = 1e-6
    crosstalk: float = 0.0

    def sensor_error(self) -> float:
        """Probability that the TIA misreads the presence/absence of a sensor pulse."""
        snr = matched_filter_snr(self.i_peak, self.sensor_pulse, self.tia.in_noise)
        return 0.0 if math.isinf(snr) else float(q_function(snr / 2.0))


@dataclass(frozen=True)
class Diagnostic:
    step: int
    line: int | None
    kind: str
    message: str


class SequenceValidationError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(f"step {d.step}: {d.message}" for d in diagnostics))


def _voltages(program: SequenceProgram, step: Step) -> tuple[float, float]:
    p = program.points[step.point]
    return p.vl, p.vr


def _adjacent(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Cells sharing an edge of the honeycomb (or the same cell)."""
    dl, dr = b[0] - a[0], b[1] - a[1]
    return (dl, dr) in {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)}


def charge_path(program: SequenceProgram, cfg: DQDConfig) -> list[tuple[int, int]]:
    """Ground-state occupancy at each step's point."""
    return [charge_state(*_voltages(program, s), cfg) for s in program.steps]


def _ero_level(program, step, target, prev, cfg) -> float:
    """Orbital level of the measured electron relative to the reservoir (eV)."""
    n_l, n_r = prev
    V_L, V_R = _voltages(program, step)
    if target == "left":
        return addition_energy("left", n_l - 1, n_r, V_L, V_R, cfg)
    return addition_energy("right", n_l, n_r - 1, V_L, V_R, cfg)


def validate(program: SequenceProgram, cfg: DQDConfig, zeeman: float | None = None) -> list[Diagnostic]:
    """Static checks against the stability diagram.

    Flags transitions that change the total occupancy by more than one
    electron, ERO steps whose measured level is not inside the Zeeman
    window around the reservoir, actions on empty dots, and pulses longer
    than their dwell.
    """
    zeeman = SpinSystem().E_z if zeeman is None else zeeman
    diags: list[Diagnostic] = []
    path = charge_path(program, cfg)
    occupied = {"left": False, "right": False}
    prev = None
    for k, (step, state) in enumerate(zip(program.steps, path)):
        line = step.pos.line if step.pos else None
        if prev is not None and not _adjacent(prev, state):
            diags.append(Diagnostic(k, line, "non-adjacent", f"charge jumps {prev} -> {state} at point {step.point}"))
        a = step.action
        if a.kind == "measure_ero":
            if not occupied[a.target]:
                diags.append(Diagnostic(k, line, "empty-dot", f"ERO on the {a.target} dot while it is empty"))
            else:
                held = prev if prev is not None else state
                mu = _ero_level(program, step, a.target, held, cfg)
                if not abs(mu) < zeeman / 2:
                    diags.append(
                        Diagnostic(
                            k, line, "ero-region",
                            f"{a.target} level sits {mu * 1e3:.4g} meV from the reservoir; "
                            f"ERO needs |offset| < {zeeman / 2 * 1e3:.4g} meV",
                        )
                    )
        for i, dot in enumerate(DOTS):
            if a.kind == "measure_ero" and a.target == dot:
                continue  # the electron stays put unless it is excited
            occupied[dot] = state[i] >= 1 and not (a.kind == "empty" and a.target == dot)
        if a.kind == "pulse":
            if not occupied[a.target]:
                diags.append(Diagnostic(k, line, "empty-dot", f"pulse on the {a.target} dot while it is empty"))
            if a.duration > step.dwell:
                diags.append(Diagnostic(k, line, "pulse-overrun", "pulse longer than the step dwell"))
        prev = state
    return diags


@dataclass(frozen=True)
class TimelineEntry:
    t: float
    point: str
    charge_state: tuple[int, int]
    spin_up: tuple[float | None, float | None]


@dataclass(frozen=True)
class ExecutionRecord:
    timeline: tuple[TimelineEntry, ...]
    outcomes: tuple[tuple[int, str, int], ...]  # (step index, dot, 1 = spin up)
    spin_up: dict[str, float | None]

    def as_dict(self) -> dict[str, Any]:
        return {
            "outcomes": [{"step": s, "dot": d, "up": u} for s, d, u in self.outcomes],
            "spin_up": self.spin_up,
        }


def _p_up(state) -> float | None:
    return None if state is None else float(abs(state[0]) ** 2)


def _run_shot(program: SequenceProgram, models: Models, path, seed: int, shot: int) -> ExecutionRecord:
    rng = stream(seed, shot)
    spins: dict[str, np.ndarray | None] = {"left": None, "right": None}
    timeline = []
    outcomes = []
    sensor_err = models.sensor_error()
    f_L = models.spin.f_L
    E_z = models.spin.E_z
    t = 0.0
    prev = None
    for k, (step, state) in enumerate(zip(program.steps, path)):
        t += step.ramp
        a = step.action
        for i, dot in enumerate(DOTS):
            if a.kind == "measure_ero" and a.target == dot:
                continue
            if state[i] == 0:
                spins[dot] = None
            elif spins[dot] is None:
                spins[dot] = dyn.DOWN.copy()  # only the ground state is below the reservoir
        if a.kind == "init":
            for dot in DOTS:
                if spins[dot] is not None:
                    spins[dot] = dyn.DOWN.copy()
        elif a.kind == "pulse":
            detuning = 0.0 if a.f is None else a.f - f_L
            for dot in DOTS:
                scale = 1.0 if dot == a.target else models.crosstalk
                if spins[dot] is None or scale == 0:
                    continue
                u = dyn.propagator_rwa(
                    dyn.RotatingFramePulse(models.drive.f_R * scale, detuning, a.phase + models.drive.phase, a.duration)
                )
                spins[dot] = u.apply(spins[dot])
        elif a.kind == "measure_ero":
            dot = a.target
            psi = spins[dot]
            p_up = 0.0 if psi is None else _p_up(psi)
            spin = "ES" if rng.random() < p_up else "GS"
            mu = _ero_level(program, step, dot, prev if prev is not None else state, models.dqd)
            trace = ero_trace((mu + E_z / 2, mu - E_z / 2), models.tunnel, spin, step.dwell, rng)
            seen = trace.decision == "ES"
            if sensor_err and rng.random() < sensor_err:
                seen = not seen
            outcomes.append((k, dot, int(seen)))
            reloaded = trace.count("tunnel_in") > 0 or spin == "GS"
            spins[dot] = dyn.DOWN.copy() if reloaded else None
        elif a.kind == "empty":
            spins[a.target] = None
        timeline.append(TimelineEntry(t, step.point, state, (_p_up(spins["left"]), _p_up(spins["right"]))))
        t += step.dwell
        prev = state
    first = {}
    for _, dot, up in outcomes:
        first.setdefault(dot, float(up))
    return ExecutionRecord(tuple(timeline), tuple(outcomes), {d: first.get(d) for d in DOTS})


def execute(
    program: SequenceProgram,
    models: Models,
    shots: int,
    seed: int,
    jobs: int = 1,
) -> list[ExecutionRecord]:
    """Run ``shots`` independent repetitions; shot ``i`` draws from ``(seed, i)``."""
    if seed is None:
        raise ValueError("execute needs an explicit seed")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    diags = validate(program, models.dqd, models.spin.E_z)
    if diags:
        raise SequenceValidationError(diags)
    path = charge_path(program, models.dqd)

    def work(block: range) -> list[ExecutionRecord]:
        return [_run_shot(program, models, path, seed, i) for i in block]

    parts = pmap(work, chunks(shots, 128), jobs)
    return [r for part in parts for r in part]


def spin_up_estimates(records: list[ExecutionRecord], z: float = 1.959963984540054) -> dict[str, dict[str, float]]:
    """Per-dot spin-up fraction with a Wilson score interval at ``z`` sigma."""
    out = {}
    for dot in DOTS:
        vals = [r.spin_up[dot] for r in records if r.spin_up.get(dot) is not None]
        n = len(vals)
        if n == 0:
            continue
        k = sum(vals)
        p = k / n
        denom = 1 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        out[dot] = {
            "p_up": p,
            "n": n,
            "std": math.sqrt(p * (1 - p) / n),
            "ci_low": max(0.0, centre - half),
            "ci_high": min(1.0, centre + half),
        }
    return out
