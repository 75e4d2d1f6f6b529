"""Command-line entry point.

Parameter precedence: built-in defaults < ``--config`` JSON section named
after the subcommand < command-line flags. Stochastic subcommands need
``--seed`` or ``SPINSIM_SEED``. Every run appends one JSON line to
``runs.log`` in the output directory.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

from . import __version__
from . import budget as bud
from . import dynamics as dyn
from .config import config_hash, load_config, models_from_dict, models_to_dict, tia_from
from .constants import CODATA2018, gyromagnetic_ratio, min_splitting_for_temperature, rotation_duration
from .parallel import SEED_ENV, seed_from_env, stream
from .pulsegen import (
    DEFAULT_ALPHA_I,
    DEFAULT_ALPHA_V,
    DriveConversion,
    SwitchSpec,
    VcoSpec,
    drive_field,
    envelope_area,
    estimate_phase_noise,
    gate_switch,
    phase_noise_psd,
    startup_settling_time,
    switch_envelope,
    synthesize_vco,
    synthesize_vco_envelope,
)
from .readout import spin_to_charge as stc
from .readout import tia as tia_mod
from .readout.stability import stability_map
from .sequence import bundled_fig3, charge_path, execute, parse_sequence, serialize, spin_up_estimates, validate

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2
SUBCOMMANDS = ("constants", "budget", "pulse", "rabi", "rwa", "readout", "sweep", "sequence")


class ValidationError(Exception):
    pass


# ----------------------------------------------------------------- output


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, obj: Any) -> Path:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())
    return path


def write_table(ctx: "Context", stem: str, rows: list[tuple[str, Any]]) -> Path:
    """``parameter,value`` table as CSV, or a flat JSON object."""
    if ctx.format == "json":
        return write_json(ctx.out / f"{stem}.json", {k: v for k, v in rows})
    return write_csv(ctx.out / f"{stem}.csv", ["parameter", "value"], [list(r) for r in rows])


class Context:
    def __init__(self, out: Path, fmt: str, seed: int | None, jobs: int, plot: bool):
        self.out = out
        self.format = fmt
        self.seed = seed
        self.jobs = jobs
        self.plot = plot
        self.written: list[Path] = []

    def need_seed(self, what: str) -> int:
        if self.seed is None:
            raise ValidationError(f"{what} is stochastic: pass --seed or set {SEED_ENV}")
        return self.seed


# ------------------------------------------------------------ subcommands


def cmd_constants(p, models, ctx: Context) -> dict:
    E_min, f_min = min_splitting_for_temperature(p.temperature)
    rows = list(CODATA2018.as_dict().items())
    rows += [
        ("g_mu_B_over_h_Hz_per_T", gyromagnetic_ratio(2.0)),
        ("temperature_K", p.temperature),
        ("min_splitting_eV", E_min),
        ("min_splitting_meV", E_min * 1e3),
        ("min_larmor_Hz", f_min),
    ]
    ctx.written.append(write_table(ctx, "constants", rows))
    return dict(rows)


def cmd_budget(p, models, ctx: Context) -> dict:
    entries = []
    sigma_pn = None
    if p.pn is not None:
        sigma_pn = bud.pn_to_rms_detuning(p.pn, p.fr)
        entries.append(
            bud.BudgetEntry(
                "pn",
                bud.detuning_infidelity(sigma_pn, p.fr),
                {"pn_at_1MHz": p.pn, "rms_detuning_Hz": sigma_pn, "kappa": bud.DEFAULT_CALIBRATION.kappa},
            )
        )
    if p.df is not None:
        entries.append(bud.BudgetEntry("carrier-detuning", bud.detuning_infidelity(p.df, p.fr), {"detuning_Hz": p.df}))
    if p.dt_frac is not None:
        entries.append(
            bud.BudgetEntry(
                "timing",
                bud.timing_infidelity(p.dt_frac),
                {"epsilon": p.dt_frac, "timing_tolerance_s": bud.timing_tolerance(p.fr, p.dt_frac)},
            )
        )
    if p.ratio is not None:
        entries.append(bud.BudgetEntry("rwa", dyn.rwa_gate_infidelity(p.ratio), {"f_L_over_f_R": p.ratio}))
    if not entries:
        raise ValidationError("budget needs at least one source (--pn, --df, --dt-frac or --ratio)")
    report = bud.budget_report(p.target, entries, p.slots)
    report["f_R"] = p.fr
    if p.mc_trials:
        seed = ctx.need_seed("budget --mc-trials")
        noise = bud.NoiseModel(
            detuning_offset=p.df or 0.0,
            detuning_sigma=sigma_pn or 0.0,
            timing_sigma=p.dt_frac or 0.0,
        )
        report["monte_carlo"] = bud.mc_gate_infidelity(noise, p.fr, p.mc_trials, seed, ctx.jobs).as_dict()
    ctx.written.append(write_json(ctx.out / "budget.json", report))
    if ctx.format == "csv":
        rows = [[r["source"], r["infidelity"], r["allocation"], r["overrun"]] for r in report["sources"]]
        ctx.written.append(write_csv(ctx.out / "budget.csv", ["source", "infidelity", "allocation", "overrun"], rows))
    if ctx.plot:
        from .plotting import plot_budget

        ctx.written.append(plot_budget(report, ctx.out / "budget.png"))
    return {"total_infidelity": report["total_infidelity"], "pass": report["pass"]}


def cmd_pulse(p, models, ctx: Context) -> dict:
    seed = ctx.need_seed("pulse")
    vco = VcoSpec(f_c=p.fc, pn_at_1MHz=p.pn, amplitude=p.amplitude, startup_tau=p.startup_tau)
    t_on = p.t_on if p.t_on is not None else rotation_duration(math.pi / 2, p.fr)
    edge = bud.timing_tolerance(p.fr, p.dt_frac) / 2.0
    rise = edge if p.rise is None else p.rise
    fall = edge if p.fall is None else p.fall
    t_start = p.t_start if p.t_start is not None else (startup_settling_time(vco) if p.startup else 20e-12)
    sw = SwitchSpec(t_start=t_start, t_on=t_on, rise=rise, fall=fall, off_isolation=p.isolation)
    duration = p.duration if p.duration is not None else sw.t_stop + 50e-12
    fs = p.fs if p.fs is not None else 8.0 * p.fc
    if p.envelope:
        w = synthesize_vco_envelope(vco, duration, fs, seed, startup=p.startup)
    else:
        w = synthesize_vco(vco, duration, fs, seed, startup=p.startup)
    g = gate_switch(w, sw)
    if p.mode == "ESR":
        g = g.replace(g.samples / 1.0e3, unit="ampere")  # 1 V across a 1 kOhm line
    alpha = p.alpha if p.alpha is not None else (DEFAULT_ALPHA_I if p.mode == "ESR" else DEFAULT_ALPHA_V)
    if p.output == "field":
        g = drive_field(g, DriveConversion(p.mode, alpha))
    area = envelope_area(sw)
    g = g.replace(
        meta=dict(
            g.meta,
            metrics={"envelope_area_s": area, "carrier_cycles": area * p.fc, "commanded_on_s": t_on},
            vco={"f_c": p.fc, "pn_at_1MHz": p.pn, "amplitude": p.amplitude, "startup_tau": p.startup_tau},
        )
    )
    ctx.written.append(g.to_csv(ctx.out / "pulse.csv"))
    ctx.written.append(ctx.out / "pulse.json")
    out = {"carrier_cycles": area * p.fc, "envelope_area_s": area, "samples": len(g)}
    if p.pn_ensemble:
        offsets = np.array([1e6, 2e6, 5e6, 10e6])
        ens = [synthesize_vco(vco, p.pn_duration, 4.0 * p.fc, int(stream(seed, k).integers(2**63))) for k in range(p.pn_ensemble)]
        L = estimate_phase_noise(ens, offsets)
        rows = [[f, v, p.pn - 20 * math.log10(f / 1e6)] for f, v in zip(offsets, L)]
        ctx.written.append(write_csv(ctx.out / "phase_noise.csv", ["offset_Hz", "L_dBc_per_Hz", "target_dBc_per_Hz"], rows))
        out["pn_at_1MHz_measured"] = float(L[0])
        if ctx.plot:
            from .plotting import plot_phase_noise

            f, Lf = phase_noise_psd(ens)
            m = (f >= 2e5) & (f <= 5e7)
            ctx.written.append(plot_phase_noise(f[m], 10 * np.log10(Lf[m]), ctx.out / "phase_noise.png", p.pn))
    if ctx.plot:
        from .plotting import plot_pulse

        samples = g.samples.real if g.is_baseband else g.samples
        env = switch_envelope(sw, g.time)
        ctx.written.append(plot_pulse(g.time, samples, env, ctx.out / "pulse.png", f"pi/2 pulse, f_R = {p.fr / 1e6:g} MHz"))
    return out


def cmd_rabi(p, models, ctx: Context) -> dict:
    duration = p.duration if p.duration is not None else rotation_duration(math.pi / 2, p.fr)
    pulse = dyn.RotatingFramePulse(f_R=p.fr, detuning=p.detuning, phase=p.phase, duration=duration)
    u = dyn.propagator_rwa(pulse)
    angle = 2 * math.pi * p.fr * duration
    ideal = dyn.rotation(angle, (math.cos(p.phase), math.sin(p.phase), 0.0))
    rows = [
        ("f_R_Hz", p.fr),
        ("detuning_Hz", p.detuning),
        ("phase_rad", p.phase),
        ("duration_s", duration),
        ("rotation_angle_rad", angle),
        ("p_up", dyn.rabi_lineshape(p.fr, p.detuning, duration)),
        ("p_up_propagator", u.transition_probability()),
        ("infidelity_worst_case", dyn.infidelity(u, ideal).infidelity),
        ("infidelity_average_gate", dyn.infidelity(u, ideal, "average-gate").infidelity),
    ]
    ctx.written.append(write_table(ctx, "rabi", rows))
    if ctx.plot:
        from .plotting import plot_rabi

        t = np.linspace(0, 2.0 / max(p.fr, 1.0), 400)
        ctx.written.append(plot_rabi(t, dyn.rabi_lineshape(p.fr, p.detuning, t), ctx.out / "rabi.png",
                                     f"f_R = {p.fr / 1e6:g} MHz, detuning = {p.detuning / 1e6:g} MHz"))
    return dict(rows)


def cmd_rwa(p, models, ctx: Context) -> dict:
    phases, vals = dyn.rwa_phase_scan(p.ratio, p.phases, p.samples_per_cycle)
    rows = [
        ("ratio", p.ratio),
        ("phase_grid_points", p.phases),
        ("infidelity_phase0", float(vals[0])),
        ("infidelity_worst", float(vals.max())),
        ("fidelity_worst", 1.0 - float(vals.max())),
    ]
    if p.phase is not None:
        rows.append(("infidelity_at_phase", dyn.rwa_gate_infidelity(p.ratio, p.phase, samples_per_cycle=p.samples_per_cycle)))
    ctx.written.append(write_table(ctx, "rwa", rows))
    if ctx.plot:
        from .plotting import plot_rwa

        ratios = sorted({5.0, 10.0, 20.0, 40.0, 80.0, float(p.ratio)})
        scans = [dyn.rwa_phase_scan(r, p.phases, p.samples_per_cycle)[1] for r in ratios]
        ctx.written.append(plot_rwa(ratios, [s.max() for s in scans], [s[0] for s in scans], ctx.out / "rwa.png"))
    return dict(rows)


def _rate(errors: int, n: int, predicted: float) -> dict:
    return {
        "errors": errors,
        "trials": n,
        "empirical": errors / n,
        "predicted": predicted,
        "sigma": math.sqrt(predicted * (1 - predicted) / n),
    }


def readout_rates(scheme: str, ts: stc.TunnelSpec, trials: int, seed: int, window: float, tau: float,
                  latency: float | None = None) -> dict[str, dict]:
    """Monte Carlo misclassification rates per prepared state for one readout scheme."""
    if scheme == "trro":
        out = {}
        pred = stc.trro_error_probabilities(ts, tau)
        for k, spin in enumerate(("ES", "GS")):
            said_es = stc.trro_decisions(ts, tau, spin, trials, stream(seed, k))
            wrong = int(np.count_nonzero(said_es != (spin == "ES")))
            out[spin] = _rate(wrong, trials, pred[spin])
        return out
    if scheme == "ero":
        level = (1e-4, -1e-4)
        out = {}
        for k, spin in enumerate(("ES", "GS")):
            wrong = sum(
                stc.ero_trace(level, ts, spin, window, stream(seed, k, i)).decision != spin for i in range(trials)
            )
            out[spin] = _rate(int(wrong), trials, stc.ero_miss_probability(ts, window) if spin == "ES" else 0.0)
        return out
    if scheme == "blockade":
        lat = 0.01 * window if latency is None else latency
        out = {}
        for k, state in enumerate(("S", "T0")):
            wrong = sum(
                stc.spin_blockade_trace(state, window, ts.T1, stream(seed, k, i), lat).decision != state[0]
                for i in range(trials)
            )
            out[state] = _rate(int(wrong), trials, 0.0 if state == "S" else -math.expm1(-lat / ts.T1))
        return out
    raise ValidationError(f"unknown readout scheme {scheme!r}")


def cmd_readout(p, models, ctx: Context) -> dict:
    seed = ctx.need_seed("readout")
    ts = models.tunnel
    if p.trials < 100:
        raise ValidationError("readout needs --trials >= 100")
    rates = readout_rates(p.scheme, ts, p.trials, seed, p.window, p.tau, p.latency)
    report = {
        "scheme": p.scheme,
        "trials": p.trials,
        "window_s": p.window,
        "tau_s": p.tau,
        "tunnel": models_to_dict(models)["tunnel"],
        "rates": rates,
    }
    if ctx.format == "json":
        ctx.written.append(write_json(ctx.out / "readout.json", report))
    else:
        rows = [[k, v["empirical"], v["predicted"], v["sigma"], v["trials"]] for k, v in rates.items()]
        ctx.written.append(write_csv(ctx.out / "readout.csv", ["state", "error_rate", "predicted", "sigma", "trials"], rows))
    if ctx.plot:
        from .plotting import plot_readout_trace

        tia = tia_from(p.tia) if p.tia else models.tia
        fs = tia_mod.MIN_OVERSAMPLING * tia.f3db
        window = min(p.trace_window, p.window)
        trace = stc.EventTrace((stc.Event(0.2 * window, "tunnel_out"),), window, "ES")
        i = tia_mod.events_to_current(trace, p.i_peak, 0.5 * window, fs)
        v = tia_mod.tia_response(i, tia, stream(seed, 99))
        ctx.written.append(plot_readout_trace(i.time, i.samples, v.samples, ctx.out / "readout.png",
                                              f"{p.scheme}: one tunnelling event through the {tia.temperature_tag} TIA"))
    return {k: v["empirical"] for k, v in rates.items()}


def cmd_sweep(p, models, ctx: Context) -> dict:
    seed = ctx.need_seed("sweep")
    tia = tia_from(p.tia) if p.tia else models.tia
    rows = tia_mod.readout_error_sweep(p.i_peaks, p.windows, tia, p.trials, seed, jobs=ctx.jobs)
    if ctx.format == "json":
        ctx.written.append(write_json(ctx.out / "sweep.json", {"tia": tia.temperature_tag, "rows": rows}))
    else:
        ctx.written.append(
            write_csv(ctx.out / "sweep.csv", ["i_peak", "window", "error_rate", "snr"],
                      [[r["i_peak"], r["window"], r["error_rate"], r["snr"]] for r in rows])
        )
    if ctx.plot:
        from .plotting import plot_sweep

        ctx.written.append(plot_sweep(rows, ctx.out / "sweep.png"))
    return {"cells": len(rows)}


def _read_program(path: str):
    f = Path(path)
    if not f.exists() and f.name == "fig3.seq":
        return parse_sequence(bundled_fig3())
    try:
        return parse_sequence(f.read_bytes())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None


def cmd_sequence(p, models, ctx: Context) -> dict:
    program = _read_program(p.file)
    if p.action == "fmt":
        text = serialize(program)
        target = ctx.out / (Path(p.file).stem + ".canonical.seq")
        target.write_text(text)
        ctx.written.append(target)
        return {"points": len(program.points), "steps": len(program.steps)}
    diags = validate(program, models.dqd, models.spin.E_z)
    path = charge_path(program, models.dqd)
    if p.action == "check":
        ctx.written.append(
            write_json(ctx.out / "diagnostics.json", {
                "charge_path": [list(s) for s in path],
                "diagnostics": [d.__dict__ for d in diags],
            })
        )
        if diags:
            raise ValidationError("; ".join(f"line {d.line}: {d.message}" for d in diags))
        return {"diagnostics": 0}
    seed = ctx.need_seed("sequence run")
    if diags:
        raise ValidationError("; ".join(f"line {d.line}: {d.message}" for d in diags))
    if p.shots < 1:
        raise ValidationError("--shots must be >= 1")
    records = execute(program, models, p.shots, seed, ctx.jobs)
    est = spin_up_estimates(records)
    est3 = spin_up_estimates(records, z=3.0)
    for dot in est:
        est[dot]["ci3_low"] = est3[dot]["ci_low"]
        est[dot]["ci3_high"] = est3[dot]["ci_high"]
    result = {
        "shots": p.shots,
        "seed": seed,
        "charge_path": [list(s) for s in path],
        "estimates": est,
        "outcomes": [[[s, d, bool(u)] for s, d, u in r.outcomes] for r in records],
    }
    ctx.written.append(write_json(ctx.out / "sequence.json", result))
    rows = []
    for k, r in enumerate(records):
        for e in r.timeline:
            rows.append([k, e.t, e.point, e.charge_state[0], e.charge_state[1], e.spin_up[0], e.spin_up[1]])
    ctx.written.append(
        write_csv(ctx.out / "timeline.csv", ["shot", "t_s", "point", "n_L", "n_R", "p_up_left", "p_up_right"], rows)
    )
    if ctx.plot:
        from .plotting import plot_stability

        vl = [pt.vl for pt in program.points.values()]
        vr = [pt.vr for pt in program.points.values()]
        span = max(max(vl) - min(vl), max(vr) - min(vr), 1e-3)
        VL, VR = np.meshgrid(
            np.linspace(min(vl) - 0.2 * span, max(vl) + 0.2 * span, 300),
            np.linspace(min(vr) - 0.2 * span, max(vr) + 0.2 * span, 300),
        )
        occ = stability_map(VL, VR, models.dqd)
        pts = {n: (pt.vl, pt.vr) for n, pt in program.points.items()}
        order = [s.point for s in program.steps]
        ctx.written.append(plot_stability(VL, VR, occ, ctx.out / "stability.png", pts, order))
    return {dot: v["p_up"] for dot, v in est.items()}


# ----------------------------------------------------------------- parser

DEFAULTS: dict[str, dict[str, Any]] = {
    "constants": {"temperature": 3.0},
    "budget": {"target": 0.999, "fr": 750e6, "pn": None, "dt_frac": None, "df": None, "ratio": None,
               "slots": 8, "mc_trials": 0},
    "pulse": {"fc": 60e9, "pn": -90.0, "fs": None, "fr": 750e6, "t_on": None, "t_start": None, "dt_frac": 0.014,
              "rise": None, "fall": None, "isolation": 40.0, "duration": None, "amplitude": 0.8,
              "startup_tau": 50e-12, "startup": True, "mode": "EDSR", "alpha": None, "output": "voltage",
              "envelope": False, "pn_ensemble": 0, "pn_duration": 4e-6},
    "rabi": {"fr": 750e6, "detuning": 0.0, "duration": None, "phase": 0.0},
    "rwa": {"ratio": 5.0, "phase": None, "phases": 8, "samples_per_cycle": 200.0},
    "readout": {"scheme": "trro", "trials": 10000, "window": 1e-6, "tau": 1e-6, "latency": None, "tia": None,
                "i_peak": 10e-9, "trace_window": 20e-9},
    "sweep": {"i_peaks": [1e-11, 1e-10, 1e-9, 1e-8], "windows": [1e-8, 1e-7], "trials": 200, "tia": None},
    "sequence": {"shots": 1000},
}
STOCHASTIC = {"pulse", "readout", "sweep", "sequence"}


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config; flags override its values")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=None, help=f"master seed (fallback: ${SEED_ENV})")
    common.add_argument("--jobs", type=int, default=1, help="worker threads; results do not depend on it")
    common.add_argument("--plot", action="store_true", help="also render PNG figures next to the data")

    parser = argparse.ArgumentParser(prog="spinsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"spinsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    N = argparse.SUPPRESS

    s = sub.add_parser("constants", parents=[common], help="CODATA constants and thermal splitting")
    s.add_argument("--temperature", type=float, default=N)

    s = sub.add_parser("budget", parents=[common], help="pi/2 gate infidelity budget (JSON)")
    s.add_argument("--target", type=float, default=N)
    s.add_argument("--fr", type=float, default=N, help="Rabi frequency (Hz)")
    s.add_argument("--pn", type=float, default=N, help="VCO phase noise at 1 MHz (dBc/Hz)")
    s.add_argument("--dt-frac", type=float, default=N, help="fractional pulse-duration error")
    s.add_argument("--df", type=float, default=N, help="static carrier detuning (Hz)")
    s.add_argument("--ratio", type=float, default=N, help="add the RWA term for this f_L/f_R")
    s.add_argument("--slots", type=int, default=N, help="number of equal budget allocations")
    s.add_argument("--mc-trials", type=int, default=N, help="also run a Monte Carlo check")

    s = sub.add_parser("pulse", parents=[common], help="synthesise a gated VCO pulse (CSV + JSON sidecar)")
    for flag in ("fc", "pn", "fs", "fr", "t-on", "t-start", "dt-frac", "rise", "fall", "isolation", "duration",
                 "amplitude", "startup-tau", "alpha", "pn-duration"):
        s.add_argument(f"--{flag}", type=float, default=N)
    s.add_argument("--no-startup", dest="startup", action="store_false", default=N)
    s.add_argument("--mode", choices=("ESR", "EDSR"), default=N)
    s.add_argument("--output", choices=("voltage", "field"), default=N)
    s.add_argument("--envelope", action="store_true", default=N, help="emit the complex baseband envelope")
    s.add_argument("--pn-ensemble", type=int, default=N, help="estimate L(f) from this many realisations")

    s = sub.add_parser("rabi", parents=[common], help="rotating-frame Rabi pulse")
    for flag in ("fr", "detuning", "duration", "phase"):
        s.add_argument(f"--{flag}", type=float, default=N)

    s = sub.add_parser("rwa", parents=[common], help="counter-rotating infidelity floor of a pi/2 gate")
    s.add_argument("--ratio", type=float, default=N, help="f_L / f_R")
    s.add_argument("--phase", type=float, default=N)
    s.add_argument("--phases", type=int, default=N, help="phase grid size for the worst case")
    s.add_argument("--samples-per-cycle", type=float, default=N)
    s.add_argument("--seedless", action="store_true", help="accepted for symmetry; the run is deterministic")

    s = sub.add_parser("readout", parents=[common], help="spin-to-charge Monte Carlo error rates")
    s.add_argument("--scheme", choices=("ero", "trro", "blockade"), default=N)
    s.add_argument("--trials", type=int, default=N)
    for flag in ("window", "tau", "latency", "i-peak", "trace-window"):
        s.add_argument(f"--{flag}", type=float, default=N)
    s.add_argument("--tia", choices=sorted(tia_mod.TIA_MODELS), default=N)

    s = sub.add_parser("sweep", parents=[common], help="readout error rate over peak current and window")
    s.add_argument("--i-peaks", type=_floats, default=N, help="comma-separated currents (A)")
    s.add_argument("--windows", type=_floats, default=N, help="comma-separated windows (s)")
    s.add_argument("--trials", type=int, default=N)
    s.add_argument("--tia", choices=sorted(tia_mod.TIA_MODELS), default=N)

    s = sub.add_parser("sequence", parents=[common], help="parse, check, format or run a .seq program")
    s.add_argument("action", choices=("run", "check", "fmt"))
    s.add_argument("file", help="sequence file (fig3.seq falls back to the bundled copy)")
    s.add_argument("--shots", type=int, default=N)
    return parser


def _resolve(command: str, args: argparse.Namespace, config: dict) -> argparse.Namespace:
    params = dict(DEFAULTS[command])
    section = config.get(command, {})
    if not isinstance(section, dict):
        raise ValidationError(f"config section {command!r} must be an object")
    unknown = set(section) - set(params) - {"file", "action"}
    if unknown:
        raise ValidationError(f"unknown {command} config keys: {sorted(unknown)}")
    params.update(section)
    flags = vars(args)
    for key in list(DEFAULTS[command]) + ["file", "action", "seedless"]:
        if key in flags:
            params[key] = flags[key]
    return argparse.Namespace(**params)


def _manifest(ctx: Context, command: str, params: argparse.Namespace, models_d: dict) -> None:
    record = {
        "subcommand": command,
        "config_hash": config_hash({"params": vars(params), "models": models_d, "format": ctx.format}),
        "seed": ctx.seed,
        "versions": {
            "spinsim": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "outputs": sorted(p.name for p in ctx.written),
    }
    with (ctx.out / "runs.log").open("a") as fh:
        fh.write(json.dumps(_clean(record), sort_keys=True) + "\n")


COMMANDS: dict[str, Callable] = {
    "constants": cmd_constants,
    "budget": cmd_budget,
    "pulse": cmd_pulse,
    "rabi": cmd_rabi,
    "rwa": cmd_rwa,
    "readout": cmd_readout,
    "sweep": cmd_sweep,
    "sequence": cmd_sequence,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        config = load_config(args.config)
        stray = sorted(k for k in config if not k.startswith("_") and k not in SUBCOMMANDS and k != "models")
        if stray:
            raise ValidationError(f"unknown config sections: {stray}")
        params = _resolve(args.command, args, config)
        models_section = config.get("models")
        models = models_from_dict(models_section)
        if args.jobs < 1:
            raise ValidationError("--jobs must be >= 1")
        seed = seed_from_env(args.seed)
        args.out.mkdir(parents=True, exist_ok=True)
        ctx = Context(args.out, args.format, seed, args.jobs, args.plot)
        summary = COMMANDS[args.command](params, models, ctx)
        _manifest(ctx, args.command, params, models_to_dict(models))
    except (ValidationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"spinsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for path in ctx.written:
        print(path)
    if summary:
        print(json.dumps(_clean(summary), sort_keys=True))
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
