import math
import warnings

import numpy as np
import pytest
from scipy import signal

import oracles
from spinsim.readout import tia
from spinsim.readout.spin_to_charge import Event, EventTrace
from spinsim.waveform import Waveform

MODELS = [tia.TIA_300K, tia.TIA_77K]


def fs_for(m):
    return 10 * m.f3db


def dc(m, i, n=4000, seed=None):
    return tia.tia_response(Waveform(np.full(n, i), fs=fs_for(m), unit="ampere"), m, seed)


@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.temperature_tag)
def test_dc_gain(m):
    v = dc(m, 10e-9)
    assert 20 * math.log10(v.samples[-1] / 10e-9) == pytest.approx(m.z21_db_ohm, abs=0.01)


def test_dc_output_300k():
    assert dc(tia.TIA_300K, 10e-9).samples[-1] == pytest.approx(2.66e-3, rel=0.02)


@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.temperature_tag)
def test_three_db_point(m):
    fs = fs_for(m)
    n = 20000
    t = np.arange(n) / fs
    x = 1e-9 * np.sin(2 * math.pi * m.f3db * t)
    y = tia.tia_response(Waveform(x, fs=fs, unit="ampere"), m.noiseless()).samples[n // 2 :]
    ph = 2 * math.pi * m.f3db * t[n // 2 :]
    # in-phase/quadrature projection over whole cycles
    amp = math.hypot(2 * np.mean(y * np.sin(ph)), 2 * np.mean(y * np.cos(ph))) / (1e-9 * m.z0)
    assert amp == pytest.approx(1 / math.sqrt(2), rel=0.01)


@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.temperature_tag)
def test_transfer_analog_reference(m):
    f = np.array([0.0, 1e9, m.f3db, 2 * m.f3db])
    got = np.abs(tia.transfer(m, f)) / m.z0
    ref = [oracles.three_pole_gain(x, m.f3db) for x in f]
    np.testing.assert_allclose(got, ref, rtol=1e-12)
    assert abs(tia.transfer(m, m.f3db, fs_for(m))) / m.z0 == pytest.approx(1 / math.sqrt(2), rel=1e-9)


@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.temperature_tag)
def test_noise_psd(m):
    fs = fs_for(m)
    acc = 0
    for s in range(16):
        v = tia.tia_response(Waveform(np.zeros(2**14), fs=fs, unit="ampere"), m, s)
        f, p = signal.welch(v.samples, fs=fs, nperseg=1024)
        acc = acc + p
    p = acc / 16
    band = (f > 0.5e9) & (f < 1.5 * m.f3db)
    ref = np.abs(tia.transfer(m, f[band], fs)) ** 2 * m.in_noise**2
    err_db = 10 * np.log10(p[band] / ref)
    assert np.max(np.abs(err_db)) < 1.5


def test_zero_input_noiseless():
    v = dc(tia.TIA_300K, 0.0)
    assert np.all(v.samples == 0)


def test_models_differ_only_in_parameters():
    a = dc(tia.TIA_300K, 1e-9, seed=0)
    b = dc(tia.TIA_77K, 1e-9, seed=0)
    assert a.meta["tia"] == "300K" and b.meta["tia"] == "77K"


def test_undersampling_rejected():
    with pytest.raises(ValueError, match="undersampled"):
        tia.tia_response(Waveform(np.zeros(10), fs=100e9, unit="ampere"), tia.TIA_300K)
    with pytest.raises(ValueError):
        tia.tia_response(Waveform(np.zeros(10), fs=1e12, unit="volt"), tia.TIA_300K)


def test_seed_determinism():
    a = dc(tia.TIA_300K, 1e-9, seed=3)
    b = dc(tia.TIA_300K, 1e-9, seed=3)
    assert a.samples.tobytes() == b.samples.tobytes()


@pytest.mark.parametrize("kw", [dict(z21_db_ohm=0.0), dict(f3db=0.0), dict(n_poles=0), dict(in_noise=-1.0)])
def test_model_domain(kw):
    with pytest.raises(ValueError):
        tia.TiaModel(**(dict(z21_db_ohm=100.0, f3db=1e9) | kw))


def test_events_to_current():
    fs = 180e9
    empty = tia.events_to_current(EventTrace((), 1e-9, "GS"), 10e-9, 0.1e-9, fs)
    assert np.all(empty.samples == 0)
    one = tia.events_to_current(EventTrace((Event(0.2e-9, "tunnel_out"),), 1e-9, "ES"), 10e-9, 0.1e-9, fs)
    assert one.samples.max() == 10e-9
    assert np.count_nonzero(one.samples) == round(0.1e-9 * fs)
    two = EventTrace((Event(0.2e-9, "tunnel_out"), Event(0.25e-9, "tunnel_in")), 1e-9, "ES")
    assert tia.events_to_current(two, 10e-9, 0.1e-9, fs).samples.max() == pytest.approx(20e-9)
    with pytest.raises(ValueError):
        tia.events_to_current(two, 10e-9, 10e-12, fs)


def test_events_to_current_range_warning():
    tr = EventTrace((Event(0.2e-9, "tunnel_out"),), 1e-9, "ES")
    with pytest.warns(UserWarning):
        tia.events_to_current(tr, 1e-6, 0.1e-9, 180e9)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tia.events_to_current(tr, 10e-12, 0.1e-9, 180e9)


def test_detect_noiseless_plateau():
    v = dc(tia.TIA_300K, 10e-9, n=2000)
    d = tia.detect(v, (5e-9, 1e-8), 1.33e-3)
    assert d.decision and d.mean == pytest.approx(2.66e-3, rel=0.02)
    with pytest.raises(ValueError):
        tia.detect(v, (0.0, 1.0), 1e-3)


def test_boxcar_std_against_monte_carlo():
    m = tia.TIA_300K
    fs = fs_for(m)
    n = 500
    means = []
    for s in range(1000):
        v = tia.tia_response(Waveform(np.zeros(n), fs=fs, unit="ampere"), m, s)
        means.append(v.samples.mean())
    pred = tia.boxcar_noise_std(m, fs, n)
    assert np.std(means, ddof=1) == pytest.approx(pred, rel=0.1)


def test_snr_scaling():
    snr = tia.matched_filter_snr(10e-12, 1 / 18e9, 0.89e-12)
    assert snr < 0.01
    assert tia.matched_filter_snr(10e-12, 4e-6, 0.89e-12) == pytest.approx(2 * tia.matched_filter_snr(10e-12, 1e-6, 0.89e-12))
    assert tia.matched_filter_snr(1e-9, 1e-6, 0.0) == math.inf


def test_long_window_snr_approaches_matched_filter():
    m = tia.TIA_300K
    fs = fs_for(m)
    n = 200_000
    sigma = tia.boxcar_noise_std(m, fs, n)
    snr = 1e-9 * m.z0 / sigma
    assert snr == pytest.approx(tia.matched_filter_snr(1e-9, n / fs, m.in_noise), rel=0.01)


def test_sweep_noiseless_zero():
    rows = tia.readout_error_sweep([1e-11, 1e-9], [1e-9], tia.TIA_300K.noiseless(), 100, 0)
    assert [r["error_rate"] for r in rows] == [0.0, 0.0]


def test_sweep_matches_q_function():
    rows = tia.readout_error_sweep([3e-9, 6e-9], [5e-8], tia.TIA_300K, 2000, 7)
    for r in rows:
        p = r["predicted_error"]
        assert p == pytest.approx(float(tia.q_function(r["snr"] / 2)))
        assert abs(r["error_rate"] - p) <= 3 * math.sqrt(p * (1 - p) / r["trials"])


def test_sweep_monotone_and_jobs_independent():
    args = ([1e-10, 1e-9, 1e-8], [1e-8, 1e-7], tia.TIA_300K, 400, 5)
    a = tia.readout_error_sweep(*args, jobs=1)
    b = tia.readout_error_sweep(*args, jobs=3)
    assert a == b
    grid = np.array([r["error_rate"] for r in a]).reshape(3, 2)
    pred = np.array([r["predicted_error"] for r in a]).reshape(3, 2)
    sd = np.sqrt(pred * (1 - pred) / 400) + 1 / 400
    # non-increasing within statistical slack
    assert np.all(np.diff(grid, axis=0) <= 3 * (sd[1:] + sd[:-1]))
    assert np.all(np.diff(grid, axis=1) <= 3 * (sd[:, 1:] + sd[:, :-1]))
    assert np.all(np.diff(pred, axis=0) <= 0) and np.all(np.diff(pred, axis=1) <= 0)


def test_sweep_preconditions():
    with pytest.raises(ValueError):
        tia.readout_error_sweep([1e-9], [1e-9], tia.TIA_300K, 10, 0)
