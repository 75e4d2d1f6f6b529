import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from spinsim.parallel import stream
from spinsim.readout.spin_to_charge import (
    Event,
    EventTrace,
    TunnelSpec,
    ero_miss_probability,
    ero_trace,
    spin_blockade_trace,
    trro_decision,
    trro_decisions,
    trro_error_probabilities,
)

TS = TunnelSpec()
BIAS = (1e-4, -1e-4)


def within_3sigma(k, n, p):
    sd = math.sqrt(max(p * (1 - p), 1.0 / n) / n)
    return abs(k / n - p) <= 3 * sd


def test_event_trace_invariants():
    EventTrace((Event(0.1, "tunnel_out"), Event(0.2, "tunnel_in")), 1.0, "ES")
    with pytest.raises(ValueError):
        EventTrace((Event(0.2, "tunnel_out"), Event(0.1, "tunnel_in")), 1.0, "ES")
    with pytest.raises(ValueError):
        EventTrace((Event(1.5, "tunnel_out"),), 1.0, "ES")
    with pytest.raises(ValueError):
        EventTrace((Event(0.5, "teleport"),), 1.0, "ES")


def test_tunnel_spec_domain():
    with pytest.raises(ValueError):
        TunnelSpec(gamma_ES=-1.0)


def test_ero_ground_state_is_silent():
    tr = ero_trace(BIAS, TS, "GS", 1e-6, 0)
    assert tr.events == () and tr.decision == "GS"


@pytest.mark.parametrize("bias, word", [((-1e-4, -2e-4), "E_ES > mu_res"), ((2e-4, 1e-4), "E_GS < mu_res")])
def test_ero_bias_errors_name_inequality(bias, word):
    with pytest.raises(ValueError, match=word):
        ero_trace(bias, TS, "ES", 1e-6, 0)


def test_ero_excited_trace_shape():
    tr = ero_trace(BIAS, TS, "ES", 1e-5, 4)
    kinds = [e.kind for e in tr.events]
    assert kinds in (["tunnel_out"], ["tunnel_out", "tunnel_in"])
    assert tr.decision == "ES"


def test_ero_detection_probability_high_rate():
    window = 20 / TS.gamma_ES
    n = 10_000
    hits = sum(ero_trace(BIAS, TS, "ES", window, stream(1, i)).decision == "ES" for i in range(n))
    assert within_3sigma(n - hits, n, math.exp(-20))


def test_ero_miss_rate():
    window = 1.5 / TS.gamma_ES
    n = 10_000
    miss = sum(ero_trace(BIAS, TS, "ES", window, stream(2, i)).decision == "GS" for i in range(n))
    assert within_3sigma(miss, n, ero_miss_probability(TS, window))


def test_tunnel_out_waiting_time_mean():
    n = 10_000
    t = np.array([ero_trace(BIAS, TS, "ES", 1.0, stream(3, i)).events[0].time for i in range(n)])
    mean = 1 / TS.gamma_ES
    assert abs(t.mean() - mean) < 3 * mean / math.sqrt(n)


def test_tunnel_out_memoryless():
    # one KS test at 5 % rejects a true model 5 % of the time, so run 20
    # replicates and bound the rejection count (P(X >= 5 | p = 0.05) = 1.6 %)
    s = 0.5 / TS.gamma_ES
    rejections = 0
    for rep in range(20):
        t = np.array([ero_trace(BIAS, TS, "ES", 1.0, stream(4, rep, i)).events[0].time for i in range(10_000)])
        tail = t[t > s] - s
        rejections += stats.kstest(tail, "expon", args=(0, 1 / TS.gamma_ES)).pvalue < 0.05
    assert rejections <= 4


@pytest.mark.parametrize("tau", [1e-7, 1e-6, 5e-6])
def test_trro_rates(tau):
    n = 10_000
    pred = trro_error_probabilities(TS, tau)
    es_wrong = n - int(trro_decisions(TS, tau, "ES", n, 11).sum())
    gs_wrong = int(trro_decisions(TS, tau, "GS", n, 12).sum())
    assert within_3sigma(es_wrong, n, pred["ES"])
    assert within_3sigma(gs_wrong, n, pred["GS"])


def test_trro_closed_form_example():
    ts = TunnelSpec(gamma_ES=10e6, gamma_GS=0.1e6)
    p = trro_error_probabilities(ts, 1e-6)
    assert p["ES"] + p["GS"] == pytest.approx(math.exp(-10) + (1 - math.exp(-0.1)), rel=1e-12)


def test_trro_no_false_positive_without_gs_rate():
    ts = TunnelSpec(gamma_GS=0.0)
    assert not trro_decisions(ts, 1e-3, "GS", 1000, 0).any()
    assert trro_decision(ts, 1e-3, "GS", 0) == "GS"


def test_trro_equal_rates_uninformative():
    ts = TunnelSpec(gamma_ES=1e6, gamma_GS=1e6)
    n = 5000
    tau = math.log(2) / 1e6  # each class flips a fair coin
    right = int(trro_decisions(ts, tau, "ES", n, 1).sum()) + (n - int(trro_decisions(ts, tau, "GS", n, 2).sum()))
    assert within_3sigma(right, 2 * n, 0.5)


def test_trro_scalar_and_vector_agree_in_law():
    n = 4000
    scalar = sum(trro_decision(TS, 1e-7, "ES", stream(9, i)) == "ES" for i in range(n))
    assert within_3sigma(scalar, n, 1 - math.exp(-1.0))


def test_blockade_singlet():
    tr = spin_blockade_trace("S", 1e-6, 1e-3, 0)
    assert tr.events[0].kind == "interdot" and tr.events[0].time == 0.0
    assert tr.decision == "S"


def test_blockade_triplet_long_t1():
    tr = spin_blockade_trace("T0", 1e-6, 1e3, 0)
    assert tr.events == () and tr.decision == "T"


def test_blockade_release_times_ks():
    T1 = 1e-3
    n = 10_000
    t = []
    for i in range(n):
        tr = spin_blockade_trace("T0", 1e3 * T1, T1, stream(5, i))
        t.append(tr.events[0].time)
    assert stats.kstest(t, "expon", args=(0, T1)).pvalue > 0.05


@settings(max_examples=20)
@given(st.integers(min_value=0, max_value=2**32), st.sampled_from(["ES", "GS"]))
def test_seed_determinism(seed, spin):
    assert ero_trace(BIAS, TS, spin, 1e-6, seed) == ero_trace(BIAS, TS, spin, 1e-6, seed)
    assert np.array_equal(trro_decisions(TS, 1e-6, spin, 50, seed), trro_decisions(TS, 1e-6, spin, 50, seed))


def test_input_validation():
    with pytest.raises(ValueError):
        trro_decision(TS, 0.0, "ES", 0)
    with pytest.raises(ValueError):
        spin_blockade_trace("T+", 1e-6, 1e-3, 0)
    with pytest.raises(ValueError):
        ero_trace(BIAS, TS, "up", 1e-6, 0)
