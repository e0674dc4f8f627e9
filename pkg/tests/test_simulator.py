import math

import numpy as np
import pytest

from pdssdc import fixtures
from pdssdc.design import spec_from_design
from pdssdc.errors import NotSingleSymbolDecodableError
from pdssdc.precoding import identity_precoders
from pdssdc.simulator import (
    ChannelRealization, PowerAllocation, SerCurve, SimConfig, aggregate_noise_batch, bit_rates, column_load,
    curve_csv, decode_joint_batch, decode_per_symbol_batch, estimate_diversity_order, matched_slopes,
    ml_decode_joint, ml_decode_per_symbol, plot_data, power_for_snr, received_snr, run_ser, sample_channel,
    ser_confidence_halfwidth, snr_per_channel_use, transmit, transmit_batch,
)
from pdssdc.verification import SignalSet, covariance_matrix


def _trials(spec, const, snr_db, n, rng, relay_factor=1.0):
    power = power_for_snr(snr_db, spec, relay_factor)
    sent = rng.integers(0, const.size, size=(n, spec.N))
    chan = sample_channel(spec.K, rng, n)
    y = transmit_batch(spec, const.array[sent], power, chan.h, chan.g, rng)
    return power, sent, chan, y


@pytest.mark.parametrize("name, const", [("x_4_4", SignalSet.qpsk(22.5)), ("dostbc_4_4", SignalSet.qpsk()),
                                         ("x_6_8", SignalSet.qpsk(22.5))])
def test_decoders_agree(golden, rng, name, const):
    spec = golden[name]
    power, sent, chan, y = _trials(spec, const, 8.0, 60, rng)
    a = decode_per_symbol_batch(y, spec, chan.h, chan.g, power, const)
    b = decode_joint_batch(y, spec, chan.h, chan.g, power, const)
    assert np.array_equal(a, b)


def test_noiseless_decoding_is_exact(golden, rng):
    spec, const = golden["x_4_8"], SignalSet.qpsk(22.5)
    power = PowerAllocation(3.0, 2.0)
    chan = sample_channel(spec.K, rng)
    s = const.array[[0, 3, 1, 2]]
    y = transmit(spec, s, power, chan, None, noise=False)
    assert np.array_equal(ml_decode_per_symbol(y, spec, chan, power, const), s)
    assert np.array_equal(ml_decode_joint(y, spec, chan, power, const), s)


def test_per_symbol_decoder_refuses_coupled_code(rng):
    d = fixtures.design(fixtures.renumbered(fixtures.DOSTBC_2_8_MISSING_SIGN))
    spec = spec_from_design(d, identity_precoders(2))
    const = SignalSet.qpsk()
    power, sent, chan, y = _trials(spec, const, 10.0, 5, rng)
    with pytest.raises(NotSingleSymbolDecodableError):
        decode_per_symbol_batch(y, spec, chan.h, chan.g, power, const)


def test_aggregate_noise_covariance(golden, rng):
    spec = golden["x_4_4"]
    power = PowerAllocation(4.0, 6.0)
    g = np.array([0.3 + 1.1j, -0.8j, 1.5, 0.2 - 0.4j])
    n = aggregate_noise_batch(spec, power, g, rng, 10_000)
    emp = n.T @ n.conj() / n.shape[0]
    R = covariance_matrix(spec, g, power.P1, power.P2)
    assert np.all(np.abs(emp - R) <= 0.05 * np.abs(np.diag(R)).min())


def test_power_solves_nominal_snr(golden):
    for name, factor in (("x_4_4", 1.0), ("dostbc_4_4", 2.0)):
        spec = golden[name]
        for snr_db in (0.0, 10.0, 25.0):
            p = power_for_snr(snr_db, spec, factor)
            assert math.isclose(snr_per_channel_use(p, spec), 10 ** (snr_db / 10), rel_tol=1e-12)
            assert math.isclose(p.P2, factor * p.P1)


def test_snr_conventions(golden):
    x, d = golden["x_4_4"], golden["dostbc_4_4"]
    assert column_load(x) == 4 and column_load(d) == 2
    p = PowerAllocation(10.0, 10.0)
    assert math.isclose(snr_per_channel_use(p, x), 400 / 51)
    assert math.isclose(received_snr(p, x), snr_per_channel_use(p, x))
    assert math.isclose(received_snr(p, d), 400 / 51)


def test_empirical_snr_matches_closed_form(golden, rng):
    spec = golden["x_4_4"]
    power = PowerAllocation(10.0, 10.0)
    n = 20_000
    sent = rng.integers(0, 4, size=(n, 4))
    chan = sample_channel(4, rng, n)
    s = SignalSet.qpsk(22.5).array[sent]
    clean = transmit_batch(spec, s, power, chan.h, chan.g, None, noise=False)
    noise = np.stack([aggregate_noise_batch(spec, power, chan.g[i], rng, 1)[0] for i in range(2000)])
    measured = np.mean(np.abs(clean) ** 2) / np.mean(np.abs(noise) ** 2)
    assert math.isclose(measured, snr_per_channel_use(power, spec), rel_tol=0.05)


def test_diversity_fit_on_synthetic_curves():
    snr = tuple(float(s) for s in range(0, 31, 3))
    ideal = SerCurve(snr, tuple(0.5 * 10 ** (-0.4 * s) for s in snr), (10**12,) * len(snr), (0,) * len(snr), 1)
    assert abs(estimate_diversity_order(ideal) - 4.0) <= 0.01
    flat = SerCurve(snr, (0.1,) * len(snr), (1000,) * len(snr), (0,) * len(snr), 1)
    assert abs(estimate_diversity_order(flat)) < 1e-9
    sparse = SerCurve(snr, (0.1, 0.01) + (0.0,) * (len(snr) - 2), (1000,) * len(snr), (0,) * len(snr), 1)
    with pytest.raises(ValueError):
        estimate_diversity_order(sparse)


def test_matched_slopes_share_window():
    snr = tuple(float(s) for s in range(0, 21, 2))
    steep = SerCurve(snr, tuple(10 ** (-0.3 * s) for s in snr), (10**9,) * len(snr), (0,) * len(snr), 1)
    shallow = SerCurve(snr, tuple(10 ** (-0.1 * s) for s in snr), (10**3,) * len(snr), (0,) * len(snr), 1)
    a, b = matched_slopes([steep, shallow])
    assert math.isclose(a, 3.0) and math.isclose(b, 1.0)


def test_determinism_across_workers(golden):
    cfg = SimConfig(golden["x_4_4"], SignalSet.qpsk(22.5), (0.0, 6.0, 12.0), 1500, seed=7, chunk_size=400)
    one = run_ser(cfg, workers=1)
    two = run_ser(cfg, workers=2)
    assert curve_csv(one) == curve_csv(two)
    assert curve_csv(one) == curve_csv(run_ser(cfg))


def test_monotone_trend(golden):
    cfg = SimConfig(golden["x_4_4"], SignalSet.qpsk(22.5), (0.0, 5.0, 10.0, 15.0), 4000, seed=3)
    curve = run_ser(cfg)
    for i, s in enumerate(curve.snr_db):
        for j, t in enumerate(curve.snr_db):
            if t == s + 10 and curve.errors[i] >= 100 and curve.errors[j] >= 100:
                assert curve.ser[j] < curve.ser[i]
    assert curve.ser[0] > curve.ser[-1]


def test_csv_and_plot_data_format(golden):
    cfg = SimConfig(golden["x_4_4"], SignalSet.qpsk(22.5), (0.0, 10.0), 200, label="demo")
    curve = run_ser(cfg)
    lines = curve_csv(curve).splitlines()
    assert lines[0] == "snr_db,ser,trials,errors"
    assert lines[-1].startswith("fitted_slope,")
    assert len(lines) == 4
    assert plot_data([curve]).startswith("# demo\n")


def test_config_validation(golden):
    with pytest.raises(ValueError):
        SimConfig(golden["x_4_4"], SignalSet.qpsk(), (0.0,), 0)
    with pytest.raises(ValueError):
        SimConfig(golden["x_4_4"], SignalSet.qpsk(), (0.0,), 10, decoder="fast")
    with pytest.raises(ValueError):
        PowerAllocation(0.0, 1.0)


def test_bit_rates(golden):
    assert bit_rates(golden["x_4_4"], SignalSet.qpsk(22.5)) == {"both_phases": 1.0, "second_phase": 2.0}
    assert bit_rates(golden["dostbc_4_4"], SignalSet.qam16()) == {"both_phases": 16 / 12, "second_phase": 2.0}


def test_confidence_halfwidth_scaling():
    assert math.isclose(ser_confidence_halfwidth(100, 10_000) / ser_confidence_halfwidth(400, 40_000), 2.0)


def test_adaptive_stopping_is_deterministic(golden):
    cfg = SimConfig(golden["x_4_4"], SignalSet.qpsk(22.5), (0.0, 15.0), 4000, seed=5, chunk_size=250,
                    target_errors=50, min_trials=500)
    one, three = run_ser(cfg, workers=1), run_ser(cfg, workers=3)
    assert curve_csv(one) == curve_csv(three)
    assert one.trials[0] == 500 and one.errors[0] >= 50
    assert one.trials[1] > one.trials[0]
    assert all(t <= 4000 for t in one.trials)
