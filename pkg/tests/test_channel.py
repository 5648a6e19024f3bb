import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncma.channel import (MODELS, ChannelUse, bpsk_map, draw_channel, perturb_csi, snr_to_gain,
                          transmit)


def test_bpsk_map():
    assert bpsk_map([0, 1, 1, 0]).tolist() == [1.0, -1.0, -1.0, 1.0]


@given(st.floats(-20, 40), st.floats(0.01, 4.0))
def test_snr_definition(snr_db, sigma2):
    h = snr_to_gain(snr_db, sigma2)
    assert 10 * np.log10(h**2 / (2 * sigma2)) == pytest.approx(snr_db, abs=1e-9)


def test_fixed_phase_constant_over_frame(rng):
    ch = draw_channel(6.0, 3.0, 100, rng)
    assert ch.two_user and len(ch) == 100
    assert np.all(ch.hA == ch.hA[0]) and np.all(ch.hB == ch.hB[0])
    assert abs(ch.hA[0]) == pytest.approx(snr_to_gain(6.0, 0.5))
    assert abs(ch.hB[0]) == pytest.approx(snr_to_gain(3.0, 0.5))


def test_fixed_phase_uniform_phase(rng):
    phases = np.array([np.angle(draw_channel(0, None, 1, rng).hA[0]) for _ in range(4000)])
    hist, _ = np.histogram(phases, bins=8, range=(-np.pi, np.pi))
    assert hist.min() > 400


def test_rayleigh_block_groups_and_mean_power(rng):
    ch = draw_channel(10.0, None, 40, rng, model="rayleigh-block", groups=8)
    assert np.array_equal(ch.hA[:8], ch.hA[8:16])
    assert len(np.unique(ch.hA)) == 8
    p = [np.mean(np.abs(draw_channel(10.0, None, 8, rng, "rayleigh-block").hA) ** 2) for _ in range(2000)]
    assert np.mean(p) == pytest.approx(snr_to_gain(10.0, 0.5) ** 2, rel=0.05)


def test_noise_variance_per_dimension(rng):
    ch = ChannelUse(np.zeros(200000), None, 0.7)
    y = transmit(np.ones(200000), None, ch, rng)
    assert np.var(y.real) == pytest.approx(0.7, rel=0.02)
    assert np.var(y.imag) == pytest.approx(0.7, rel=0.02)


def test_noiseless_superposition():
    ch = ChannelUse([1 + 1j, 2], [0.5j, -1], 0.5)
    y = transmit([1, -1], [-1, -1], ch, None, noise=False)
    assert np.allclose(y, [1 + 0.5j, -1])


def test_errors(rng):
    with pytest.raises(ValueError):
        draw_channel(5, 5, 10, rng, model="awgn")
    with pytest.raises(ValueError):
        draw_channel(float("nan"), 5, 10, rng)
    with pytest.raises(ValueError):
        ChannelUse(np.ones(3), np.ones(4), 0.5)
    with pytest.raises(ValueError):
        ChannelUse(np.ones(3), None, 0.0)
    ch = ChannelUse(np.ones(3), None, 0.5)
    with pytest.raises(ValueError):
        transmit(np.ones(3), np.ones(3), ch, rng)
    with pytest.raises(ValueError):
        transmit(np.ones(4), None, ch, rng)
    with pytest.raises(ValueError):
        ch.swapped()


def test_swapped():
    ch = ChannelUse([1], [2], 0.5)
    s = ch.swapped()
    assert s.hA[0] == 2 and s.hB[0] == 1


def test_perturb_csi(rng):
    ch = draw_channel(10, 10, 5, rng)
    assert perturb_csi(ch, 0.0, rng) is ch
    est = perturb_csi(ch, 0.01, rng)
    assert not np.allclose(est.hA, ch.hA)
    assert np.allclose(est.hA / ch.hA, est.hA[0] / ch.hA[0])  # one error per frame
    assert np.abs(est.hA[0] / ch.hA[0] - 1) < 0.5


@pytest.mark.parametrize("model", MODELS)
def test_deterministic_given_seed(model):
    a = draw_channel(3, 4, 20, np.random.default_rng(7), model)
    b = draw_channel(3, 4, 20, np.random.default_rng(7), model)
    assert np.array_equal(a.hA, b.hA) and np.array_equal(a.hB, b.hB)


def test_channel_worked_examples(rng):
    y = transmit([1.0], [-1.0], ChannelUse([1.0], [1.0], 0.5), None, noise=False)
    assert y[0] == 0
    ch = draw_channel(9.5, 7.5, 4, rng)
    assert abs(ch.hA[0]) ** 2 / abs(ch.hB[0]) ** 2 == pytest.approx(10**0.2)
    bal = draw_channel(6.0, 6.0, 4, rng)
    assert abs(bal.hA[0]) == pytest.approx(abs(bal.hB[0]))
    assert bpsk_map(np.zeros(5)).tolist() == [1.0] * 5
