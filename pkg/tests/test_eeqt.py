import numpy as np
import pytest

import oracles
from toa_lab.eeqt import (
    compare_with_kijowski,
    consistency_residual,
    detection_distribution,
    geometric_kappas,
    kappa_sweep,
    p_infinity,
    tail_estimate,
)
from toa_lab.errors import DistributionError
from toa_lab.propagators import DetectorSpec, damped_evolve
from toa_lab.wavepacket import GaussianPacketSpec, gaussian_packet, make_grid


@pytest.fixture(scope="module")
def coarse():
    return gaussian_packet(GaussianPacketSpec.reference(), make_grid(-20, 20, 1024))


@pytest.fixture(scope="module")
def coarse_sweep(coarse):
    return kappa_sweep(coarse, DetectorSpec(), geometric_kappas())


def test_geometric_kappas_default_ladder():
    assert np.allclose(geometric_kappas(), [0.5, 1, 2, 4, 8, 16, 32, 64, 128])


def test_sweep_is_unimodal_with_peak_at_eight(coarse_sweep):
    assert coarse_sweep.is_unimodal()
    assert coarse_sweep.best_kappa == 8.0
    assert coarse_sweep.best_p < 0.5


def test_sweep_follows_stationary_absorption(coarse_sweep):
    # for weak detectors the transit is slow enough that a measurable tail
    # remains; from the optimum upward the run has essentially finished
    for k, p in zip(coarse_sweep.kappas, coarse_sweep.p_infinity):
        if k >= 8:
            assert p == pytest.approx(oracles.detection_probability(k), abs=5e-3)


def test_sweep_tails_are_small(coarse_sweep):
    assert np.all(coarse_sweep.tails >= 0)
    assert np.max(coarse_sweep.tails) < 1e-2


def test_sweep_sorts_kappas(coarse):
    res = kappa_sweep(coarse, DetectorSpec(), [8.0, 2.0], horizon=1.0)
    assert list(res.kappas) == [2.0, 8.0]


def test_unimodality_needs_interior_peak():
    from toa_lab.eeqt import KappaSweepResult

    edge = KappaSweepResult(np.array([1.0, 2, 3]), np.array([0.1, 0.2, 0.3]), np.zeros(3))
    assert not edge.is_unimodal()
    flat = KappaSweepResult(np.array([1.0, 2, 3, 4]), np.array([0.1, 0.3, 0.3, 0.1]), np.zeros(4))
    assert not flat.is_unimodal()


def test_zero_kappa_detects_nothing(coarse):
    p, tail = p_infinity(coarse, DetectorSpec(kappa=0.0))
    assert p == 0.0
    # the k < 0 share of the spectrum, Phi(-4) ~ 3e-5, is not incoming
    assert tail == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("kappas", [[], [-1.0, 2.0]])
def test_bad_kappa_lists_rejected(coarse, kappas):
    with pytest.raises(ValueError):
        kappa_sweep(coarse, DetectorSpec(), kappas)


def test_horizon_must_be_whole_steps(coarse):
    with pytest.raises(ValueError):
        p_infinity(coarse, DetectorSpec(kappa=8.0), dt=1e-3, horizon=0.0015)


def test_optimum_scales_with_velocity():
    # stationary absorption peaks at kappa = 2k, so doubling k0 doubles the optimum
    g = make_grid(-20, 20, 1024)
    wf = gaussian_packet(GaussianPacketSpec(-8.0, 1.0, 8.0), g)
    res = kappa_sweep(wf, DetectorSpec(), [4.0, 8.0, 16.0, 32.0, 64.0], horizon=2.0)
    assert res.best_kappa == 16.0
    assert res.is_unimodal()


def test_parallel_sweep_matches_serial(coarse):
    ks = [4.0, 16.0]
    a = kappa_sweep(coarse, DetectorSpec(), ks, horizon=1.5)
    b = kappa_sweep(coarse, DetectorSpec(), ks, horizon=1.5, workers=2)
    assert np.array_equal(a.p_infinity, b.p_infinity)


def test_detection_distribution_integrates_to_norm_loss(coarse):
    det = DetectorSpec(kappa=8.0)
    rec = damped_evolve(coarse, det, 1e-3, 3000)
    dist = detection_distribution(rec, det)
    assert dist.total == pytest.approx(rec.norm_loss[-1], abs=1e-5)
    assert dist.metadata["kappa"] == 8.0
    assert consistency_residual(rec) < consistency_residual(rec, corrected=False)


def test_detection_distribution_rejects_foreign_detector(coarse):
    rec = damped_evolve(coarse, DetectorSpec(kappa=8.0), 1e-3, 10)
    with pytest.raises(DistributionError):
        detection_distribution(rec, DetectorSpec(kappa=4.0))


def test_tail_estimate_counts_incoming_parts():
    g = make_grid(-20, 20, 1024)
    det = DetectorSpec()
    incoming = gaussian_packet(GaussianPacketSpec(-4.0, 1.0, 4.0), g)
    outgoing = gaussian_packet(GaussianPacketSpec(-4.0, 1.0, -4.0), g)
    from_right = gaussian_packet(GaussianPacketSpec(4.0, 1.0, -4.0), g)
    assert tail_estimate(incoming, det) == pytest.approx(1.0, abs=1e-4)
    assert tail_estimate(outgoing, det) < 1e-4
    assert tail_estimate(from_right, det) == pytest.approx(tail_estimate(incoming, det), abs=1e-12)


def test_weak_detector_departs_more_from_kijowski(coarse):
    weak = compare_with_kijowski(coarse, 0.1)
    optimal = compare_with_kijowski(coarse, 8.0)
    assert weak.sup_difference > optimal.sup_difference
    assert optimal.sup_difference < 0.05
    assert optimal.eeqt_total == pytest.approx(1.0, abs=1e-6)
    assert optimal.kijowski_total == pytest.approx(1.0, abs=1e-6)


def test_comparison_requires_origin_detector(coarse):
    with pytest.raises(ValueError):
        compare_with_kijowski(coarse, 8.0, DetectorSpec(position=1.0))
    with pytest.raises(ValueError):
        compare_with_kijowski(coarse, 0.0)
