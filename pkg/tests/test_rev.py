import math

import numpy as np
import pytest

from phasecal.array_model import ArrayConfig, ErrorSpec, GroundTruth, generate_ground_truth
from phasecal.calibrate import calibrate, wrap_phase
from phasecal.measurement import NoiseModel
from phasecal.refine import refine
from phasecal.rev import per_antenna_estimate, rev_calibrate, rev_sweep_estimate

ANT_ONLY = ErrorSpec(phase_dependent=False)


def _sweep(rest: complex, elem: complex, K: int) -> np.ndarray:
    theta = np.arange(K) * 2 * math.pi / K
    return np.abs(rest + elem * np.exp(1j * theta)) ** 2


def test_sweep_closed_form_example():
    # rest = 1, element 0.5 at -pi/4 -> peaks where theta = +pi/4 (k=1 of 8)
    p = _sweep(1.0, 0.5 * np.exp(-1j * math.pi / 4), 8)
    assert p.max() == pytest.approx(2.25) and p.min() == pytest.approx(0.25)
    ratio, rel = rev_sweep_estimate(p, math.pi / 4)
    assert ratio == pytest.approx(0.5)
    assert rel == pytest.approx(-math.pi / 4)


@pytest.mark.parametrize("estimator", ["grid", "dft"])
def test_sweep_on_grid_exact(estimator):
    for k in range(8):
        for amp in (0.2, 0.5, 0.9):
            phase = wrap_phase(-k * math.pi / 4)
            ratio, rel = rev_sweep_estimate(_sweep(1.0, amp * np.exp(1j * phase), 8), math.pi / 4, estimator)
            assert ratio == pytest.approx(amp, abs=1e-9)
            assert abs(wrap_phase(rel - phase)) <= 1e-9


def test_sweep_dft_off_grid_exact():
    for phase in np.linspace(-3, 3, 13):
        ratio, rel = rev_sweep_estimate(_sweep(2.0, 0.6 * np.exp(1j * phase), 8), math.pi / 4, "dft")
        assert ratio == pytest.approx(0.3, abs=1e-9)
        assert abs(wrap_phase(rel - phase)) <= 1e-9


def test_sweep_grid_off_grid_bound():
    for phase in np.linspace(-3.1, 3.1, 41):
        _, rel = rev_sweep_estimate(_sweep(1.0, 0.4 * np.exp(1j * phase), 8), math.pi / 4)
        assert abs(wrap_phase(rel - phase)) <= math.pi / 8 + 1e-12


def test_unknown_estimator():
    with pytest.raises(ValueError):
        rev_sweep_estimate(np.ones(8), 0.1, "nope")


def test_zero_error_array():
    res = rev_calibrate(GroundTruth.ideal(ArrayConfig(4, 3)))
    np.testing.assert_allclose(res.phase, 0.0, atol=1e-9)
    np.testing.assert_allclose(res.gain, 1.0, atol=1e-9)
    assert res.measurement_count == 64
    assert not res.failed.any()


@pytest.mark.parametrize("offsets", [[0, 0, 0, 4], [0, 4, 0, 0], [2, 2, 2, 6]])
@pytest.mark.parametrize("iterations", [1, 2])
def test_on_grid_offsets_recovered(offsets, iterations):
    # every rest-of-array vector is itself on the grid, so each sweep is exact
    cfg = ArrayConfig(4, 3)
    offsets = np.array(offsets) * cfg.phase_step
    gt = GroundTruth.from_components(cfg, np.ones(cfg.shape), offsets)
    res = rev_calibrate(gt, iterations=iterations)
    assert np.abs(wrap_phase(res.phase - wrap_phase(offsets - offsets[0]))).max() <= 1e-9


def test_measurement_count_scales():
    gt = generate_ground_truth(ArrayConfig(5, 4), ANT_ONLY, 0)
    assert rev_calibrate(gt, iterations=3).measurement_count == 3 * 5 * 16


def test_csv(tmp_path):
    res = rev_calibrate(generate_ground_truth(ArrayConfig(4, 3), ANT_ONLY, 1))
    res.to_csv(tmp_path / "rev.csv")
    lines = (tmp_path / "rev.csv").read_text().splitlines()
    assert lines[0] == "antenna,rel_amplitude,rel_phase_rad,iteration"
    assert len(lines) == 1 + 2 * 4


def test_per_antenna_collapse_noiseless():
    cfg = ArrayConfig(4, 3)
    gt = generate_ground_truth(cfg, ANT_ONLY, 2)
    est, _ = calibrate(gt)
    phase, gain = per_antenna_estimate(est, cfg.phase_step)
    truth = wrap_phase(gt.delta_ant - gt.delta_ant[0])
    assert np.abs(wrap_phase(phase - truth)).max() <= 1e-9
    np.testing.assert_allclose(gain, gt.b[:, 0], rtol=1e-9)


def _errors(cfg, snr, n):
    ours, rev = [], []
    for seed in range(n):
        gt = generate_ground_truth(cfg, ANT_ONLY, seed)
        truth = wrap_phase(gt.delta_ant - gt.delta_ant[0])
        noise = NoiseModel(snr, seed=seed + 500)
        est, recs = calibrate(gt, noise)
        phase, _ = per_antenna_estimate(refine(est, recs).estimate, cfg.phase_step)
        r = rev_calibrate(gt, NoiseModel(snr, seed=seed + 900))
        ours.append(np.abs(wrap_phase(phase - truth))[1:].mean())
        rev.append(np.abs(wrap_phase(r.phase - truth))[1:].mean())
    return np.mean(ours), np.mean(rev)


def test_explicit_beats_rev_monte_carlo():
    ours, rev = _errors(ArrayConfig(4, 3), 20.0, 60)
    assert ours < rev
