import json

import numpy as np
import pytest

import vmgcn


def two_tones(length=1024):
    t = np.arange(length)
    return np.cos(2 * np.pi * 4 * t / 512) + np.cos(2 * np.pi * 100 * t / 512)


def test_decompose_recovers_two_tones():
    ms = vmgcn.vmd(two_tones(), num_modes=2)
    assert ms.modes.shape == (2, 1024)
    assert ms.omegas[0] == pytest.approx(4 / 512, rel=0.02)
    assert ms.omegas[1] == pytest.approx(100 / 512, rel=0.02)
    assert np.allclose(ms.reconstruction(), ms.modes.sum(axis=0))
    assert vmgcn.reconstruction_loss(two_tones(), ms) < 1e-2


def test_bad_config_raises_library_errors():
    cfg = vmgcn.VmdConfig()
    cfg.num_modes = 0
    with pytest.raises(vmgcn.InvalidConfig):
        vmgcn.decompose(two_tones(), cfg)
    with pytest.raises(vmgcn.Error):
        vmgcn.decompose(np.zeros((2, 2)))


def test_metrics():
    y, p = np.array([100.0, 200.0]), np.array([110.0, 180.0])
    assert vmgcn.mae(p, y) == pytest.approx(15.0)
    assert vmgcn.rmse(p, y) == pytest.approx(np.sqrt(250.0))
    value, excluded = vmgcn.mape(p, y)
    assert value == pytest.approx(10.0) and excluded == 0
    with pytest.raises(vmgcn.UndefinedMetric):
        vmgcn.mape(np.zeros(2), np.zeros(2))


def test_graph_operators():
    flows, dist = vmgcn.ring_traffic(8, 40, seed=2)
    assert flows.shape == (8, 40)
    a = vmgcn.build_adjacency(dist, vmgcn.distance_sigma(dist), 0.1)
    assert np.array_equal(a, a.T) and np.all(np.diag(a) == 0)
    lap = vmgcn.normalized_laplacian(a)
    lmax = vmgcn.max_eigenvalue(lap)
    assert lmax == pytest.approx(np.linalg.eigvalsh(lap).max(), abs=1e-6)
    basis = vmgcn.chebyshev_basis(vmgcn.scaled_laplacian(lap, lmax), 3)
    assert len(basis) == 3 and np.allclose(basis[0], np.eye(8))


def test_short_experiment_runs():
    flows, dist = vmgcn.ring_traffic(5, 400, seed=4)
    cfg = vmgcn.VmdConfig()
    cfg.num_modes = 3
    out = vmgcn.run_experiment(flows, dist, vmd=cfg, r=0.01, epochs=1, channels=4, threads=1)
    assert len(out["test"]["horizons"]) == 12
    assert len(out["val_history"]) == 2
    assert out["historical_last"]["mae"] > 0


def test_config_defaults_and_rejection():
    resolved = json.loads(vmgcn.validate_config('{"vmd": {"K": 6}}'))
    assert resolved["vmd"]["K"] == 6 and resolved["train"]["patience"] == 10
    with pytest.raises(vmgcn.InvalidConfig):
        vmgcn.validate_config('{"vmd": {"bogus": 1}}')
