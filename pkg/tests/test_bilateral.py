import math

import numba
import numpy as np
import pytest

from polsarblf import hermitian as hm
from polsarblf.bilateral import (
    FilterConfig,
    bilateral_weights,
    boxcar,
    filter_iteration,
    filter_iteration_detail,
    gaussian_kernel,
    iterate_filter,
    num_threads,
    run_filter,
    spatial_kernel,
)
from polsarblf.distances import DistanceKind, prepare_pixel
from polsarblf.field import LEXICOGRAPHIC, PAULI, CovarianceField, Rect
from polsarblf.metrics import enl
from polsarblf.polarimetry import to_basis
from polsarblf.speckle import ZONE_MATRICES, build_scene, default_scene, homogeneous_scene

from conftest import random_hpd


def _noisy(size=24, seed=0, zone=1):
    f, _ = build_scene(homogeneous_scene(ZONE_MATRICES[zone], size), 4, seed)
    return f


def test_gaussian_kernel_values():
    assert gaussian_kernel(0.0, 1.3) == 1.0
    assert gaussian_kernel(2.2, 2.2) == pytest.approx(math.exp(-1.0))
    np.testing.assert_array_equal(gaussian_kernel(np.array([0.0, 5.0]), math.inf), [1.0, 1.0])
    with pytest.raises(ValueError):
        gaussian_kernel(1.0, 0.0)


def test_spatial_kernel_uses_euclidean_offset():
    k = spatial_kernel(5, 2.2)
    assert k.shape == (11, 11)
    assert k[5, 5] == 1.0
    assert k[5 + 3, 5 + 4] == pytest.approx(math.exp(-25 / 2.2**2))
    np.testing.assert_array_equal(k, k.T)


def test_config_defaults_per_distance():
    ai = FilterConfig.for_distance("ai")
    kl = FilterConfig.for_distance("kl")
    assert (ai.gamma_r, ai.n_iter, ai.window, ai.gamma_s) == (1.33, 4, 11, 2.2)
    assert kl.gamma_r == 3.11
    assert FilterConfig.for_distance("le", gamma_r=None, n_iter=2).n_iter == 2
    for bad in ({"n_iter": 0}, {"gamma_r": -1.0}, {"window_half": 0}, {"cond_threshold": 0.0}):
        with pytest.raises(ValueError):
            FilterConfig.for_distance("ai", **bad)


def _window(mats):
    return np.array([[prepare_pixel(m, "le") if m is not None else None for m in row] for row in mats], dtype=object)


def test_weights_outlier_ratio_closed_form():
    # one outlier whose log-Euclidean distance to the centre is 2 gamma_r,
    # so its radiometric factor is exp(-4) relative to an identical neighbour
    gamma_r = 0.75
    base = np.eye(3, dtype=complex)
    outlier = np.diag([np.exp(2 * gamma_r), 1.0, 1.0]).astype(complex)
    mats = [[base] * 3 for _ in range(3)]
    mats[0][1] = outlier
    kernel = np.ones((3, 3))
    w = bilateral_weights(_window(mats), kernel, gamma_r)
    assert w[0, 1] / w[1, 0] == pytest.approx(math.exp(-4.0), rel=1e-12)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert w[1, 1] == pytest.approx(w[1, 0])  # centre takes the largest neighbour weight


def test_weights_identical_window_is_normalized_spatial_kernel():
    kernel = spatial_kernel(1, 2.2)
    w = bilateral_weights(_window([[np.eye(3)] * 3] * 3), kernel, 1.0, center_rule=False)
    np.testing.assert_allclose(w, kernel / kernel.sum(), rtol=1e-15)


def test_weights_drop_rank_deficient_and_missing():
    mats = [[np.eye(3)] * 3 for _ in range(3)]
    mats[0][0] = np.diag([1.0, 0.0, 0.0])
    mats[2][2] = None
    w = bilateral_weights(_window(mats), np.ones((3, 3)), 1.0)
    assert w[0, 0] == 0.0 and w[2, 2] == 0.0
    assert w.sum() == pytest.approx(1.0)


def test_compiled_pass_matches_reference_weights(rng):
    data = np.stack([[random_hpd(rng) for _ in range(7)] for _ in range(7)])
    field = CovarianceField(data)
    for kind in DistanceKind:
        cfg = FilterConfig.for_distance(kind, window_half=2, n_iter=1)
        out = filter_iteration(field, cfg)
        kernel = spatial_kernel(2, cfg.gamma_s)
        for i, j in ((3, 3), (0, 0), (6, 2)):
            win = np.empty((5, 5), dtype=object)
            for a in range(5):
                for b in range(5):
                    ii, jj = i + a - 2, j + b - 2
                    win[a, b] = prepare_pixel(data[ii, jj], kind) if 0 <= ii < 7 and 0 <= jj < 7 else None
            w = bilateral_weights(win, kernel, cfg.gamma_r)
            ref = np.zeros((3, 3), dtype=complex)
            for a in range(5):
                for b in range(5):
                    if w[a, b]:
                        ref += w[a, b] * data[i + a - 2, j + b - 2]
            np.testing.assert_allclose(out.data[i, j], ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())


def test_constant_image_is_fixed_point():
    m = ZONE_MATRICES[4]
    field = CovarianceField.constant(m, 12, 9)
    for kind in ("ai", "kl", "le"):
        out = run_filter(field, FilterConfig.for_distance(kind))
        np.testing.assert_allclose(out.data, field.data, rtol=1e-13, atol=1e-13 * np.abs(m).max())


def test_rank_deficient_pixel_is_copied_and_excluded():
    field = _noisy(16)
    target = np.diag([50.0, 0.0, 0.0]).astype(complex)
    field.data[8, 8] = target
    res = filter_iteration_detail(field, FilterConfig.for_distance("ai"))
    assert np.array_equal(res.field.data[8, 8], target)
    assert np.isnan(res.weight_sum[8, 8])
    # neighbours never see the bright target
    assert res.field.data[8, 9, 0, 0].real < 20.0


def test_all_neighbours_rank_deficient_keeps_centre():
    data = np.broadcast_to(np.diag([1.0, 0.0, 0.0]).astype(complex), (5, 5, 3, 3)).copy()
    data[2, 2] = ZONE_MATRICES[1]
    out = run_filter(CovarianceField(data), FilterConfig.for_distance("ai"))
    assert np.array_equal(out.data, data)


def test_step_edge_cross_weights_vanish():
    # two regions at log-Euclidean distance 3 gamma_r: cross weights below e^-9
    gamma_r = 0.5
    a = np.eye(3, dtype=complex)
    b = np.exp(3 * gamma_r / np.sqrt(3)) * a
    data = np.empty((6, 12, 3, 3), dtype=complex)
    data[:, :6] = a
    data[:, 6:] = b
    cfg = FilterConfig.for_distance("le", gamma_r=gamma_r, n_iter=3)
    out = run_filter(CovarianceField(data), cfg)
    # each side stays at its own value to within the e^-9 leakage
    leak = math.exp(-9.0)
    assert np.max(np.abs(out.data[:, :6] - a)) <= leak * np.abs(b).max()
    assert np.max(np.abs(out.data[:, 6:] - b)) <= leak * np.abs(b).max()


def test_weight_sums_and_psd_closure():
    field = _noisy(20, seed=3, zone=2)
    field.data[:, 10:] *= 3.0
    current = field
    for _ in range(3):
        res = filter_iteration_detail(current, FilterConfig.for_distance("kl"))
        assert np.max(np.abs(res.weight_sum - 1.0)) <= 1e-12
        lam = hm.eigvalsh(res.field.data)
        assert np.all(lam[..., -1] >= -1e-12 * lam[..., 0])
        assert hm.is_hermitian(res.field.data)
        current = res.field


def test_boxcar_impulse_plateau():
    data = np.zeros((15, 15, 3, 3), dtype=complex)
    data[7, 7] = 49.0 * np.eye(3)
    out = boxcar(CovarianceField(data), 7)
    np.testing.assert_allclose(out.data[4:11, 4:11, 0, 0].real, 1.0, rtol=1e-14)
    assert out.data[3, 7, 0, 0] == 0.0


def test_boxcar_clips_at_borders():
    data = np.zeros((5, 5, 3, 3), dtype=complex)
    data[0, 0] = np.eye(3)
    out = boxcar(CovarianceField(data), 3)
    assert out.data[0, 0, 0, 0].real == pytest.approx(1 / 4)
    assert out.data[1, 1, 0, 0].real == pytest.approx(1 / 9)
    with pytest.raises(ValueError):
        boxcar(CovarianceField(data), 4)


def test_boxcar_equals_degenerate_bilateral(rng):
    data = np.stack([[random_hpd(rng) for _ in range(32)] for _ in range(32)])
    field = CovarianceField(data)
    cfg = FilterConfig("ai", gamma_r=math.inf, gamma_s=math.inf, window_half=3, n_iter=1, center_rule=False)
    np.testing.assert_allclose(run_filter(field, cfg).data, boxcar(field, 7).data, rtol=0, atol=1e-12)


def test_thread_count_bit_determinism():
    field = _noisy(20, seed=9)
    outs = []
    for n in (1, 2, numba.config.NUMBA_NUM_THREADS):
        outs.append(run_filter(field, FilterConfig.for_distance("ai"), threads=n).data)
    assert all(np.array_equal(outs[0], o) for o in outs[1:])
    with num_threads(1):
        assert numba.get_num_threads() == 1


def test_transpose_equivariance():
    field = _noisy(14, seed=2)
    field.data[:, :5] *= 5.0
    cfg = FilterConfig.for_distance("le")
    a = run_filter(field.transpose(), cfg).data
    b = run_filter(field, cfg).transpose().data
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12 * np.abs(b).max())


@pytest.mark.parametrize("kind", ["ai", "kl"])
def test_basis_equivariance(kind):
    field = _noisy(16, seed=4, zone=3)
    field.data[4:10, 4:10] *= 6.0
    cfg = FilterConfig.for_distance(kind)
    a = to_basis(run_filter(field, cfg), LEXICOGRAPHIC).data
    b = run_filter(to_basis(field, LEXICOGRAPHIC), cfg).data
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9 * np.abs(a).max())


def test_one_iteration_equals_filter_iteration():
    field = _noisy(12)
    cfg = FilterConfig.for_distance("ai", n_iter=1)
    assert np.array_equal(run_filter(field, cfg).data, filter_iteration(field, cfg).data)


def test_enl_grows_over_iterations():
    labels = default_scene(128)
    field, _ = build_scene(labels, 4, 0)
    zone = labels.zones["zone3"]
    values = [enl(f, zone) for f in iterate_filter(field, FilterConfig.for_distance("ai"))]
    assert values[0] > enl(field, zone)
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_variance_reduced_every_iteration():
    # statistical: T11 variance over a homogeneous field drops at each step, 10 seeds
    for seed in range(10):
        field = _noisy(24, seed=seed, zone=4)
        prev = field.channel(0, 0).var()
        for out in iterate_filter(field, FilterConfig.for_distance("ai")):
            cur = out.channel(0, 0).var()
            assert cur < prev
            prev = cur
