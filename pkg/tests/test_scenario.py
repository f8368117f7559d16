import math

import numpy as np
import pytest

from hybridfb.classifier import conventional_classification, fixed_classification
from hybridfb.rate import monte_carlo_multicell, monte_carlo_sum_rate
from hybridfb.scenario import (
    CellTopology,
    Drop,
    LargeScaleModel,
    conventional_baseline,
    drop_multicell,
    drop_single_cell,
    wrap_to_half_plane,
)


def test_single_cell_determinism():
    a = drop_single_cell(5, 16, 0.2, 7)
    b = drop_single_cell(5, 16, 0.2, 7)
    assert np.array_equal(a.beam_tensor, b.beam_tensor)
    assert a.L == 1 and a.K == 5 and a.M == 16
    assert np.all(a.gains == 1)


def test_zero_spread_rank_one():
    d = drop_single_cell(3, 8, 0.0, 1)
    for u in range(3):
        s = np.linalg.svd(d.spatial(0, u), compute_uv=False)
        assert s[1] < 1e-10 * s[0]


def test_trace_identity_large_array():
    d = drop_single_cell(10, 128, math.radians(10), 2)
    assert np.allclose(d.beam_covs().sum(axis=1), 128, rtol=1e-6)


def test_mean_aoas_in_range():
    d = drop_single_cell(50, 8, 0.1, 3)
    means = np.array([p.mean_aoa for p in d.profiles[0]])
    assert np.all(np.abs(means) <= np.pi / 2)


def test_topology_geometry():
    top = CellTopology()
    bs = top.bs_positions
    for i in range(3):
        for j in range(i + 1, 3):
            assert np.linalg.norm(bs[i] - bs[j]) == pytest.approx(500 * math.sqrt(3))
    # every BS faces the centroid
    for l in range(3):
        direction = np.array([math.cos(top.boresights[l]), math.sin(top.boresights[l])])
        assert np.allclose(direction, -bs[l] / np.linalg.norm(bs[l]))


def test_multicell_geometry_constraints():
    top = CellTopology()
    for seed in range(20):
        d = drop_multicell(top, 4, seed, 8, 0.1)
        dist = np.linalg.norm(d.positions[:, None] - d.bs_positions[None], axis=2)
        assert np.all(dist >= top.min_distance)
        for u in range(d.K):
            l = d.cell_of[u]
            assert dist[u, l] <= top.cell_radius + 1e-9
            rel = math.atan2(*(d.positions[u] - d.bs_positions[l])[::-1]) - top.boresights[l]
            rel = (rel + math.pi) % (2 * math.pi) - math.pi
            assert abs(rel) <= top.sector_width / 2 + 1e-12


def test_cross_link_scaling():
    d = drop_multicell(CellTopology(), 3, 4, 16, math.radians(10))
    for l in range(3):
        for u in range(d.K):
            assert np.trace(d.spatial(l, u)).real == pytest.approx(d.gains[l, u] * 16, rel=1e-6)
            assert d.beam_tensor[l, u].sum() == pytest.approx(d.gains[l, u] * 16, rel=1e-6)


def test_reference_distance_gain():
    m = LargeScaleModel()
    assert m.gain(100.0, 0.0) == pytest.approx(1.0)
    assert m.gain(200.0) / m.gain(100.0) == pytest.approx(2 ** -2.2)


def test_shadowing_std():
    m = LargeScaleModel()
    z = m.draw_shadowing_dB(np.random.default_rng(0), (10_000,))
    assert abs(z.std() - 8.0) < 0.03 * 8.0
    # consistent with the realized gains of a drop
    d = drop_multicell(CellTopology(), 3, 5, 8, 0.1, m)
    dist = np.linalg.norm(d.positions[None] - d.bs_positions[:, None], axis=2)
    assert np.allclose(d.gains, m.gain(dist, d.shadowing_dB))


def test_wrap_to_half_plane():
    assert wrap_to_half_plane(0.3) == pytest.approx(0.3)
    assert wrap_to_half_plane(math.pi - 0.3) == pytest.approx(0.3)
    assert wrap_to_half_plane(-math.pi / 2) == pytest.approx(-math.pi / 2)


def test_manifest_round_trip():
    for d in (drop_single_cell(3, 8, 0.2, 1), drop_multicell(CellTopology(), 2, 2, 8, 0.2)):
        back = Drop.from_manifest(d.to_manifest())
        assert np.array_equal(back.cell_of, d.cell_of)
        assert np.array_equal(back.gains, d.gains)
        assert np.array_equal(back.beam_tensor, d.beam_tensor)
        assert np.array_equal(back.steering, d.steering)


def test_conventional_bits_for_fig_parameters():
    d = drop_single_cell(10, 16, math.radians(10), 1)
    rep = conventional_baseline(d, 40, "dft", 10.0, 2, 1)
    assert conventional_classification(10, 40).bits_per_I_user == 4
    assert rep.scheme == "conventional"


def test_conventional_equals_hybrid_with_no_class_S():
    d = drop_single_cell(4, 16, math.radians(10), 2)
    a = conventional_baseline(d, 20, "dft", 10.0, 15, 3)
    b = monte_carlo_sum_rate(d, fixed_classification(4, range(4), 5), 10.0, 15, 3)
    assert np.array_equal(a.trial_sum_rates, b.trial_sum_rates)


def test_single_user_conventional_is_proposed_class_I():
    d = drop_single_cell(1, 16, math.radians(10), 2)
    a = conventional_baseline(d, 8, "dft", 10.0, 10, 3)
    b = monte_carlo_sum_rate(d, fixed_classification(1, [0], 8), 10.0, 10, 3)
    assert a.sum_rate == b.sum_rate


def test_many_bits_approach_perfect_csi():
    d = drop_single_cell(3, 8, math.radians(10), 4)
    perfect = monte_carlo_sum_rate(d, fixed_classification(3, range(3), 0), 10.0, 60, 5, perfect_csi=True)
    coarse = conventional_baseline(d, 6, "dft", 10.0, 60, 5)
    fine = conventional_baseline(d, 36, "dft", 10.0, 60, 5)
    assert coarse.sum_rate < fine.sum_rate < perfect.sum_rate


def test_multicell_conventional_runs():
    d = drop_multicell(CellTopology(), 2, 6, 8, math.radians(10))
    rep = conventional_baseline(d, 12, "skewed", 10.0, 5, 1)
    assert rep.K == 6 and np.isfinite(rep.sum_rate)
    assert monte_carlo_multicell(d, [fixed_classification(6, [0, 1], 2, users=[0, 1]),
                                     fixed_classification(6, [2], 2, users=[2, 3]),
                                     fixed_classification(6, [], 2, users=[4, 5])], 10.0, 3, 1).sum_rate > 0
