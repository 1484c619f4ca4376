import numpy as np
import pytest
from scipy.stats import ortho_group

from grassavg.errors import DimensionMismatch, InvalidConfig, RankDeficient
from grassavg.geometry import GrassmannPoint, geodesic_distance
from grassavg.learners import (BlockAccumulator, LearnerConfig, absorb_block, batch_pca,
                               empca_step, fit, make_learner, oja_step)
from grassavg.means import MeanState, iga_update, stream_mean, stream_median
from grassavg.metrics import expressed_variance

from conftest import spiked_sd


def gaussian(seed, n, d, lead=(10.0, 5.0)):
    return np.random.default_rng(seed).standard_normal((n, d)) * spiked_sd(d, lead)


def reference_blocks(data, k):
    acc = BlockAccumulator(data.shape[1], k)
    pts = []
    for x in data:
        acc, p = absorb_block(acc, x)
        if p is not None:
            pts.append(p)
    return pts, acc


def test_absorb_block_emits_span():
    acc = BlockAccumulator(3, 2)
    acc, p = absorb_block(acc, np.array([1.0, 1.0, 0.0]))
    assert p is None
    acc, p = absorb_block(acc, np.array([0.0, 2.0, 0.0]))
    ref = GrassmannPoint(np.eye(3)[:, :2])
    assert geodesic_distance(p, ref) < 1e-12


def test_absorb_block_drops_rank_deficient():
    acc = BlockAccumulator(3, 2)
    x = np.array([1.0, 2.0, 3.0])
    acc, _ = absorb_block(acc, x)
    acc, p = absorb_block(acc, 2 * x)
    assert p is None and acc.dropped == 1


def test_absorb_block_remainder(rng):
    pts, acc = reference_blocks(rng.standard_normal((7, 4)), 2)
    assert len(pts) == 3 and acc.finish() == 1


def test_absorb_block_dimension():
    with pytest.raises(DimensionMismatch):
        BlockAccumulator(3, 2).push(np.ones(4))


def test_riga_kernel_matches_reference():
    data = gaussian(0, 2001, 12)
    pts, _ = reference_blocks(data, 3)
    ref = stream_mean(pts).current
    est = fit(data, LearnerConfig("riga", 3), chunk_size=97)
    assert geodesic_distance(est.basis, ref) < 1e-10
    assert est.blocks_seen == len(pts) == 667
    assert est.telemetry["discarded_tail"] == 0  # 2001 = 3 * 667


@pytest.mark.parametrize("batch", [1, 5])
def test_rriga_kernel_matches_reference(batch):
    data = gaussian(1, 1003, 9)
    pts, _ = reference_blocks(data, 2)
    ref = stream_median(pts, batch).current
    est = fit(data, LearnerConfig("rriga", 2, median_batch=batch), chunk_size=50)
    assert geodesic_distance(est.basis, ref) < 1e-10
    assert est.telemetry["discarded_tail"] == 1


@pytest.mark.parametrize("algo", ["riga", "rriga", "oja", "empca"])
def test_chunking_invariance(algo):
    data = gaussian(2, 1500, 8)
    a = fit(data, LearnerConfig(algo, 2), chunk_size=1500).basis.basis
    b = fit(data, LearnerConfig(algo, 2), chunk_size=7).basis.basis
    np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("algo", ["riga", "rriga"])
def test_noiseless_subspace_recovered(rng, algo):
    basis = np.linalg.qr(rng.standard_normal((15, 3)))[0]
    data = rng.standard_normal((600, 3)) @ basis.T
    est = fit(data, LearnerConfig(algo, 3))
    assert geodesic_distance(est.basis, GrassmannPoint(basis)) < 1e-8


@pytest.mark.parametrize("algo", ["riga", "rriga", "oja", "empca", "batch_pca"])
def test_estimates_orthonormal_every_step(algo):
    data = gaussian(3, 400, 6)
    learner = make_learner(LearnerConfig(algo, 2))
    for i, x in enumerate(data):
        learner.partial_fit(x)
        if i >= 3:
            b = learner.estimate().basis.basis
            np.testing.assert_allclose(b.T @ b, np.eye(2), atol=1e-8)


def test_riga_invariant_to_block_rotation():
    data = gaussian(4, 1000, 7)
    pts, _ = reference_blocks(data, 2)
    rng = np.random.default_rng(0)
    rotated = [GrassmannPoint(p.basis @ ortho_group.rvs(2, random_state=rng)) for p in pts]
    assert geodesic_distance(stream_mean(pts).current, stream_mean(rotated).current) < 1e-8


def test_riga_expressed_variance_d10():
    evs = []
    for seed in range(20):
        data = gaussian(100 + seed, 20000, 10)
        est = fit(data, LearnerConfig("riga", 2))
        evs.append(expressed_variance(data, est.basis, batch_pca(data, 2)))
    assert np.median(evs) >= 0.99


def test_riga_error_decreases_with_n():
    meds = []
    for n in (2000, 8000, 32000):
        ds = []
        for seed in range(20):
            data = gaussian(200 + seed, n, 10)
            ds.append(geodesic_distance(fit(data, LearnerConfig("riga", 2)).basis, batch_pca(data, 2)))
        meds.append(np.median(ds))
    assert meds[0] > meds[1] > meds[2]


@pytest.mark.xfail(strict=True, reason="the 1/(k+1) median step converges too slowly at N=20000; "
                   "typical distance is 0.2 to 0.4")
def test_rriga_agrees_with_riga_without_outliers():
    data = gaussian(5, 20000, 20)
    a = fit(data, LearnerConfig("riga", 2)).basis
    b = fit(data, LearnerConfig("rriga", 2)).basis
    assert geodesic_distance(a, b) < 0.1


def test_rriga_riga_gap_shrinks_with_n():
    gaps = {}
    for n in (5000, 80000):
        ds = []
        for seed in range(6):
            data = gaussian(300 + seed, n, 10)
            ds.append(geodesic_distance(fit(data, LearnerConfig("riga", 2)).basis,
                                        fit(data, LearnerConfig("rriga", 2)).basis))
        gaps[n] = np.median(ds)
    assert gaps[80000] < 0.7 * gaps[5000]


def test_oja_step_orthogonal_sample():
    v = np.eye(4)[:, :2]
    np.testing.assert_allclose(oja_step(v, np.array([0, 0, 1.0, 0]), 1, 0.05), v, atol=1e-15)


def test_oja_power_iteration():
    v = np.array([[1.0], [1.0], [0.0]]) / np.sqrt(2)
    for t in range(1, 2001):
        v = oja_step(v, np.array([1.0, 0.0, 0.0]), t, 0.2)
    assert abs(v[0, 0]) > 1 - 1e-4


def test_oja_step_rank_loss():
    v = np.eye(3)[:, :2]
    x = np.array([1.0, 1.0, 0.0]) * 1e7  # huge step collapses both columns onto x
    with pytest.raises(RankDeficient):
        oja_step(v, x, 1, 0.2 * 3)
    w = oja_step(v, x, 1, 0.2 * 3, rng=np.random.default_rng(0))
    np.testing.assert_allclose(w.T @ w, np.eye(2), atol=1e-12)


def test_oja_gaussian_d10():
    data = gaussian(6, 50000, 10)
    est = fit(data, LearnerConfig("oja", 2, alpha=0.05))
    assert geodesic_distance(est.basis, batch_pca(data, 2)) < 0.2


def test_empca_step_aligned():
    v = np.array([[1.0], [0.0], [0.0]])
    np.testing.assert_allclose(empca_step(v, np.array([3.0, 0.0, 0.0]), 5, 0.7), v, atol=1e-15)


def test_empca_step_zero_sample():
    v = np.eye(3)[:, :2]
    np.testing.assert_array_equal(empca_step(v, np.zeros(3), 5, 0.7), v)


def test_empca_learner_counts_degenerate():
    learner = make_learner(LearnerConfig("empca", 2))
    learner.partial_fit(np.zeros((3, 5)))
    assert learner.estimate().skipped == 3


def test_empca_gaussian_d10():
    data = gaussian(7, 50000, 10)
    est = fit(data, LearnerConfig("empca", 2, alpha=0.7))
    assert geodesic_distance(est.basis, batch_pca(data, 2)) < 0.3


def test_batch_pca_exact_subspace(rng):
    basis = np.linalg.qr(rng.standard_normal((6, 2)))[0]
    data = rng.standard_normal((50, 2)) @ basis.T
    assert geodesic_distance(batch_pca(data, 2), GrassmannPoint(basis)) < 1e-10


def test_batch_pca_diagonal_covariance(rng):
    data = rng.standard_normal((10000, 2)) * [2.0, 1.0]
    est = batch_pca(data, 1)
    assert geodesic_distance(est, GrassmannPoint(np.array([[1.0], [0.0]]))) < 0.05


def test_batch_pca_rank_deficient():
    with pytest.raises(RankDeficient):
        batch_pca(np.outer(np.arange(1.0, 6.0), [1.0, 2.0, 3.0]), 2)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        LearnerConfig("grouse", 2)
    with pytest.raises(InvalidConfig):
        LearnerConfig("oja", 2, alpha=0.5)
    assert LearnerConfig("oja", 2, alpha=0.5, strict_alpha=False).alpha == 0.5
    assert LearnerConfig("empca", 2).alpha == 0.7
