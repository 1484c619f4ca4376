import itertools

import numpy as np
import pytest

from grassavg.errors import BallViolation, DimensionMismatch
from grassavg.geometry import geodesic_distance, geodesic_point, random_cloud, random_point
from grassavg.means import (MeanState, MedianState, batch_frechet_median, batch_karcher_mean,
                            frechet_median_objective, iga_update, karcher_gradient, median_flush,
                            median_update, stream_mean, stream_median)

from conftest import planar, planar_angle, span


def cloud(seed, n, d=10, k=2, radius=0.5):
    rng = np.random.default_rng(seed)
    return random_cloud(random_point(d, k, rng), n, radius, rng)


def test_iga_first_update_is_midpoint():
    x, y = planar(0.1), planar(0.7)
    s = iga_update(MeanState.first(x), y)
    assert s.count == 2
    assert planar_angle(s.current) == pytest.approx(0.4, abs=1e-14)


def test_iga_update_same_point():
    x = planar(0.3)
    s = iga_update(MeanState(x, count=4), planar(0.3))
    assert s.count == 5 and geodesic_distance(s.current, x) < 1e-12


def test_iga_skips_right_angle():
    s = iga_update(MeanState.first(span(0, 1, d=4)), span(0, 2, d=4))
    assert s.count == 1 and s.skipped == 1


def test_iga_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        iga_update(MeanState.first(planar(0.0)), span(0, 1, d=3))


@pytest.mark.parametrize("order", list(itertools.permutations([0.0, 0.2, 0.4])))
def test_iga_collinear_planar(order):
    # on one great circle the recursion is the running arithmetic mean of angles
    est = stream_mean([planar(a) for a in order]).current
    assert planar_angle(est) == pytest.approx(0.2, abs=1e-12)


def test_karcher_examples():
    x = planar(0.3)
    assert geodesic_distance(batch_karcher_mean([x]), x) < 1e-12
    a, b = cloud(1, 2)
    mid = geodesic_point(a, b, 0.5)
    assert geodesic_distance(batch_karcher_mean([a, b]), mid) < 1e-8
    m = batch_karcher_mean([planar(0.0), planar(0.2), planar(0.4)])
    assert planar_angle(m) == pytest.approx(0.2, abs=1e-8)


def test_karcher_gradient_small_at_result():
    pts = cloud(2, 60)
    m = batch_karcher_mean(pts, tol=1e-9)
    assert np.linalg.norm(karcher_gradient(m, pts)) < 1e-9


def test_karcher_ball_violation():
    with pytest.raises(BallViolation):
        batch_karcher_mean([span(0, 1, d=4), span(2, 3, d=4)])


def test_median_update_zero_distance():
    x = planar(0.2)
    s = MedianState.first(x, batch_size=3)
    for _ in range(3):
        s = median_update(s, planar(0.2))
    assert s.count == 2 and not s.buffer and s.skipped == 3
    assert geodesic_distance(s.current, x) < 1e-12


def test_median_update_unit_step():
    # batch 1, k = 1: a step of length 1/2 towards x, whatever the distance
    s = median_update(MedianState.first(planar(0.0), batch_size=1), planar(0.9))
    assert planar_angle(s.current) == pytest.approx(0.5, abs=1e-14)


def test_median_buffer_semantics():
    s = MedianState.first(planar(0.0), batch_size=5)
    for a in (0.1, 0.2, 0.3):
        s = median_update(s, planar(a))
    assert len(s.buffer) == 3 and s.count == 1
    s = median_flush(s)
    assert not s.buffer and s.count == 2
    # three unit directions averaged over the 3 buffered points, halved
    assert planar_angle(s.current) == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("batch", [1, 5])
def test_median_stream_collinear(batch):
    rng = np.random.default_rng(0)
    pts = []
    for _ in range(300):
        pts += [planar(a) for a in rng.permutation([0.0, 0.1, 0.5])]
    assert planar_angle(stream_median(pts, batch).current) == pytest.approx(0.1, abs=0.05)


def test_frechet_median_examples():
    x = planar(0.3)
    assert geodesic_distance(batch_frechet_median([x]), x) < 1e-12
    m = batch_frechet_median([planar(0.0), planar(0.1), planar(0.5)])
    assert planar_angle(m) == pytest.approx(0.1, abs=1e-8)
    a, b = cloud(4, 2)
    assert geodesic_distance(batch_frechet_median([a, b]), geodesic_point(a, b, 0.5)) < 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_median_objective_below_mean(seed):
    pts = cloud(seed, 40)
    med = batch_frechet_median(pts)
    mean = batch_karcher_mean(pts)
    assert frechet_median_objective(med, pts) <= frechet_median_objective(mean, pts) + 1e-9


def test_stream_mean_permutation_stability():
    n, radius = 200, 0.5
    pts = cloud(11, n, radius=radius)
    rng = np.random.default_rng(5)
    ests = [stream_mean([pts[i] for i in rng.permutation(n)]).current for _ in range(10)]
    worst = max(geodesic_distance(a, b) for a, b in itertools.combinations(ests, 2))
    assert worst < 5 / n * radius


def test_stream_mean_consistency_small():
    meds = []
    for n in (50, 200, 800):
        ds = []
        for seed in range(8):
            pts = cloud(100 + seed, n)
            ds.append(geodesic_distance(stream_mean(pts).current, batch_karcher_mean(pts)))
        meds.append(np.median(ds))
    assert meds[0] > meds[1] > meds[2]


def test_convergence_rate_bound():
    pts = cloud(21, 300)
    ref = batch_karcher_mean(pts)
    state = MeanState.first(pts[0])
    prev = geodesic_distance(state.current, ref)
    for k, x in enumerate(pts[1:], start=2):
        state = iga_update(state, x)
        cur = geodesic_distance(state.current, ref)
        # triangle-inequality bound: d_k <= (1 + 1/k) d_{k-1} + d(x_k, M) / k
        assert cur <= (1 + 1 / k) * prev + geodesic_distance(x, ref) / k + 1e-12
        prev = cur
