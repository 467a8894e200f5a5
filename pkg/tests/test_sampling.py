import itertools

import numpy as np
import pytest

from geodesicpsim.errors import ParameterError
from geodesicpsim.mesh_io import Mesh
from geodesicpsim.sampling import (
    nearest_vertices,
    pair_keypoints,
    sample_fps,
    sample_fps_indices,
    sample_random,
    sample_random_indices,
    select_keypoints,
)


def cloud(points):
    points = np.asarray(points, float)
    return Mesh(vertices=points, uv=np.zeros((len(points), 2)), faces=[[0, 0, 0]])


def brute_nearest(points, verts):
    out = []
    for p in points:
        d2 = [float(np.sum((v - p) ** 2)) for v in verts]
        best = min(d2)
        out.append(d2.index(best))  # first index among ties
    return np.array(out)


def brute_fps(pts, k):
    chosen = [0]
    while len(chosen) < k:
        best, best_d = None, -1.0
        for i in range(len(pts)):
            d = min(float(np.sum((pts[i] - pts[j]) ** 2)) for j in chosen)
            if d > best_d:
                best, best_d = i, d
        chosen.append(best)
    return chosen


def test_random_clamps_to_all_vertices():
    m = cloud([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert np.array_equal(sample_random(m, 500, seed=1), m.vertices)


def test_random_is_deterministic_and_seeded():
    rng = np.random.default_rng(123)
    m = cloud(rng.random((10000, 3)))
    a = sample_random_indices(m, 500, seed=1)
    assert np.array_equal(a, sample_random_indices(m, 500, seed=1))
    b = sample_random_indices(m, 500, seed=2)
    assert len(np.unique(a)) == 500
    # frozen from a first run
    assert a[:8].tolist() == [56, 68, 110, 136, 150, 164, 166, 189] and int(a.sum()) == 2565804
    assert b[:8].tolist() == [23, 31, 32, 65, 94, 116, 124, 138] and int(b.sum()) == 2500539


@pytest.mark.parametrize("fn", [lambda m: sample_fps(m, 0), lambda m: sample_random(m, 0, 1)])
def test_zero_keypoints_rejected(fn):
    with pytest.raises(ParameterError):
        fn(cloud([[0, 0, 0]]))


def test_fps_square_corners():
    pts = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0.5, 0.5, 0]]
    chosen = sample_fps_indices(cloud(pts), 4)
    assert sorted(chosen.tolist()) == [0, 1, 2, 3]
    assert chosen.tolist() == brute_fps(np.array(pts, float), 4)


def test_fps_first_and_collinear():
    assert sample_fps_indices(cloud([[3, 0, 0], [0, 0, 0]]), 1).tolist() == [0]
    assert sorted(sample_fps_indices(cloud([[0, 0, 0], [1, 0, 0], [2, 0, 0]]), 2).tolist()) == [0, 2]


def test_fps_matches_brute_force_with_ties():
    pts = np.array(list(itertools.product([0, 1, 2], repeat=3)), float)
    assert sample_fps_indices(cloud(pts), 12).tolist() == brute_fps(pts, 12)


def test_nearest_exact_match_and_tie():
    verts = np.zeros((10, 3))
    verts[:, 0] = np.arange(10) * 10.0
    verts[7] = [3.0, 3.0, 3.0]
    assert nearest_vertices([[3.0, 3.0, 3.0]], cloud(verts)).tolist() == [7]
    verts[2] = [1.0, 0.0, 0.0]
    verts[9] = [-1.0, 0.0, 0.0]
    assert nearest_vertices([[0.0, 0.0, 0.0]], cloud(verts)).tolist()[0] == 0
    verts[0] = [50.0, 50.0, 50.0]
    assert nearest_vertices([[0.0, 0.0, 0.0]], cloud(verts)).tolist() == [2]


def test_nearest_matches_brute_force_on_lattice():
    # integer lattice produces many exact ties
    rng = np.random.default_rng(5)
    verts = rng.integers(0, 6, (2000, 3)).astype(float)
    pts = rng.integers(0, 6, (300, 3)).astype(float) + rng.choice([0, 0.5], (300, 3))
    assert np.array_equal(nearest_vertices(pts, cloud(verts)), brute_nearest(pts, verts))


@pytest.mark.slow
def test_nearest_500_against_100k():
    rng = np.random.default_rng(9)
    verts = rng.random((100_000, 3))
    pts = rng.random((500, 3))
    d2 = ((pts[:, None, :] - verts[None, :, :]) ** 2).sum(axis=2)
    assert np.array_equal(nearest_vertices(pts, cloud(verts)), d2.argmin(axis=1))


def test_pair_keypoints_from_distorted_is_zero_distance():
    rng = np.random.default_rng(1)
    ref = cloud(rng.random((400, 3)))
    dist = cloud(rng.random((300, 3)))
    kps = select_keypoints(ref, dist, 50, sampler="rs", seed=3)
    assert np.array_equal(dist.vertices[kps.dist_index], kps.keypoints)
    assert np.array_equal(kps.ref_index, brute_nearest(kps.keypoints, ref.vertices))
    kps_ref = select_keypoints(ref, dist, 50, sampler="fps", source="ref")
    assert np.array_equal(ref.vertices[kps_ref.ref_index], kps_ref.keypoints)
    assert len(pair_keypoints(kps.keypoints, ref, dist).pairs) == 50
