"""Keypoint selection and exact nearest-vertex pairing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError
from .mesh_io import Mesh


@dataclass(frozen=True)
class KeypointSet:
    keypoints: np.ndarray  # (k, 3)
    ref_index: np.ndarray  # (k,) nearest reference vertex
    dist_index: np.ndarray  # (k,) nearest distorted vertex

    def __len__(self):
        return len(self.keypoints)

    @property
    def pairs(self):
        return list(zip(self.ref_index.tolist(), self.dist_index.tolist()))


def _check(mesh, kn):
    if kn < 1:
        raise ParameterError(f"number of keypoints must be >= 1, got {kn}")
    if mesh.n_vertices == 0:
        raise ParameterError("cannot sample keypoints from an empty mesh")


def sample_random_indices(mesh: Mesh, kn: int, seed: int) -> np.ndarray:
    _check(mesh, kn)
    n = mesh.n_vertices
    if kn >= n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=kn, replace=False))


def sample_fps_indices(mesh: Mesh, kn: int) -> np.ndarray:
    """Greedy farthest-point order starting at vertex 0.

    Ties go to the smallest index (``argmax`` returns the first maximum).
    """
    _check(mesh, kn)
    pts = mesh.vertices
    n = len(pts)
    kn = min(kn, n)
    chosen = np.empty(kn, dtype=np.int64)
    chosen[0] = 0
    mind = np.sum((pts - pts[0]) ** 2, axis=1)
    for i in range(1, kn):
        nxt = int(np.argmax(mind))
        chosen[i] = nxt
        np.minimum(mind, np.sum((pts - pts[nxt]) ** 2, axis=1), out=mind)
    return chosen


def sample_random(mesh: Mesh, kn: int, seed: int) -> np.ndarray:
    return mesh.vertices[sample_random_indices(mesh, kn, seed)]


def sample_fps(mesh: Mesh, kn: int) -> np.ndarray:
    return mesh.vertices[sample_fps_indices(mesh, kn)]


def nearest_vertices(points, mesh: Mesh) -> np.ndarray:
    """Exact Euclidean nearest vertex for each point, smallest index on ties."""
    pts = np.asarray(points, float).reshape(-1, 3)
    verts = mesh.vertices
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64)
    tree = cKDTree(verts)
    dist, idx = tree.query(pts, k=1)
    out = np.asarray(idx, dtype=np.int64).copy()
    # the tree returns *a* nearest vertex; resolve ties explicitly
    cands = tree.query_ball_point(pts, r=dist * (1 + 1e-9) + 1e-300)
    for i, cand in enumerate(cands):
        if len(cand) <= 1:
            continue
        cand = np.asarray(cand)
        d2 = np.sum((verts[cand] - pts[i]) ** 2, axis=1)
        best = cand[d2 == d2.min()]
        out[i] = int(best.min())
    return out


def pair_keypoints(keypoints, ref: Mesh, dist: Mesh) -> KeypointSet:
    keypoints = np.asarray(keypoints, float).reshape(-1, 3)
    return KeypointSet(
        keypoints=keypoints,
        ref_index=nearest_vertices(keypoints, ref),
        dist_index=nearest_vertices(keypoints, dist),
    )


def select_keypoints(ref: Mesh, dist: Mesh, kn: int, sampler: str = "fps", seed: int = 0,
                     source: str = "dist") -> KeypointSet:
    """Sample keypoints from the chosen source mesh and pair them."""
    src = {"dist": dist, "ref": ref}.get(source)
    if src is None:
        raise ParameterError(f"unknown keypoint source {source!r}")
    if sampler == "rs":
        pts = sample_random(src, kn, seed)
    elif sampler == "fps":
        pts = sample_fps(src, kn)
    else:
        raise ParameterError(f"unknown sampler {sampler!r}")
    return pair_keypoints(pts, ref, dist)
