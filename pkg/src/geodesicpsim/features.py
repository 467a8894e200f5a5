"""Per-patch features: color smoothness, discrete mean curvature, and
pixel color average/variance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FeatureError, ParameterError
from .texturing import BT601, TexturedGeodesicPatch

COT_CLAMP = 1e6
MIN_AREA = 1e-30


@dataclass(frozen=True)
class PatchGraph:
    edges: np.ndarray  # (e, 2) unique undirected edges, i < j
    sigma: float
    W: np.ndarray
    degrees: np.ndarray
    L: np.ndarray
    L_norm: np.ndarray


@dataclass(frozen=True)
class PatchFeatures:
    pcs: np.ndarray
    dmc: float
    pca: np.ndarray
    pcv: np.ndarray

    def as_dict(self):
        return {
            "pcs": self.pcs.tolist(),
            "dmc": self.dmc,
            "pca": self.pca.tolist(),
            "pcv": self.pcv.tolist(),
        }


def face_edges(faces):
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e = np.sort(e, axis=1)
    e = e[e[:, 0] != e[:, 1]]
    return np.unique(e, axis=0)


def build_patch_graph(points, faces, kernel="gaussian", laplacian="symmetric") -> PatchGraph:
    """Gaussian-weighted graph over the patch's face edges.

    The kernel width is the mean edge length. ``L_norm`` is the symmetric
    normalized Laplacian unless ``laplacian="printed"`` asks for
    ``D^-1/2 L D^1/2``.
    """
    points = np.asarray(points, float)
    faces = np.asarray(faces, dtype=np.int64)
    n = len(points)
    if n < 2 or len(faces) == 0:
        raise FeatureError("patch graph needs >= 2 vertices and >= 1 face")
    edges = face_edges(faces)
    d2 = np.sum((points[edges[:, 0]] - points[edges[:, 1]]) ** 2, axis=1)
    sigma = float(np.mean(np.sqrt(d2)))
    if not sigma > 0:
        raise FeatureError("patch edges have zero mean length")
    if kernel == "gaussian":
        w = np.exp(-d2 / (2.0 * sigma * sigma))
    elif kernel == "printed":
        w = np.exp(-d2 / (2.0 * sigma))
    else:
        raise ParameterError(f"unknown kernel {kernel!r}")
    W = np.zeros((n, n))
    W[edges[:, 0], edges[:, 1]] = w
    W[edges[:, 1], edges[:, 0]] = w
    deg = W.sum(axis=1)
    if np.any(deg <= 0):
        raise FeatureError("isolated vertex in patch graph")
    L = np.diag(deg) - W
    inv_sqrt = 1.0 / np.sqrt(deg)
    if laplacian == "symmetric":
        L_norm = inv_sqrt[:, None] * L * inv_sqrt[None, :]
    elif laplacian == "printed":
        L_norm = inv_sqrt[:, None] * L * np.sqrt(deg)[None, :]
    else:
        raise ParameterError(f"unknown laplacian {laplacian!r}")
    return PatchGraph(edges=edges, sigma=sigma, W=W, degrees=deg, L=L, L_norm=L_norm)


def patch_color_smoothness(graph: PatchGraph, tp: TexturedGeodesicPatch):
    """Per-channel ``f^T L' f`` divided by the patch pixel count."""
    total = tp.total_pixels
    if total <= 0:
        raise FeatureError("patch has no effective pixels")
    f = np.asarray(tp.vertex_colors, float)
    quad = np.einsum("ic,ij,jc->c", f, graph.L_norm, f)
    return quad / total


def _cot(a, b):
    """Cotangent of the angle between vectors a and b (rows), clamped."""
    dot = np.sum(a * b, axis=-1)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(cross > 0, dot / np.where(cross > 0, cross, 1.0), np.sign(dot) * COT_CLAMP)
    return np.clip(c, -COT_CLAMP, COT_CLAMP)


def center_mean_curvature(points, faces):
    """Mean curvature magnitude at local vertex 0 of a fan.

    Cotangent Laplace-Beltrami of the positions at the center, averaged over
    the mixed Voronoi area, projected on the angle-weighted vertex normal.
    Spoke edges with a single adjacent face use that face's cotangent only.
    """
    points = np.asarray(points, float)
    faces = np.asarray(faces, dtype=np.int64)
    # rotate each face so the center comes first, keeping orientation
    rolled = []
    for f in faces:
        pos = np.flatnonzero(f == 0)
        if len(pos) == 0:
            continue
        rolled.append(np.roll(f, -pos[0]))
    if not rolled:
        raise FeatureError("no face contains the patch center")
    tri = np.asarray(rolled)
    p = points[0]
    q = points[tri[:, 1]]
    r = points[tri[:, 2]]

    e_pq, e_pr, e_qr = q - p, r - p, r - q
    cot_q = _cot(p - q, r - q)  # angle at q, opposite spoke p-r
    cot_r = _cot(p - r, q - r)  # angle at r, opposite spoke p-q
    cot_p = _cot(e_pq, e_pr)

    lap = np.sum(cot_r[:, None] * (p - q) + cot_q[:, None] * (p - r), axis=0)

    area = 0.5 * np.linalg.norm(np.cross(e_pq, e_pr), axis=1)
    obtuse_p = np.sum(e_pq * e_pr, axis=1) < 0
    obtuse_q = np.sum(-e_pq * e_qr, axis=1) < 0
    obtuse_r = np.sum(-e_pr * -e_qr, axis=1) < 0
    voronoi = (np.sum(e_pr ** 2, axis=1) * cot_q + np.sum(e_pq ** 2, axis=1) * cot_r) / 8.0
    mixed = np.where(obtuse_p, area / 2.0, np.where(obtuse_q | obtuse_r, area / 4.0, voronoi))
    A = float(np.sum(mixed))
    if not A > MIN_AREA:
        raise FeatureError(f"mixed Voronoi area {A:g} too small")

    fn = np.cross(e_pq, e_pr)
    fn_len = np.linalg.norm(fn, axis=1)
    angle = np.arctan2(fn_len, np.sum(e_pq * e_pr, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = np.where(fn_len[:, None] > 0, fn / np.where(fn_len > 0, fn_len, 1.0)[:, None], 0.0)
    normal = np.sum(angle[:, None] * unit, axis=0)
    nlen = np.linalg.norm(normal)
    if not nlen > 0 or not np.isfinite(nlen):
        raise FeatureError("undefined vertex normal at patch center")
    normal /= nlen

    lap /= 2.0 * A
    value = abs(float(lap @ normal)) / 2.0
    if not np.isfinite(value):
        raise FeatureError("non-finite curvature")
    return value


def patch_mean_curvature(tp: TexturedGeodesicPatch):
    return center_mean_curvature(tp.patch.points, tp.patch.faces)


def patch_color_stats(tp: TexturedGeodesicPatch, conversion=BT601):
    """Pixel-count weighted averages of per-face YUV means and variances."""
    means, variances, counts = [], [], []
    for cluster in tp.face_pixels:
        if len(cluster) == 0:
            raise FeatureError("face with an empty pixel cluster")
        yuv = conversion(cluster[:, 2:5].astype(float))
        mu = yuv.mean(axis=0)
        means.append(mu)
        variances.append(np.mean((yuv - mu) ** 2, axis=0))
        counts.append(len(cluster))
    s = np.asarray(counts, float)
    pca = s @ np.asarray(means) / s.sum()
    pcv = s @ np.asarray(variances) / s.sum()
    return pca, pcv


def extract_features(tp: TexturedGeodesicPatch, conversion=BT601, kernel="gaussian",
                     laplacian="symmetric") -> PatchFeatures:
    graph = build_patch_graph(tp.patch.points, tp.patch.faces, kernel, laplacian)
    pcs = patch_color_smoothness(graph, tp)
    dmc = patch_mean_curvature(tp)
    pca, pcv = patch_color_stats(tp, conversion)
    return PatchFeatures(pcs=np.asarray(pcs), dmc=dmc, pca=pca, pcv=pcv)
