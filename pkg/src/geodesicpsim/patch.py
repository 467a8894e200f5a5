"""1-hop geodesic patches and two-step patch cropping."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, PatchError
from .mesh_io import Mesh


@dataclass(frozen=True)
class CropDiagnostics:
    D_r: float
    D_d: float
    t: float
    l_ref: float
    l_dist: float
    step1_applied: bool
    step2_applied: bool


@dataclass(frozen=True)
class GeodesicPatch:
    """Fan of faces around a center vertex.

    Local vertex 0 is the center; 1.. are the 1-hop neighbors in ascending
    global index order. ``faces`` index into the local arrays.
    """

    points: np.ndarray
    uv: np.ndarray
    faces: np.ndarray
    vertex_ids: np.ndarray

    @property
    def center(self):
        return self.points[0]

    @property
    def neighbors(self):
        return self.points[1:]

    @property
    def n_vertices(self):
        return len(self.points)

    def mean_radius(self):
        """Mean Euclidean distance from neighbors to the center."""
        return float(np.mean(np.linalg.norm(self.points[1:] - self.points[0], axis=1)))


class VertexFaceIndex:
    """Vertex -> incident face lookup in CSR form (built once per mesh)."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        flat = mesh.faces.ravel()
        order = np.argsort(flat, kind="stable")
        self._faces_of = order // 3
        self._offsets = np.searchsorted(flat[order], np.arange(mesh.n_vertices + 1))

    def incident_faces(self, v):
        return self._faces_of[self._offsets[v]:self._offsets[v + 1]]

    def build_patch(self, center: int) -> GeodesicPatch:
        mesh = self.mesh
        if not 0 <= center < mesh.n_vertices:
            raise PatchError(f"center index {center} out of range")
        fids = self.incident_faces(center)
        if len(fids) == 0:
            raise PatchError(f"vertex {center} has no incident faces")
        tri = mesh.faces[fids]
        others = np.unique(tri[tri != center])
        if len(others) == 0:
            raise PatchError(f"vertex {center} has only degenerate faces")
        ids = np.concatenate([[center], others])
        local = np.searchsorted(others, tri) + 1
        local[tri == center] = 0
        return GeodesicPatch(
            points=mesh.vertices[ids],
            uv=mesh.uv[ids],
            faces=local,
            vertex_ids=ids,
        )


def build_patch(mesh: Mesh, center: int) -> GeodesicPatch:
    return VertexFaceIndex(mesh).build_patch(center)


def _scale_about_center(patch: GeodesicPatch, factor: float) -> GeodesicPatch:
    pts = patch.points.copy()
    uv = patch.uv.copy()
    pts[1:] = pts[0] + (pts[1:] - pts[0]) * factor
    uv[1:] = uv[0] + (uv[1:] - uv[0]) * factor
    return replace(patch, points=pts, uv=uv)


def _printed_step(patch: GeodesicPatch, divisor: float) -> GeodesicPatch:
    # v' = (v - k)/divisor + v, as typeset in the original algorithm listing
    pts = patch.points.copy()
    uv = patch.uv.copy()
    pts[1:] = (pts[1:] - pts[0]) / divisor + pts[1:]
    uv[1:] = (uv[1:] - uv[0]) / divisor + uv[1:]
    return replace(patch, points=pts, uv=uv)


def crop_pair(ref: GeodesicPatch, dist: GeodesicPatch, tau: float, formula: str = "shrink"):
    """Crop a reference/distorted patch pair.

    Step 1 shrinks the distorted patch to the reference patch's mean radius
    when it is larger; step 2 shrinks any patch whose mean radius exceeds
    ``tau``. Shrinking is a uniform scaling of neighbor offsets (and their
    uv offsets) about the center, so face angles are unchanged.

    Returns ``(ref, dist, CropDiagnostics)``.
    """
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    D_r, D_d = ref.mean_radius(), dist.mean_radius()
    if not (D_r > 0 and D_d > 0 and np.isfinite(D_r) and np.isfinite(D_d)):
        raise PatchError("patch with zero mean neighbor distance")
    t = D_d / D_r
    step1 = t > 1
    if formula == "shrink":
        if step1:
            dist = _scale_about_center(dist, 1.0 / t)
        l_ref = ref.mean_radius() / tau
        l_dist = dist.mean_radius() / tau
        step2 = False
        if l_ref > 1:
            ref = _scale_about_center(ref, 1.0 / l_ref)
            step2 = True
        if l_dist > 1:
            dist = _scale_about_center(dist, 1.0 / l_dist)
            step2 = True
    elif formula == "printed":
        if step1:
            dist = _printed_step(dist, t)
        l_ref = l_dist = D_r / tau
        step2 = l_ref > 1
        if step2:
            ref = _printed_step(ref, tau)
            dist = _printed_step(dist, tau)
    else:
        raise ParameterError(f"unknown crop formula {formula!r}")
    diag = CropDiagnostics(D_r, D_d, t, l_ref, l_dist, bool(step1), bool(step2))
    return ref, dist, diag
