"""Mesh cleaning: iterative removal of duplicated/unreferenced vertices and
duplicated/null faces, until nothing changes."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import CleanError
from .mesh_io import Mesh


@dataclass
class CleanReport:
    duplicated_vertices_removed: int = 0
    unreferenced_vertices_removed: int = 0
    duplicated_faces_removed: int = 0
    null_faces_removed: int = 0
    iterations: int = 0

    def as_dict(self):
        return asdict(self)


def _vertex_pass(vertices, uv, faces):
    """Drop duplicated and unreferenced vertices, reindex faces.

    A vertex is a duplicate when an earlier vertex has bit-identical
    position and uv; references are redirected to the earliest copy.
    """
    n = len(vertices)
    if n == 0:
        return vertices, uv, faces, 0, 0
    key = np.ascontiguousarray(np.hstack([vertices, uv]))
    # byte view gives bit-exact identity (-0.0 != 0.0, NaN-safe)
    rows = key.view(np.dtype((np.void, key.dtype.itemsize * key.shape[1]))).ravel()
    _, first, inverse = np.unique(rows, return_index=True, return_inverse=True)
    canonical = first[inverse.ravel()]
    is_dup = canonical != np.arange(n)
    faces = canonical[faces]

    referenced = np.zeros(n, dtype=bool)
    referenced[faces.ravel()] = True
    is_unref = ~is_dup & ~referenced
    keep = ~is_dup & ~is_unref

    new_index = np.full(n, -1, dtype=np.int64)
    new_index[keep] = np.arange(int(keep.sum()))
    return (
        vertices[keep],
        uv[keep],
        new_index[faces],
        int(is_dup.sum()),
        int(is_unref.sum()),
    )


def _face_pass(faces):
    """Drop null faces (repeated index) and later copies of the same index set."""
    if len(faces) == 0:
        return faces, 0, 0
    null = (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
    srt = np.sort(faces, axis=1)
    _, first = np.unique(srt, axis=0, return_index=True)
    is_first = np.zeros(len(faces), dtype=bool)
    is_first[first] = True
    dup = ~is_first & ~null
    # a null face that duplicates another null face counts once, as null
    keep = ~null & ~dup
    return faces[keep], int(dup.sum()), int(null.sum())


def clean(mesh: Mesh) -> tuple[Mesh, CleanReport]:
    """Return the cleaned mesh and a count of what was removed.

    Raises :class:`CleanError` when no face survives.
    """
    vertices = np.array(mesh.vertices)
    uv = np.array(mesh.uv)
    faces = np.array(mesh.faces, dtype=np.int64).reshape(-1, 3)
    report = CleanReport()
    limit = len(vertices) + len(faces) + 1
    while True:
        report.iterations += 1
        vertices, uv, faces, n_dup, n_unref = _vertex_pass(vertices, uv, faces)
        faces, n_dup_f, n_null = _face_pass(faces)
        report.duplicated_vertices_removed += n_dup
        report.unreferenced_vertices_removed += n_unref
        report.duplicated_faces_removed += n_dup_f
        report.null_faces_removed += n_null
        if n_dup + n_unref + n_dup_f + n_null == 0:
            break
        if report.iterations > limit:  # pragma: no cover - guarded by strict decrease
            raise CleanError("cleaning failed to reach a fixed point")
    if len(faces) == 0:
        raise CleanError("mesh is empty after cleaning")
    return Mesh(vertices=vertices, uv=uv, faces=faces), report
