"""Patch texture mapping: uv -> pixel space, per-face pixel clusters, and
per-vertex colors in YUV."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .mesh_io import TextureImage
from .patch import GeodesicPatch

_EPS = 1e-9


@dataclass(frozen=True)
class ColorConversion:
    """Affine RGB -> YUV map: ``yuv = matrix @ rgb + offset``, clipped to [0, 255]."""

    name: str
    matrix: np.ndarray
    offset: np.ndarray

    def __call__(self, rgb):
        rgb = np.asarray(rgb, float)
        return np.clip(rgb @ self.matrix.T + self.offset, 0.0, 255.0)

    def unclipped(self, rgb):
        return np.asarray(rgb, float) @ self.matrix.T + self.offset

    def inverse(self, yuv):
        return np.linalg.solve(self.matrix, (np.asarray(yuv, float) - self.offset).T).T


BT601 = ColorConversion(
    "bt601",
    np.array([
        [0.299, 0.587, 0.114],
        [-0.1687, -0.3313, 0.5],
        [0.5, -0.4187, -0.0813],
    ]),
    np.array([0.0, 128.0, 128.0]),
)

_KR, _KB = 0.2126, 0.0722
_KG = 1.0 - _KR - _KB
BT709 = ColorConversion(
    "bt709",
    np.array([
        [_KR, _KG, _KB],
        [-_KR / (2 * (1 - _KB)), -_KG / (2 * (1 - _KB)), 0.5],
        [0.5, -_KG / (2 * (1 - _KR)), -_KB / (2 * (1 - _KR))],
    ]),
    np.array([0.0, 128.0, 128.0]),
)

COLOR_SPACES = {"bt601": BT601, "bt709": BT709}


def get_conversion(name) -> ColorConversion:
    try:
        return COLOR_SPACES[name]
    except KeyError:
        raise ParameterError(f"unknown color space {name!r}") from None


def rgb_to_yuv(r, g, b, conversion=BT601):
    y, u, v = conversion([r, g, b])
    return float(y), float(u), float(v)


def wrap_unit(t):
    """Wrap coordinates outside [0, 1] by ``t - floor(t)``; in-range values are kept
    as-is so that 1.0 still addresses the image edge."""
    t = np.asarray(t, float)
    outside = (t < 0) | (t > 1)
    return np.where(outside, t - np.floor(t), t)


def uv_to_pixel(u, v, width, height, clamp=True):
    """Continuous pixel coordinates ``x = u*W, y = (1 - v)*H`` (y grows downward)."""
    x = wrap_unit(u) * width
    y = (1.0 - wrap_unit(v)) * height
    if clamp:
        x = np.clip(x, 0.0, width - _EPS)
        y = np.clip(y, 0.0, height - _EPS)
    return x, y


# ------------------------------------------------------------ rasterizing


def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def _owns_boundary(ax, ay, bx, by, cx, cy):
    """Top-left rule: does edge a-b own the pixel centers lying exactly on it?

    A horizontal edge owns them when the triangle lies below it (top edge);
    any other edge owns them when the triangle lies to its right (left edge).
    """
    inside = _edge(ax, ay, bx, by, cx, cy)
    if ay == by:
        return (bx - ax) * inside > 0
    return -(by - ay) * inside > 0


def rasterize_triangle(tri, width, height):
    """Pixels ``(col, row)`` whose centers fall in the pixel-space triangle.

    ``tri`` is a (3, 2) array in continuous pixel coordinates. Pixels on an
    edge are claimed under the top-left rule. Coordinates are wrapped modulo
    the image size. An empty result falls back to the single pixel under the
    centroid.
    """
    tri = np.asarray(tri, float)
    (ax, ay), (bx, by), (cx, cy) = tri.tolist()
    area2 = _edge(ax, ay, bx, by, cx, cy)
    pixels = np.zeros((0, 2), dtype=np.int64)
    if area2 != 0:
        x0 = math.floor(min(ax, bx, cx) - 0.5)
        x1 = math.ceil(max(ax, bx, cx) - 0.5)
        y0 = math.floor(min(ay, by, cy) - 0.5)
        y1 = math.ceil(max(ay, by, cy) - 0.5)
        xs = np.arange(x0, x1 + 1)
        ys = np.arange(y0, y1 + 1)
        px, py = np.meshgrid(xs + 0.5, ys + 0.5)
        mask = np.ones(px.shape, dtype=bool)
        for (qx, qy), (rx, ry), (sx, sy) in (
            ((ax, ay), (bx, by), (cx, cy)),
            ((bx, by), (cx, cy), (ax, ay)),
            ((cx, cy), (ax, ay), (bx, by)),
        ):
            e = _edge(qx, qy, rx, ry, px, py) * np.sign(area2)
            if _owns_boundary(qx, qy, rx, ry, sx, sy):
                mask &= e >= 0
            else:
                mask &= e > 0
        rows, cols = np.nonzero(mask)
        pixels = np.stack([xs[cols], ys[rows]], axis=1)
    if len(pixels) == 0:
        # centroids sit in [0, W] x [0, H]; keep the far edge on the last pixel
        gx = min(max(math.floor((ax + bx + cx) / 3.0), 0), width - 1)
        gy = min(max(math.floor((ay + by + cy) / 3.0), 0), height - 1)
        pixels = np.array([[gx, gy]], dtype=np.int64)
    pixels[:, 0] %= width
    pixels[:, 1] %= height
    return pixels


def face_to_pixel_triangle(uv_tri, width, height):
    """Map a uv triangle to pixel space.

    Triangles inside the unit square map directly. Triangles reaching outside
    it are shifted as a whole by the integer part of their centroid, so
    seam-crossing faces stay contiguous; pixel lookups then wrap.
    """
    uv_tri = np.asarray(uv_tri, float)
    if np.any((uv_tri < 0) | (uv_tri > 1)):
        uv_tri = uv_tri - np.floor(uv_tri.mean(axis=0))
    x = uv_tri[:, 0] * width
    y = (1.0 - uv_tri[:, 1]) * height
    return np.stack([x, y], axis=1)


def rasterize_face(uv_tri, image: TextureImage):
    return rasterize_triangle(face_to_pixel_triangle(uv_tri, image.width, image.height),
                              image.width, image.height)


def sample_vertex_rgb(uv, image: TextureImage):
    """Nearest-pixel RGB at each uv (``uv`` is (n, 2))."""
    uv = np.asarray(uv, float).reshape(-1, 2)
    x, y = uv_to_pixel(uv[:, 0], uv[:, 1], image.width, image.height)
    cols = np.floor(x).astype(np.int64)
    rows = np.floor(y).astype(np.int64)
    return image.pixels[rows, cols].astype(float)


def sample_vertex_color(uv, image: TextureImage, conversion=BT601):
    return conversion(sample_vertex_rgb(uv, image))


@dataclass(frozen=True)
class TexturedGeodesicPatch:
    patch: GeodesicPatch
    face_pixels: list  # per face: (m, 5) int array of (x, y, R, G, B)
    vertex_colors: np.ndarray  # (n, 3) YUV, center first

    @property
    def total_pixels(self):
        return int(sum(len(p) for p in self.face_pixels))

    @property
    def face_counts(self):
        return np.array([len(p) for p in self.face_pixels], dtype=np.int64)


def texture_patch(patch: GeodesicPatch, image: TextureImage, conversion=BT601):
    clusters = []
    for face in patch.faces:
        pix = rasterize_face(patch.uv[face], image)
        rgb = image.pixels[pix[:, 1], pix[:, 0]].astype(np.int64)
        clusters.append(np.hstack([pix, rgb]))
    colors = sample_vertex_color(patch.uv, image, conversion)
    return TexturedGeodesicPatch(patch=patch, face_pixels=clusters, vertex_colors=colors)
