"""Deterministic synthetic corpus: icospheres, planar grids, a seamed cube,
procedural textures with a noise ladder, decimation ladder, and a mesh with
injected defects."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .mesh_io import Mesh, serialize_obj

NOISE_LEVELS = (0, 5, 10, 20)
DECIMATION_LEVELS = (0.9, 0.7, 0.5)
# Fabricated MOS for the 7-row ladder manifest: monotone within each family;
# the interleaving of the two families is fixed, not measured.
LADDER_NOISE_MOS = (5.0, 4.5, 4.0, 3.0)
LADDER_DECIMATION_MOS = (3.5, 2.5, 2.0)

CUBE_OBJ = """\
# unit cube, cross-layout unwrap (8 positions, 14 uvs)
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
vt 0 0.3333333333333333
vt 0.25 0.3333333333333333
vt 0.5 0.3333333333333333
vt 0.75 0.3333333333333333
vt 1 0.3333333333333333
vt 0 0.6666666666666666
vt 0.25 0.6666666666666666
vt 0.5 0.6666666666666666
vt 0.75 0.6666666666666666
vt 1 0.6666666666666666
vt 0.25 1
vt 0.5 1
vt 0.25 0
vt 0.5 0
f 5/2 6/3 7/8 8/7
f 6/3 2/4 3/9 7/8
f 2/4 1/5 4/10 3/9
f 1/1 5/2 8/7 4/6
f 8/7 7/8 3/12 4/11
f 1/13 2/14 6/3 5/2
"""


# ----------------------------------------------------------------- geometry


def icosphere(subdiv=3, radius=1.0):
    """Positions (n, 3) and outward-oriented faces (m, 3) of a subdivided icosahedron."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdiv):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.asarray(verts) * radius, np.asarray(faces, dtype=np.int64)


def sphere_corner_uv(positions, faces):
    """Equirectangular uv per face corner, (m, 3, 2).

    Faces straddling the longitude seam get u > 1 on one side so they stay
    contiguous in texture space; pole corners take the mean u of the face.
    """
    p = positions[faces]  # (m, 3, 3)
    r = np.linalg.norm(p, axis=2)
    u = 0.5 + np.arctan2(p[..., 1], p[..., 0]) / (2 * math.pi)
    v = 0.5 + np.arcsin(np.clip(p[..., 2] / r, -1, 1)) / math.pi
    pole = np.hypot(p[..., 0], p[..., 1]) < 1e-12 * r
    for f in range(len(faces)):
        uf = u[f]
        ok = ~pole[f]
        if np.ptp(uf[ok]) > 0.5:
            uf[ok & (uf < 0.5)] += 1.0
        if pole[f].any():
            uf[pole[f]] = uf[ok].mean()
    return np.stack([u, v], axis=2)


def corner_uv_obj(positions, faces, corner_uv, comment=None):
    """OBJ text with positions and per-corner uvs (shared uvs deduplicated)."""
    out = io.StringIO()
    if comment:
        out.write(f"# {comment}\n")
    for x, y, z in positions.tolist():
        out.write(f"v {x!r} {y!r} {z!r}\n")
    uv_index, uv_list = {}, []
    ids = np.zeros(faces.shape, dtype=np.int64)
    for f in range(len(faces)):
        for k in range(3):
            key = (float(corner_uv[f, k, 0]), float(corner_uv[f, k, 1]))
            if key not in uv_index:
                uv_index[key] = len(uv_list)
                uv_list.append(key)
            ids[f, k] = uv_index[key]
    for u, v in uv_list:
        out.write(f"vt {u!r} {v!r}\n")
    for f in range(len(faces)):
        a, b, c = (faces[f] + 1).tolist()
        ta, tb, tc = (ids[f] + 1).tolist()
        out.write(f"f {a}/{ta} {b}/{tb} {c}/{tc}\n")
    return out.getvalue()


def grid_plane(n=9, size=1.0, z=0.0):
    """``n x n`` vertex grid in the plane ``z``; uv follows xy."""
    t = np.linspace(0.0, 1.0, n)
    u, v = np.meshgrid(t, t)
    uv = np.stack([u.ravel(), v.ravel()], axis=1)
    verts = np.column_stack([uv * size, np.full(n * n, z)])
    faces = []
    for j in range(n - 1):
        for i in range(n - 1):
            a = j * n + i
            faces.append((a, a + 1, a + n + 1))
            faces.append((a, a + n + 1, a + n))
    return Mesh(vertices=verts, uv=uv, faces=np.asarray(faces))


def dirty_grid():
    """Grid mesh with injected defects.

    Injected: 3 duplicated vertices (referenced in place of their originals),
    2 unreferenced vertices, 2 duplicated faces, 1 null face. Cleaning must
    report exactly these counts.
    """
    base = grid_plane(5)
    verts = base.vertices.tolist()
    uv = base.uv.tolist()
    faces = base.faces.tolist()
    for f_idx, corner in ((0, 0), (5, 1), (10, 2)):
        src = faces[f_idx][corner]
        verts.append(list(verts[src]))
        uv.append(list(uv[src]))
        faces[f_idx][corner] = len(verts) - 1
    verts += [[5.0, 5.0, 5.0], [6.0, 6.0, 6.0]]
    uv += [[0.5, 0.5], [0.25, 0.25]]
    faces.append(list(faces[3]))
    faces.append([faces[7][1], faces[7][2], faces[7][0]])
    faces.append([faces[12][0], faces[12][0], faces[12][1]])
    return Mesh(vertices=verts, uv=uv, faces=faces)


def _link(faces, v):
    return set(faces[np.any(faces == v, axis=1)].ravel().tolist()) - {v}


def decimate(positions, faces, target_faces):
    """Shortest-edge collapse (to the midpoint) down to ``target_faces``.

    Collapses that would break the link condition or flip a face are skipped.
    Returns compacted ``(positions, faces)``.
    """
    pos = np.array(positions, float)
    faces = np.array(faces, dtype=np.int64)
    while len(faces) > target_faces:
        e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        e = np.unique(np.sort(e, axis=1), axis=0)
        length = np.linalg.norm(pos[e[:, 0]] - pos[e[:, 1]], axis=1)
        order = np.lexsort((e[:, 1], e[:, 0], length))
        done = False
        for a, b in e[order].tolist():
            if len(_link(faces, a) & _link(faces, b)) != 2:
                continue
            new_p = (pos[a] + pos[b]) / 2.0
            touched = np.any((faces == a) | (faces == b), axis=1)
            shared = np.sum((faces == a) | (faces == b), axis=1) == 2
            ring = faces[touched & ~shared]
            old_n = np.cross(pos[ring[:, 1]] - pos[ring[:, 0]], pos[ring[:, 2]] - pos[ring[:, 0]])
            moved = pos.copy()
            moved[a] = new_p
            moved[b] = new_p
            new_n = np.cross(moved[ring[:, 1]] - moved[ring[:, 0]],
                             moved[ring[:, 2]] - moved[ring[:, 0]])
            if np.any(np.sum(old_n * new_n, axis=1) <= 0):
                continue
            pos[a] = new_p
            faces = faces[~shared]
            faces[faces == b] = a
            done = True
            break
        if not done:
            break
    used = np.unique(faces)
    remap = np.full(len(pos), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return pos[used], remap[faces]


# ------------------------------------------------------------------ texture


def base_texture(width=512, height=256):
    """Smooth color gradients with stripes and a soft checker; (H, W, 3) uint8."""
    y, x = np.mgrid[0:height, 0:width].astype(float)
    u = (x + 0.5) / width
    v = (y + 0.5) / height
    r = 128 + 90 * np.sin(2 * math.pi * 3 * u) * np.cos(2 * math.pi * 2 * v)
    g = 128 + 80 * np.cos(2 * math.pi * (5 * u + 3 * v))
    checker = ((np.floor(u * 16) + np.floor(v * 8)) % 2) * 2 - 1
    b = 128 + 60 * checker + 40 * np.sin(2 * math.pi * 7 * v)
    return np.clip(np.rint(np.stack([r, g, b], axis=2)), 0, 255).astype(np.uint8)


def checkerboard_texture(size=64, cells=8):
    idx = (np.arange(size) * cells // size)
    board = (idx[:, None] + idx[None, :]) % 2
    px = np.where(board[..., None] == 1, 230, 25).astype(np.uint8)
    return np.repeat(px, 3, axis=2)


def uniform_texture(color=(180, 90, 40), size=32):
    return np.tile(np.asarray(color, dtype=np.uint8), (size, size, 1))


def noisy(pixels, sigma, seed):
    """Add clipped Gaussian noise of std ``sigma``; the draw is shared across sigmas."""
    if sigma == 0:
        return np.array(pixels, dtype=np.uint8)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(pixels.shape)
    return np.clip(np.rint(pixels + sigma * noise), 0, 255).astype(np.uint8)


def png_bytes(pixels):
    buf = io.BytesIO()
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), "RGB").save(buf, format="PNG")
    return buf.getvalue()


# ------------------------------------------------------------------- corpus


def textured_sphere_obj(subdiv=3, radius=1.0):
    pos, faces = icosphere(subdiv, radius)
    return corner_uv_obj(pos, faces, sphere_corner_uv(pos, faces),
                         f"icosphere subdiv={subdiv} radius={radius}")


def decimated_sphere_obj(fraction, subdiv=3, radius=1.0):
    pos, faces = icosphere(subdiv, radius)
    pos, faces = decimate(pos, faces, int(round(fraction * len(faces))))
    return corner_uv_obj(pos, faces, sphere_corner_uv(pos, faces),
                         f"icosphere subdiv={subdiv} decimated to {len(faces)} faces")


def generate_corpus(out_dir, seed=0):
    """Write the fixture corpus; returns ``{filename: digest}``.

    OBJ/CSV digests hash the file bytes; PNG digests hash the decoded pixel
    buffer, which is independent of the PNG encoder.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}

    def put(name, data):
        if isinstance(data, str):
            data = data.encode()
        (out / name).write_bytes(data)
        files[name] = data

    for s in (1, 2, 3, 4):
        put(f"icosphere_s{s}.obj", textured_sphere_obj(s))
    put("cube.obj", CUBE_OBJ)
    put("grid.obj", serialize_obj(grid_plane(9)))
    put("dirty_grid.obj", serialize_obj(dirty_grid()))
    for frac in DECIMATION_LEVELS:
        put(f"icosphere_s3_dec{int(frac * 100)}.obj", decimated_sphere_obj(frac))

    base = base_texture()
    put("sphere_tex.png", png_bytes(base))
    for sigma in NOISE_LEVELS:
        put(f"sphere_tex_noise{sigma}.png", png_bytes(noisy(base, sigma, seed)))
    put("checker.png", png_bytes(checkerboard_texture()))
    put("uniform.png", png_bytes(uniform_texture()))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ref_mesh", "ref_tex", "dist_mesh", "dist_tex", "mos", "class"])
    for sigma, mos in zip(NOISE_LEVELS, LADDER_NOISE_MOS):
        w.writerow(["icosphere_s3.obj", "sphere_tex.png", "icosphere_s3.obj",
                    f"sphere_tex_noise{sigma}.png", mos, "noise"])
    for frac, mos in zip(DECIMATION_LEVELS, LADDER_DECIMATION_MOS):
        w.writerow(["icosphere_s3.obj", "sphere_tex.png", f"icosphere_s3_dec{int(frac * 100)}.obj",
                    "sphere_tex.png", mos, "decimation"])
    put("ladder.csv", buf.getvalue())

    digests = {}
    for name, data in sorted(files.items()):
        if name.endswith(".png"):
            px = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
            digests[name] = "pixels:" + hashlib.sha256(px.tobytes()).hexdigest()
        else:
            digests[name] = hashlib.sha256(data).hexdigest()
    (out / "hashes.json").write_text(json.dumps(digests, indent=2) + "\n")
    return digests

