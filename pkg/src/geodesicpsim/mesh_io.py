"""Wavefront OBJ parsing, wedge splitting, texture decoding and manifest I/O."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, ManifestError, ParseError


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class RawMesh:
    """OBJ content before wedge splitting.

    ``faces`` holds one ``(position_index, uv_index)`` tuple per corner, 0-based.
    """

    positions: np.ndarray
    uv_pool: np.ndarray
    faces: list

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions, float).reshape(-1, 3))
        object.__setattr__(self, "uv_pool", _frozen(self.uv_pool, float).reshape(-1, 2))


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh with exactly one texture coordinate per vertex."""

    vertices: np.ndarray
    uv: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, float).reshape(-1, 3))
        object.__setattr__(self, "uv", _frozen(self.uv, float).reshape(-1, 2))
        object.__setattr__(self, "faces", _frozen(self.faces, np.int64).reshape(-1, 3))
        if len(self.uv) != len(self.vertices):
            raise ValueError("uv and vertices must have the same length")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def bbox_scale(self):
        """Largest axis extent of the bounding box."""
        if not len(self.vertices):
            return 0.0
        return float(np.max(self.vertices.max(axis=0) - self.vertices.min(axis=0)))


@dataclass(frozen=True)
class TextureImage:
    """8-bit RGB raster, row 0 at the top."""

    pixels: np.ndarray
    width: int = field(init=False)
    height: int = field(init=False)

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError(f"expected a non-empty (H, W, 3) array, got {px.shape}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        object.__setattr__(self, "height", px.shape[0])
        object.__setattr__(self, "width", px.shape[1])


@dataclass(frozen=True)
class ManifestRow:
    ref_mesh: str
    ref_tex: str
    dist_mesh: str
    dist_tex: str
    mos: float | None = None
    label: str | None = None


MANIFEST_COLUMNS = ("ref_mesh", "ref_tex", "dist_mesh", "dist_tex")


# --------------------------------------------------------------------- OBJ


def _resolve(token, count, kind, lineno):
    try:
        idx = int(token)
    except ValueError:
        raise ParseError(f"non-integer {kind} index {token!r}", lineno) from None
    if idx > 0:
        resolved = idx - 1
    elif idx < 0:
        resolved = count + idx
    else:
        raise ParseError(f"{kind} index 0 is invalid in OBJ", lineno)
    if not 0 <= resolved < count:
        raise ParseError(f"{kind} index {idx} out of range ({count} defined)", lineno)
    return resolved


def _floats(fields, lineno, minimum, maximum):
    if len(fields) < minimum:
        raise ParseError(f"expected at least {minimum} numbers, got {len(fields)}", lineno)
    try:
        vals = [float(x) for x in fields[:maximum]]
    except ValueError:
        raise ParseError(f"non-numeric field in {' '.join(fields)!r}", lineno) from None
    if not all(math.isfinite(x) for x in vals):
        raise ParseError("non-finite coordinate", lineno)
    return vals


def parse_obj(data) -> RawMesh:
    """Parse OBJ text (``str`` or ``bytes``) into a :class:`RawMesh`.

    Only ``v``, ``vt`` and ``f`` records are interpreted; normals, groups,
    materials and comments are skipped. Every face corner must carry a
    texture index.
    """
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8", errors="replace")
    positions, uvs, faces = [], [], []
    n_normals = 0
    for lineno, line in enumerate(data.splitlines(), start=1):
        fields = line.split("#", 1)[0].split()
        if not fields:
            continue
        tag, rest = fields[0], fields[1:]
        if tag == "v":
            positions.append(_floats(rest, lineno, 3, 3))
        elif tag == "vt":
            vals = _floats(rest, lineno, 1, 2)
            uvs.append(vals if len(vals) == 2 else [vals[0], 0.0])
        elif tag == "vn":
            n_normals += 1
        elif tag == "f":
            if len(rest) < 3:
                raise ParseError(f"face with {len(rest)} corners (need >= 3)", lineno)
            corners = []
            for corner in rest:
                parts = corner.split("/")
                if len(parts) > 3:
                    raise ParseError(f"malformed face corner {corner!r}", lineno)
                if len(parts) < 2 or parts[1] == "":
                    raise ParseError(
                        f"face corner {corner!r} has no texture coordinate", lineno
                    )
                vi = _resolve(parts[0], len(positions), "vertex", lineno)
                ti = _resolve(parts[1], len(uvs), "texture", lineno)
                if len(parts) == 3 and parts[2] != "":
                    _resolve(parts[2], n_normals, "normal", lineno)
                corners.append((vi, ti))
            faces.append(tuple(corners))
    return RawMesh(
        positions=np.asarray(positions, float).reshape(-1, 3),
        uv_pool=np.asarray(uvs, float).reshape(-1, 2),
        faces=faces,
    )


def wedge_split(raw: RawMesh) -> Mesh:
    """Give every distinct (position, uv) corner pairing its own vertex.

    Output vertices are ordered by (position index, uv index), so a mesh
    without seams keeps its vertex order. Polygons are fan-triangulated from
    their first corner.
    """
    corners, tri_corners = [], []
    for face in raw.faces:
        base = len(corners)
        corners.extend(face)
        for k in range(1, len(face) - 1):
            tri_corners.append((base, base + k, base + k + 1))
    if not corners:
        return Mesh(vertices=np.zeros((0, 3)), uv=np.zeros((0, 2)), faces=np.zeros((0, 3)))
    pairs = np.asarray(corners, dtype=np.int64)
    wedges, corner_wedge = np.unique(pairs, axis=0, return_inverse=True)
    corner_wedge = corner_wedge.ravel()
    return Mesh(
        vertices=raw.positions[wedges[:, 0]],
        uv=raw.uv_pool[wedges[:, 1]],
        faces=corner_wedge[np.asarray(tri_corners, dtype=np.int64).reshape(-1, 3)],
    )


def serialize_obj(mesh: Mesh) -> str:
    """Canonical OBJ text: one ``vt`` per vertex, shortest round-trip floats."""
    out = io.StringIO()
    for x, y, z in mesh.vertices.tolist():
        out.write(f"v {x!r} {y!r} {z!r}\n")
    for u, v in mesh.uv.tolist():
        out.write(f"vt {u!r} {v!r}\n")
    for a, b, c in (mesh.faces + 1).tolist():
        out.write(f"f {a}/{a} {b}/{b} {c}/{c}\n")
    return out.getvalue()


def load_mesh(path) -> Mesh:
    """Read an OBJ file and wedge-split it."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return wedge_split(parse_obj(data))
    except ParseError as exc:
        raise ParseError(f"{path}: {exc.args[0]}") from exc


# ----------------------------------------------------------------- texture


def decode_texture(data: bytes) -> TextureImage:
    """Decode PNG/JPEG bytes into 8-bit RGB.

    Alpha is dropped, grayscale is replicated, and 16-bit samples keep
    their high byte.
    """
    try:
        with Image.open(io.BytesIO(data)) as img:
            if img.format not in ("PNG", "JPEG", "MPO"):
                raise DecodeError(f"unsupported texture container {img.format!r}")
            img.load()
            mode = img.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(img, dtype=np.int64)
                gray = (np.clip(arr, 0, 65535) >> 8).astype(np.uint8)
                rgb = np.repeat(gray[..., None], 3, axis=2)
            else:
                if mode in ("LA", "PA") or mode.startswith("L") or mode == "1":
                    img = img.convert("L")
                    gray = np.asarray(img, dtype=np.uint8)
                    rgb = np.repeat(gray[..., None], 3, axis=2)
                else:
                    rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except DecodeError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode texture: {exc}") from exc
    return TextureImage(rgb)


def load_texture(path) -> TextureImage:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DecodeError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return decode_texture(data)
    except DecodeError as exc:
        raise DecodeError(f"{path}: {exc.args[0]}") from exc


# ---------------------------------------------------------------- manifest


def read_manifest(text: str, base_dir=None) -> list[ManifestRow]:
    """Parse a manifest CSV. Relative paths are resolved against ``base_dir``."""
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in MANIFEST_COLUMNS if c not in header]
    if missing:
        raise ManifestError(f"missing column(s): {', '.join(missing)}")
    reader.fieldnames = header

    def fix(p):
        p = p.strip()
        if base_dir is not None and p and not Path(p).is_absolute():
            return str(Path(base_dir) / p)
        return p

    rows = []
    for rowno, rec in enumerate(reader, start=1):
        values = {}
        for col in MANIFEST_COLUMNS:
            val = (rec.get(col) or "").strip()
            if not val:
                raise ManifestError(f"empty {col}", rowno)
            values[col] = fix(val)
        mos = None
        raw_mos = (rec.get("mos") or "").strip()
        if raw_mos:
            try:
                mos = float(raw_mos)
            except ValueError:
                raise ManifestError(f"non-numeric mos {raw_mos!r}", rowno) from None
            if not math.isfinite(mos):
                raise ManifestError(f"non-finite mos {raw_mos!r}", rowno)
        label = (rec.get("class") or "").strip() or None
        rows.append(ManifestRow(mos=mos, label=label, **values))
    return rows


def write_scores(rows) -> tuple[str, str]:
    """Render scored rows as ``(csv_text, json_text)``.

    ``rows`` are mappings with the manifest columns plus ``score``; any
    extra keys (``mos``, ``class``, ``status``...) are carried through.
    """
    rows = [dict(r) for r in rows]
    cols = list(MANIFEST_COLUMNS)
    for r in rows:
        for k in r:
            if k not in cols and k != "score":
                cols.append(k)
    cols.append("score")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in cols})
    return buf.getvalue(), json.dumps(rows, indent=2)
