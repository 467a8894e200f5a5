import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from geodesicpsim.errors import DecodeError, ManifestError, ParseError
from geodesicpsim.fixtures import CUBE_OBJ, grid_plane
from geodesicpsim.mesh_io import (
    decode_texture,
    parse_obj,
    read_manifest,
    serialize_obj,
    wedge_split,
    write_scores,
)

TRI = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\n"


def test_minimal_obj():
    raw = parse_obj(TRI + "f 1/1 2/2 3/3\n")
    assert raw.positions.shape == (3, 3)
    assert raw.uv_pool.shape == (3, 2)
    assert raw.faces == [((0, 0), (1, 1), (2, 2))]


def test_relative_indices_match_absolute():
    a = parse_obj(TRI + "f 1/1 2/2 3/3\n")
    b = parse_obj(TRI + "f -3/-3 -2/-2 -1/-1\n")
    assert a.faces == b.faces


def test_normals_and_materials_ignored():
    text = "mtllib x.mtl\n" + TRI + "vn 0 0 1\nusemtl m\n# hi\nf 1/1/1 2/2/1 3/3/1\n"
    raw = parse_obj(text.encode())
    assert raw.faces == [((0, 0), (1, 1), (2, 2))]


@pytest.mark.parametrize(
    "face, line",
    [
        ("f 1/1 2/2 5/3", 7),
        ("f 1/1 2/2", 7),
        ("f 1/1 2 3/3", 7),
        ("f 1/1 2/x 3/3", 7),
        ("f 0/1 2/2 3/3", 7),
        ("f 1//1 2//1 3//1", 7),
    ],
)
def test_bad_faces_report_line(face, line):
    with pytest.raises(ParseError) as exc:
        parse_obj(TRI + face + "\n")
    assert exc.value.line == line


def test_non_numeric_vertex():
    with pytest.raises(ParseError) as exc:
        parse_obj("v 0 a 0\n")
    assert exc.value.line == 1


def test_wedge_split_cube_counts_unique_pairs():
    raw = parse_obj(CUBE_OBJ)
    assert len(raw.positions) == 8 and len(raw.uv_pool) == 14
    mesh = wedge_split(raw)
    pairs = {corner for face in raw.faces for corner in face}  # brute-force enumeration
    assert mesh.n_vertices == len(pairs)
    assert 8 <= mesh.n_vertices <= 24
    assert mesh.n_faces == 12


def test_wedge_split_no_seams_is_identity_count():
    mesh = grid_plane(4)
    again = wedge_split(parse_obj(serialize_obj(mesh)))
    assert again.n_vertices == mesh.n_vertices


def test_quad_fan_triangulation():
    text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nf 1/1 2/2 3/3 4/4\n"
    mesh = wedge_split(parse_obj(text))
    assert mesh.faces.tolist() == [[0, 1, 2], [0, 2, 3]]


def _rendered(vertices, uv, faces):
    return sorted(
        tuple(tuple(vertices[i]) + tuple(uv[i]) for i in f) for f in np.asarray(faces).tolist()
    )


def test_wedge_split_preserves_rendered_triangles():
    raw = parse_obj(CUBE_OBJ)
    mesh = wedge_split(raw)
    expected = []
    for face in raw.faces:
        for k in range(1, len(face) - 1):
            tri = (face[0], face[k], face[k + 1])
            expected.append(tuple(tuple(raw.positions[p]) + tuple(raw.uv_pool[t]) for p, t in tri))
    assert sorted(expected) == _rendered(mesh.vertices, mesh.uv, mesh.faces)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10_000))
def test_serialize_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    base = grid_plane(n)
    mesh = type(base)(vertices=base.vertices * rng.uniform(1e-3, 1e3) + rng.normal(size=3),
                      uv=base.uv, faces=base.faces)
    back = wedge_split(parse_obj(serialize_obj(mesh)))
    assert back.n_vertices == mesh.n_vertices and back.n_faces == mesh.n_faces
    np.testing.assert_allclose(back.vertices, mesh.vertices, rtol=1e-9)
    np.testing.assert_allclose(back.uv, mesh.uv, rtol=1e-9)


# -------------------------------------------------------------- textures


def _png(arr, mode=None):
    buf = io.BytesIO()
    Image.fromarray(arr, mode).save(buf, format="PNG")
    return buf.getvalue()


def test_decode_png_identity():
    arr = np.array([[[1, 2, 3], [4, 5, 6]], [[7, 8, 9], [250, 251, 252]]], dtype=np.uint8)
    tex = decode_texture(_png(arr))
    assert (tex.width, tex.height) == (2, 2)
    assert np.array_equal(tex.pixels, arr)


def test_decode_drops_alpha_and_replicates_gray():
    rgba = np.zeros((3, 4, 4), dtype=np.uint8)
    rgba[..., 0] = 10
    rgba[..., 3] = 7
    assert np.array_equal(decode_texture(_png(rgba)).pixels[..., 0], np.full((3, 4), 10))
    gray = np.arange(12, dtype=np.uint8).reshape(3, 4)
    px = decode_texture(_png(gray)).pixels
    assert np.array_equal(px, np.repeat(gray[..., None], 3, axis=2))


def test_decode_16bit_keeps_high_byte():
    arr = np.array([[0, 255, 256], [4660, 65535, 32768]], dtype=np.uint16)
    px = decode_texture(_png(arr)).pixels
    reference = (arr >> 8).astype(np.uint8)
    assert np.array_equal(px[..., 0], reference)
    assert np.array_equal(px[..., 2], reference)


def test_decode_jpeg():
    arr = np.full((8, 8, 3), 200, dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="JPEG", quality=95)
    px = decode_texture(buf.getvalue()).pixels
    assert px.shape == (8, 8, 3)
    assert abs(int(px.mean()) - 200) <= 2


def test_decode_truncated_and_garbage():
    data = _png(np.zeros((16, 16, 3), dtype=np.uint8))
    with pytest.raises(DecodeError):
        decode_texture(data[: len(data) // 2])
    with pytest.raises(DecodeError):
        decode_texture(b"not an image")


def test_decode_is_deterministic():
    data = _png(np.random.default_rng(0).integers(0, 256, (9, 7, 3), dtype=np.uint8))
    assert np.array_equal(decode_texture(data).pixels, decode_texture(data).pixels)


# -------------------------------------------------------------- manifest


def test_manifest_without_mos():
    rows = read_manifest("ref_mesh,ref_tex,dist_mesh,dist_tex\na.obj,a.png,b.obj,b.png\n")
    assert len(rows) == 1 and rows[0].mos is None


def test_manifest_with_mos_and_base_dir(tmp_path):
    rows = read_manifest("ref_mesh,ref_tex,dist_mesh,dist_tex,mos\na.obj,a.png,b.obj,b.png,4.2\n",
                         base_dir=tmp_path)
    assert rows[0].mos == 4.2
    assert rows[0].ref_mesh == str(tmp_path / "a.obj")


def test_manifest_bad_mos_names_row():
    text = "ref_mesh,ref_tex,dist_mesh,dist_tex,mos\na,b,c,d,1\na,b,c,d,high\n"
    with pytest.raises(ManifestError) as exc:
        read_manifest(text)
    assert exc.value.row == 2


def test_manifest_missing_column():
    with pytest.raises(ManifestError):
        read_manifest("ref_mesh,ref_tex,dist_mesh\na,b,c\n")


def test_write_scores_csv_and_json():
    rows = [{"ref_mesh": "a", "ref_tex": "b", "dist_mesh": "c", "dist_tex": "d", "mos": 3.0,
             "score": 0.5}]
    csv_text, json_text = write_scores(rows)
    assert csv_text.splitlines()[0] == "ref_mesh,ref_tex,dist_mesh,dist_tex,mos,score"
    assert csv_text.splitlines()[1] == "a,b,c,d,3.0,0.5"
    import json

    assert json.loads(json_text) == rows


def test_obj_corner_permutations_parse_consistently():
    # every rotation of a triangle's corners parses to the same corner set
    for perm in itertools.permutations([1, 2, 3]):
        face = "f " + " ".join(f"{i}/{i}" for i in perm)
        raw = parse_obj(TRI + face)
        assert sorted(raw.faces[0]) == [(0, 0), (1, 1), (2, 2)]
