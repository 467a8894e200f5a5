import math
from fractions import Fraction

import numpy as np
import pytest

from geodesicpsim.fixtures import generate_corpus, icosphere
from geodesicpsim.mesh_io import Mesh
from geodesicpsim.patch import GeodesicPatch


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    generate_corpus(out, seed=0)
    return out


def sphere_mesh(subdiv=3, radius=1.0):
    pos, faces = icosphere(subdiv, radius)
    return Mesh(vertices=pos, uv=np.zeros((len(pos), 2)), faces=faces)


def make_fan(rng, k=6, radius=1.0, jitter=0.3, z=0.2, closed=True):
    """Random star-shaped fan around the origin as a GeodesicPatch."""
    ang = np.sort(rng.uniform(0, 2 * math.pi, k))
    r = radius * (1 + jitter * rng.uniform(-1, 1, k))
    pts = np.column_stack([r * np.cos(ang), r * np.sin(ang), z * rng.standard_normal(k)])
    pts = np.vstack([[0.0, 0.0, 0.0], pts])
    uv = 0.5 + 0.1 * pts[:, :2] / radius
    n_faces = k if closed else k - 1
    faces = np.array([[0, 1 + i, 1 + (i + 1) % k] for i in range(n_faces)])
    return GeodesicPatch(points=pts, uv=uv, faces=faces, vertex_ids=np.arange(k + 1))


def regular_fan(k=6, radius=1.0, center=(0.0, 0.0, 0.0)):
    ang = 2 * math.pi * np.arange(k) / k
    pts = np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.zeros(k)])
    pts = np.vstack([[0.0, 0.0, 0.0], pts]) + np.asarray(center)
    uv = 0.5 + 0.25 * (pts[:, :2] - np.asarray(center)[:2]) / radius
    faces = np.array([[0, 1 + i, 1 + (i + 1) % k] for i in range(k)])
    return GeodesicPatch(points=pts, uv=uv, faces=faces, vertex_ids=np.arange(k + 1))


def oracle_pixels(tri):
    """Exhaustive bounding-box scan with exact rational arithmetic.

    A pixel center on an edge counts when that edge is a top edge (horizontal,
    triangle below) or a left edge (triangle to the right of it).
    """
    P = [(Fraction(x), Fraction(y)) for x, y in tri]
    (x1, y1), (x2, y2), (x3, y3) = P
    det = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3)
    if det == 0:
        return set()

    def owns(a, b, c):
        if a[1] == b[1]:
            return c[1] > a[1]
        x_line = a[0] + (c[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
        return c[0] > x_line

    edges_owned = [owns(P[1], P[2], P[0]), owns(P[2], P[0], P[1]), owns(P[0], P[1], P[2])]
    out = set()
    xmin, xmax = math.floor(min(x for x, _ in P)), math.ceil(max(x for x, _ in P))
    ymin, ymax = math.floor(min(y for _, y in P)), math.ceil(max(y for _, y in P))
    for py in range(ymin - 1, ymax + 1):
        for px in range(xmin - 1, xmax + 1):
            cx, cy = Fraction(2 * px + 1, 2), Fraction(2 * py + 1, 2)
            l1 = ((y2 - y3) * (cx - x3) + (x3 - x2) * (cy - y3)) / det
            l2 = ((y3 - y1) * (cx - x3) + (x1 - x3) * (cy - y3)) / det
            l3 = 1 - l1 - l2
            ok = True
            for lam, own in zip((l1, l2, l3), edges_owned):
                if lam < 0 or (lam == 0 and not own):
                    ok = False
            if ok:
                out.add((px, py))
    return out


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
