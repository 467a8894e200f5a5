"""Feature similarity, pooling, and the end-to-end scoring pipeline."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .clean import clean
from .errors import FeatureError, ParameterError, PatchError, ScoringError
from .features import PatchFeatures, extract_features
from .mesh_io import Mesh, TextureImage, load_mesh, load_texture
from .patch import VertexFaceIndex, crop_pair
from .sampling import select_keypoints
from .texturing import get_conversion, texture_patch

log = logging.getLogger(__name__)

MATLAB_EPS = 2.22e-16
FEATURES = ("pcs", "dmc", "pca", "pcv")


@dataclass(frozen=True)
class MetricConfig:
    kn: int = 500
    sampler: str = "fps"
    seed: int = 0
    tau_scale: float = 0.5e-3
    T: float = MATLAB_EPS
    gamma: tuple = (6.0, 1.0, 1.0)
    color_space: str = "bt601"
    crop_formula: str = "shrink"
    kernel: str = "gaussian"
    laplacian: str = "symmetric"
    keypoint_source: str = "dist"

    def __post_init__(self):
        if self.kn < 1:
            raise ParameterError("kn must be >= 1")
        if not self.tau_scale > 0:
            raise ParameterError("tau_scale must be > 0")
        if not self.T > 0:
            raise ParameterError("T must be > 0")
        gamma = tuple(float(g) for g in self.gamma)
        if len(gamma) != 3 or any(not g > 0 for g in gamma):
            raise ParameterError("gamma needs three positive weights")
        object.__setattr__(self, "gamma", gamma)
        get_conversion(self.color_space)
        for name, allowed in (
            ("sampler", ("rs", "fps")),
            ("crop_formula", ("shrink", "printed")),
            ("kernel", ("gaussian", "printed")),
            ("laplacian", ("symmetric", "printed")),
            ("keypoint_source", ("dist", "ref")),
        ):
            if getattr(self, name) not in allowed:
                raise ParameterError(f"{name} must be one of {allowed}")

    def as_dict(self):
        d = asdict(self)
        d["gamma"] = list(self.gamma)
        return d


@dataclass
class QualityScore:
    q: float
    sim_pcs: float
    sim_dmc: float
    sim_pca: float
    sim_pcv: float
    keypoints_used: int
    keypoints_skipped: int
    config_echo: dict = field(default_factory=dict)
    features: list | None = field(default=None, repr=False)

    def as_dict(self):
        d = {
            "q": self.q,
            "sim_pcs": self.sim_pcs,
            "sim_dmc": self.sim_dmc,
            "sim_pca": self.sim_pca,
            "sim_pcv": self.sim_pcv,
            "keypoints_used": self.keypoints_used,
            "keypoints_skipped": self.keypoints_skipped,
            "config_echo": self.config_echo,
        }
        return d


def feature_similarity(fr, fd, T=MATLAB_EPS):
    """``(|2 fr fd| + T) / (fr^2 + fd^2 + T)``; works elementwise on arrays."""
    fr = np.asarray(fr, float)
    fd = np.asarray(fd, float)
    return (np.abs(2.0 * fr * fd) + T) / (fr * fr + fd * fd + T)


def pool_keypoints(sims):
    """Mean over keypoints (axis 0), accumulated sequentially in keypoint order."""
    sims = np.asarray(sims, float)
    if len(sims) == 0:
        raise ScoringError("no usable keypoints")
    total = np.zeros(sims.shape[1:])
    for row in sims:
        total = total + row
    return total / len(sims)


def pool_channels(sims, gamma=(6.0, 1.0, 1.0)):
    sims = np.asarray(sims, float)
    gamma = np.asarray(gamma, float)
    if np.any(gamma <= 0):
        raise ParameterError("channel weights must be positive")
    return float(sum(g * s for g, s in zip(gamma.tolist(), sims.tolist())) / gamma.sum())


def resolve_threads(threads=None):
    if threads is None:
        env = os.environ.get("GEODESICPSIM_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


class _Side:
    def __init__(self, mesh: Mesh, image: TextureImage):
        self.mesh = mesh
        self.image = image
        self.index = VertexFaceIndex(mesh)


def _keypoint_features(ref: _Side, dist: _Side, ri, di, tau, config, conversion):
    rp = ref.index.build_patch(ri)
    dp = dist.index.build_patch(di)
    rp, dp, _ = crop_pair(rp, dp, tau, config.crop_formula)
    fr = extract_features(texture_patch(rp, ref.image, conversion), conversion,
                          config.kernel, config.laplacian)
    fd = extract_features(texture_patch(dp, dist.image, conversion), conversion,
                          config.kernel, config.laplacian)
    return fr, fd


def _sim_row(fr: PatchFeatures, fd: PatchFeatures, T):
    # layout: pcs(3), dmc, pca(3), pcv(3)
    a = np.concatenate([fr.pcs, [fr.dmc], fr.pca, fr.pcv])
    b = np.concatenate([fd.pcs, [fd.dmc], fd.pca, fd.pcv])
    return feature_similarity(a, b, T)


def score_meshes(ref_mesh: Mesh, ref_tex: TextureImage, dist_mesh: Mesh, dist_tex: TextureImage,
                 config: MetricConfig | None = None, threads=None, keep_features=False,
                 cleaned=False) -> QualityScore:
    """Score a distorted textured mesh against its reference.

    Meshes are cleaned first unless ``cleaned`` is set. The result does not
    depend on ``threads``.
    """
    config = config or MetricConfig()
    if not cleaned:
        ref_mesh, _ = clean(ref_mesh)
        dist_mesh, _ = clean(dist_mesh)
    conversion = get_conversion(config.color_space)
    tau = config.tau_scale * ref_mesh.bbox_scale()
    if not tau > 0:
        raise ScoringError("reference mesh has a zero-size bounding box")

    kps = select_keypoints(ref_mesh, dist_mesh, config.kn, config.sampler, config.seed,
                           config.keypoint_source)
    ref, dist = _Side(ref_mesh, ref_tex), _Side(dist_mesh, dist_tex)

    def work(i):
        try:
            return _keypoint_features(ref, dist, int(kps.ref_index[i]), int(kps.dist_index[i]),
                                      tau, config, conversion)
        except (PatchError, FeatureError) as exc:
            log.debug("keypoint %d skipped: %s", i, exc)
            return None

    n_threads = resolve_threads(threads)
    if n_threads == 1:
        results = [work(i) for i in range(len(kps))]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(work, range(len(kps))))

    rows, dumped = [], []
    for i, res in enumerate(results):
        if res is None:
            if keep_features:
                dumped.append({"keypoint": i, "skipped": True})
            continue
        fr, fd = res
        rows.append(_sim_row(fr, fd, config.T))
        if keep_features:
            dumped.append({
                "keypoint": i,
                "ref_vertex": int(kps.ref_index[i]),
                "dist_vertex": int(kps.dist_index[i]),
                "ref": fr.as_dict(),
                "dist": fd.as_dict(),
            })
    if not rows:
        raise ScoringError(f"all {len(kps)} keypoints were skipped")

    pooled = pool_keypoints(rows)
    sim_pcs = pool_channels(pooled[0:3], config.gamma)
    sim_dmc = float(pooled[3])
    sim_pca = pool_channels(pooled[4:7], config.gamma)
    sim_pcv = pool_channels(pooled[7:10], config.gamma)
    q = (sim_pcs + sim_dmc + sim_pca + sim_pcv) / 4.0
    if not math.isfinite(q):
        raise ScoringError("non-finite quality score")
    return QualityScore(
        q=q,
        sim_pcs=sim_pcs,
        sim_dmc=sim_dmc,
        sim_pca=sim_pca,
        sim_pcv=sim_pcv,
        keypoints_used=len(rows),
        keypoints_skipped=len(kps) - len(rows),
        config_echo=config.as_dict(),
        features=dumped if keep_features else None,
    )


def score_pair(ref_mesh_path, ref_tex_path, dist_mesh_path, dist_tex_path,
               config: MetricConfig | None = None, threads=None, keep_features=False):
    """File-level entry point: load, clean, and score."""
    ref_mesh = load_mesh(ref_mesh_path)
    dist_mesh = load_mesh(dist_mesh_path)
    ref_tex = load_texture(ref_tex_path)
    dist_tex = load_texture(dist_tex_path)
    return score_meshes(ref_mesh, ref_tex, dist_mesh, dist_tex, config, threads, keep_features)
