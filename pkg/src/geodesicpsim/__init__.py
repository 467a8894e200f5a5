"""GeodesicPSIM: full-reference quality metric for textured static meshes."""

__version__ = "0.1.0"

from .clean import CleanReport, clean
from .errors import GeodesicPSIMError
from .mesh_io import Mesh, TextureImage, load_mesh, load_texture, parse_obj, wedge_split
from .scoring import MetricConfig, QualityScore, score_meshes, score_pair

__all__ = [
    "CleanReport",
    "GeodesicPSIMError",
    "Mesh",
    "MetricConfig",
    "QualityScore",
    "TextureImage",
    "clean",
    "load_mesh",
    "load_texture",
    "parse_obj",
    "score_meshes",
    "score_pair",
    "wedge_split",
]
