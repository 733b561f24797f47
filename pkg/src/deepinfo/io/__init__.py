"""Persistence, configuration and rendering."""
from .config import PRESETS, RunConfig, load_config, preset, validate
from .imat import atomic_write_bytes, decode_matrix, encode_matrix, read_matrix, write_matrix
from .manifest import MANIFEST_NAME, ROLES, Manifest, load_manifest, manifest_sha256, read_entry
from .store import load_maps, load_params, load_trialset, save_captures, save_maps, save_params, save_trialset
from .svg import COLORMAPS, colormap_rgb, svg_heatmap, write_svg_heatmap

__all__ = [
    "COLORMAPS",
    "MANIFEST_NAME",
    "PRESETS",
    "ROLES",
    "Manifest",
    "RunConfig",
    "atomic_write_bytes",
    "colormap_rgb",
    "decode_matrix",
    "encode_matrix",
    "load_config",
    "load_manifest",
    "load_maps",
    "load_params",
    "load_trialset",
    "manifest_sha256",
    "preset",
    "read_entry",
    "read_matrix",
    "save_captures",
    "save_maps",
    "save_params",
    "save_trialset",
    "svg_heatmap",
    "validate",
    "write_matrix",
    "write_svg_heatmap",
]
