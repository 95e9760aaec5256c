"""Flat key=value configuration for the pipeline and the scene generator.

Files hold one ``key=value`` per line; ``#`` starts a comment. The same
syntax is accepted as command-line overrides, which win over file values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .core import AffineTransform
from .errors import ConfigError
from .matching import MatchParams
from .transform import RansacParams


@dataclass
class PipelineParams:
    """All tunables of the registration pipeline."""

    bg_learning_rate: float = 0.05
    bg_threshold: float = 30.0
    bg_warmup_frames: int = 10
    bg_min_blob_area: int = 50
    dce_target_vertices: int = 16
    dce_branch_len_max: float = 10.0
    dce_min_area: int = 50
    match: MatchParams = field(default_factory=MatchParams)
    buffer_capacity: int = 30
    ransac: RansacParams = field(default_factory=RansacParams)


# key -> (parser, setter description used for errors)
def _set_match(params: PipelineParams, **kw) -> PipelineParams:
    params.match = replace(params.match, **kw)
    return params


def _set_ransac(params: PipelineParams, **kw) -> PipelineParams:
    params.ransac = replace(params.ransac, **kw)
    return params


_PIPELINE_KEYS = {
    "bg.learning_rate": (float, lambda p, v: setattr(p, "bg_learning_rate", v)),
    "bg.threshold": (float, lambda p, v: setattr(p, "bg_threshold", v)),
    "bg.warmup_frames": (int, lambda p, v: setattr(p, "bg_warmup_frames", v)),
    "bg.min_blob_area": (int, lambda p, v: setattr(p, "bg_min_blob_area", v)),
    "dce.target_vertices": (int, lambda p, v: setattr(p, "dce_target_vertices", v)),
    "dce.branch_len_max": (float, lambda p, v: setattr(p, "dce_branch_len_max", v)),
    "dce.min_area": (int, lambda p, v: setattr(p, "dce_min_area", v)),
    "match.ed_max": (float, lambda p, v: _set_match(p, ed_max=v)),
    "match.etheta_max": (float, lambda p, v: _set_match(p, etheta_max=v)),
    "match.alpha": (float, lambda p, v: _set_match(p, alpha=v)),
    "match.min_matches": (int, lambda p, v: _set_match(p, min_matches_per_polygon=v)),
    "buffer.capacity_frames": (int, lambda p, v: setattr(p, "buffer_capacity", v)),
    "ransac.iterations": (int, lambda p, v: _set_ransac(p, iterations=v)),
    "ransac.inlier_threshold": (float, lambda p, v: _set_ransac(p, inlier_threshold=v)),
    "ransac.min_inliers": (int, lambda p, v: _set_ransac(p, min_inliers=v)),
    "ransac.seed": (int, lambda p, v: _set_ransac(p, rng_seed=v)),
}


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_kv_file(path: str | Path) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_kv_text(p.read_text(), source=str(p))


def pipeline_params_from_mapping(mapping: dict[str, str]) -> PipelineParams:
    params = PipelineParams()
    for key, raw in mapping.items():
        try:
            parse, apply = _PIPELINE_KEYS[key]
        except KeyError:
            raise ConfigError(f"unknown config key {key!r}") from None
        try:
            value = parse(raw)
        except ValueError:
            raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {parse.__name__}") from None
        try:
            apply(params, value)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
    return params


_SCENE_KEYS = {
    "scene.width": int,
    "scene.height": int,
    "scene.frames": int,
    "scene.targets": int,
    "scene.seed": int,
    "scene.noise_sigma": float,
    "scene.dropout": float,
    "scene.speed": float,
    "truth.rotation_deg": float,
    "truth.scale": float,
    "truth.tx": float,
    "truth.ty": float,
}


@dataclass
class SceneFileSpec:
    """Parsed scene description (geometry is built by the generator)."""

    width: int = 320
    height: int = 240
    frames: int = 200
    targets: int = 1
    seed: int = 0
    noise_sigma: float = 0.0
    dropout: float = 0.0
    speed: float = 2.5
    rotation_deg: float = 0.0
    scale: float = 1.0
    tx: float = 0.0
    ty: float = 0.0

    def truth_transform(self) -> AffineTransform:
        rot = AffineTransform.rotation_scale_about(
            self.width / 2.0, self.height / 2.0, self.rotation_deg, self.scale
        )
        return AffineTransform.translation(self.tx, self.ty).compose(rot)


def scene_spec_from_mapping(mapping: dict[str, str]) -> SceneFileSpec:
    spec = SceneFileSpec()
    fields_by_key = {
        "scene.width": "width",
        "scene.height": "height",
        "scene.frames": "frames",
        "scene.targets": "targets",
        "scene.seed": "seed",
        "scene.noise_sigma": "noise_sigma",
        "scene.dropout": "dropout",
        "scene.speed": "speed",
        "truth.rotation_deg": "rotation_deg",
        "truth.scale": "scale",
        "truth.tx": "tx",
        "truth.ty": "ty",
    }
    for key, raw in mapping.items():
        parse = _SCENE_KEYS.get(key)
        if parse is None:
            raise ConfigError(f"unknown scene key {key!r}")
        try:
            value = parse(raw)
        except ValueError:
            raise ConfigError(f"scene key {key!r}: cannot parse {raw!r} as {parse.__name__}") from None
        if isinstance(value, float) and not math.isfinite(value):
            raise ConfigError(f"scene key {key!r}: value must be finite")
        setattr(spec, fields_by_key[key], value)
    return spec
