"""Pipeline configuration: one schema-versioned bundle of every module knob."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ValidationError
from .response import ResponseCutoffs
from .segment import SegConfig
from .stats import CutoffGrid

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class FitConfig:
    adc_ceiling: float = 4.0e-3


@dataclass(frozen=True)
class NormalizeConfig:
    b_target: float = 900.0
    canal_target: float = 1000.0
    boundary_slices: int = 3
    noise_floor_frac: float = 0.05


@dataclass(frozen=True)
class PostprocessConfig:
    connectivity: int = 26
    gadc_fraction: float = 0.65
    gadc_floor: float = 0.5e-3
    organ_overlap_min: float = 0.10
    min_voxels: int = 10


@dataclass(frozen=True)
class PipelineConfig:
    fit: FitConfig = field(default_factory=FitConfig)
    normalize: NormalizeConfig = field(default_factory=NormalizeConfig)
    segment: SegConfig = field(default_factory=SegConfig)
    postprocess: PostprocessConfig = field(default_factory=PostprocessConfig)
    response: ResponseCutoffs = field(default_factory=ResponseCutoffs)
    cutoff_grid: CutoffGrid = field(default_factory=CutoffGrid)
    review_policy: str = "exclude"  # or "no_benefit"
    weights_path: str | None = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.review_policy not in ("exclude", "no_benefit"):
            raise ValidationError(f"unknown review_policy {self.review_policy!r}")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["schema_version"] = SCHEMA_VERSION
        return doc

    def canonical_json(self) -> str:
        doc = self.to_dict()
        doc.pop("threads")  # concurrency cannot change results, so it never hashes
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:16]


_SECTIONS = {
    "fit": FitConfig,
    "normalize": NormalizeConfig,
    "segment": SegConfig,
    "postprocess": PostprocessConfig,
    "response": ResponseCutoffs,
    "cutoff_grid": CutoffGrid,
}
_SCALARS = {"review_policy", "weights_path", "seed", "threads"}


def _build_section(cls, doc: dict, where: str):
    known = {f.name: f for f in fields(cls)}
    unknown = set(doc) - set(known)
    if unknown:
        raise ValidationError(f"config section {where!r}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in doc.items():
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(doc: dict) -> PipelineConfig:
    doc = dict(doc)
    version = doc.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported config schema_version {version}")
    unknown = set(doc) - set(_SECTIONS) - _SCALARS
    if unknown:
        raise ValidationError(f"config: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in doc:
            section = doc[name]
            if not isinstance(section, dict):
                raise ValidationError(f"config section {name!r} must be an object")
            kwargs[name] = _build_section(cls, section, name)
    for name in _SCALARS:
        if name in doc:
            kwargs[name] = doc[name]
    return PipelineConfig(**kwargs)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: cannot read config ({exc})") from exc
    return config_from_dict(doc)
