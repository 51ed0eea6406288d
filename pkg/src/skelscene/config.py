"""Pipeline configuration: one TOML document drives every stage.

The featurization-relevant subset is hashed (together with the label
vocabulary) and stamped into every artifact, so that training and evaluation
refuse to mix features produced under different settings.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .cnn.model import ClassifierConfig
from .errors import ConfigError
from .ingest import SplitSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FRAME_POLICIES = ("mixed", "gcs")


@dataclass(frozen=True)
class FeatureConfig:
    """Segmentation and descriptor knobs."""

    v_tau_fraction: float = 0.1
    v_tau_floor: float = 0.05
    gap: int = 3
    min_interval: int = 2
    max_pa: int = 30
    width: int = 126
    frame_policy: str = "mixed"

    def __post_init__(self):
        if self.v_tau_fraction < 0 or self.v_tau_floor < 0:
            raise ConfigError("speed thresholds must be >= 0")
        if self.gap < 0:
            raise ConfigError("gap must be >= 0")
        if self.min_interval < 1:
            raise ConfigError("min_interval must be >= 1")
        if self.max_pa < 1:
            raise ConfigError("max_pa must be >= 1")
        if self.width < 84:
            raise ConfigError("width must be >= 84 (one extended part block)")
        if self.width % 3 != 0:
            raise ConfigError("width must be a multiple of 3 (whole 3-vectors)")
        if self.frame_policy not in FRAME_POLICIES:
            raise ConfigError(f"frame_policy must be one of {FRAME_POLICIES}")


def feature_hash(features: FeatureConfig, labels: tuple[str, ...]) -> str:
    """Stable fingerprint of everything that shapes feature values."""
    doc = {"features": asdict(features), "labels": list(labels)}
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class PipelineConfig:
    manifest: str = "manifest.json"
    out_dir: str = "out"
    seed: int = 0
    augment_train: bool = True
    split: SplitSpec = field(
        default_factory=lambda: SplitSpec.of(
            ["s01", "s02", "s03", "s04", "s05"], ["s06"], ["s07"]
        )
    )
    features: FeatureConfig = field(default_factory=FeatureConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)

    def resolve_paths(self, base: Path) -> "PipelineConfig":
        """Interpret relative paths against the config file's directory."""
        return replace(
            self,
            manifest=str((base / self.manifest).resolve()),
            out_dir=str((base / self.out_dir).resolve()),
        )


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err
    cfg = pipeline_config_from_dict(doc)
    return cfg.resolve_paths(path.parent)


def pipeline_config_from_dict(doc: dict) -> PipelineConfig:
    try:
        split_doc = doc.get("split", {})
        split = SplitSpec.of(
            split_doc.get("train", ["s01", "s02", "s03", "s04", "s05"]),
            split_doc.get("val", ["s06"]),
            split_doc.get("test", ["s07"]),
        )
        features = FeatureConfig(**doc.get("features", {}))
        classifier_doc = dict(doc.get("classifier", {}))
        if "widths" in classifier_doc:
            classifier_doc["widths"] = tuple(classifier_doc["widths"])
        classifier = ClassifierConfig(**classifier_doc)
        return PipelineConfig(
            manifest=doc.get("manifest", "manifest.json"),
            out_dir=doc.get("out_dir", "out"),
            seed=doc.get("seed", 0),
            augment_train=doc.get("augment_train", True),
            split=split,
            features=features,
            classifier=classifier,
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err
