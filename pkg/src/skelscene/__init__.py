"""skelscene: activity-scene recognition from 3D human-skeleton sequences.

The pipeline: divide the skeleton into seven parts, segment each part's motion
into primitive actions at standstills (keeping the highest speed-times-time
intervals), describe every action by seven-point joint trajectories, mirror-
augment, and classify the stacked descriptor matrix with a small multi-width
convolutional network trained from scratch.
"""

from .backend import BACKEND
from .cnn import ClassifierConfig, ClassifierModel, evaluate, train
from .config import FeatureConfig, PipelineConfig, feature_hash, load_pipeline_config
from .descriptor import SceneFeatureMatrix
from .ingest import DatasetManifest, SplitSpec, parse_sequence_csv, split_dataset
from .pipeline import FeatureSet, featurize_scene, load_feature_dir
from .skeleton import SkeletonSequence, build_local_frame, part_table, to_local

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ClassifierConfig",
    "ClassifierModel",
    "DatasetManifest",
    "FeatureConfig",
    "FeatureSet",
    "PipelineConfig",
    "SceneFeatureMatrix",
    "SkeletonSequence",
    "SplitSpec",
    "build_local_frame",
    "evaluate",
    "feature_hash",
    "featurize_scene",
    "load_feature_dir",
    "load_pipeline_config",
    "parse_sequence_csv",
    "part_table",
    "split_dataset",
    "to_local",
    "train",
    "__version__",
]
