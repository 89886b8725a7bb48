# Data Package
# Synthetic gloss-video benchmark, frame files, manifests and the lazy sample store

from .models import (
    GENERATOR_VERSION,
    SPLIT_POLICIES,
    DatasetConfig,
    DatasetManifest,
    SampleRecord,
    VideoSample,
)
from .storage import (
    FrameStreamReader,
    SampleStore,
    read_frames,
    read_manifest,
    read_sample,
    write_manifest,
    write_sample,
)
from .generator import GLOSS_NAMES, MAX_VOCAB, GlyphBank, gen_dataset, gen_sample, signer_style

__all__ = [
    "GENERATOR_VERSION",
    "SPLIT_POLICIES",
    "DatasetConfig",
    "DatasetManifest",
    "SampleRecord",
    "VideoSample",
    "FrameStreamReader",
    "SampleStore",
    "read_frames",
    "read_manifest",
    "read_sample",
    "write_manifest",
    "write_sample",
    "GLOSS_NAMES",
    "MAX_VOCAB",
    "GlyphBank",
    "gen_dataset",
    "gen_sample",
    "signer_style",
]
