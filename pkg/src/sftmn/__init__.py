"""Two-pathway slow/fast temporal modeling for full-video action segmentation.

The slow path models every frame; the fast path models segment-pooled
summaries of the same video; learned per-stage weights fuse the two into
the supervised outputs. Backbones: multi-stage dilated TCN stacks and
transformer encoder/decoder stacks with block-local attention.
"""

from .backbones import (ASFORMER_DECODER, ASFORMER_ENCODER, TCN_STAGE,
                        AsformerDecoder, AsformerEncoder, BlockLocalAttention,
                        DilatedResidualLayer, StageOutput, StageSpec, TcnStage,
                        TemporalStack, build_backbone)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .featureio import (ClassMapping, DataError, FeatureSequence, LabelSequence,
                        SyntheticSpec, VideoSample, generate_synthetic,
                        load_dataset, load_features, parse_mapping,
                        read_raw_features, write_dataset, write_mapping,
                        write_raw_features)
from .harness import (SinglePathConfig, TrainConfig, TrainLog, build_model,
                      evaluate, load_model, model_outputs, predict, save_model,
                      train)
from .metrics import (DEFAULT_OVERLAPS, FrameScores, Segment, SegmentalScores,
                      aggregate, edit_score, edit_score_segments,
                      evaluate_videos, f1_at_overlap, f1_at_overlap_segments,
                      f1_avg, frame_scores, labels_to_segments,
                      segmental_scores, segments_to_labels, validate_segments,
                      write_report_csv, write_report_json)
from .objective import (LossConfig, classification_loss, smoothing_loss,
                        stage_loss, total_loss)
from .slowfast import (FusionGate, PoolingMode, SfTmnConfig, SlowFastModel,
                       StageOutputs, build_sf_tmn, fuse, segment_pool,
                       sf_tmn_forward, upsample_repeat)

__version__ = "0.1.0"

__all__ = [
    "ASFORMER_DECODER", "ASFORMER_ENCODER", "TCN_STAGE",
    "AsformerDecoder", "AsformerEncoder", "BlockLocalAttention",
    "DilatedResidualLayer", "StageOutput", "StageSpec", "TcnStage",
    "TemporalStack", "build_backbone",
    "CheckpointError", "load_checkpoint", "save_checkpoint",
    "ClassMapping", "DataError", "FeatureSequence", "LabelSequence",
    "SyntheticSpec", "VideoSample", "generate_synthetic", "load_dataset",
    "load_features", "parse_mapping", "read_raw_features", "write_dataset",
    "write_mapping", "write_raw_features",
    "SinglePathConfig", "TrainConfig", "TrainLog", "build_model", "evaluate",
    "load_model", "model_outputs", "predict", "save_model", "train",
    "DEFAULT_OVERLAPS", "FrameScores", "Segment", "SegmentalScores",
    "aggregate", "edit_score", "edit_score_segments", "evaluate_videos",
    "f1_at_overlap", "f1_at_overlap_segments", "f1_avg", "frame_scores",
    "labels_to_segments", "segmental_scores", "segments_to_labels",
    "validate_segments", "write_report_csv", "write_report_json",
    "LossConfig", "classification_loss", "smoothing_loss", "stage_loss",
    "total_loss",
    "FusionGate", "PoolingMode", "SfTmnConfig", "SlowFastModel",
    "StageOutputs", "build_sf_tmn", "fuse", "segment_pool", "sf_tmn_forward",
    "upsample_repeat",
    "__version__",
]
