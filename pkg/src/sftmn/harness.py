"""Training loop, evaluation driver, prediction, and model checkpointing.

Everything here is deterministic given the configured seeds: model
initialization draws from the model seed, the per-epoch video shuffle and
dropout draw from the training seed, and videos are processed one forward
pass at a time in shuffle order (grouped only for the optimizer step when
batch_videos > 1).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn

from .backbones import (ASFORMER_DECODER, ASFORMER_ENCODER, TCN_STAGE,
                        StageSpec, TemporalStack)
from .checkpoint import load_checkpoint, save_checkpoint
from .featureio import ClassMapping, FeatureSequence, LabelSequence, VideoSample
from .metrics import DEFAULT_OVERLAPS, evaluate_videos
from .objective import LossConfig, total_loss
from .slowfast import BACKBONES, SfTmnConfig, SlowFastModel, StageOutputs

OPTIMIZERS = ("adam", "sgd")


@dataclass(frozen=True)
class SinglePathConfig:
    """A plain one-path stage stack (no slow/fast split), for baselines.

    num_stages counts all stages; with the transformer backbone that is
    one encoder plus (num_stages - 1) decoders.
    """

    num_classes: int
    input_dim: int
    backbone: str = "mstcn"
    num_stages: int = 4
    layers: int = 10
    feature_maps: int = 64
    dropout: float = 0.5
    attn_window_base: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.backbone not in BACKBONES:
            raise ValueError(f"backbone must be one of {BACKBONES}, got {self.backbone!r}")
        for name in ("num_classes", "input_dim", "num_stages", "layers", "feature_maps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")

    def stage_specs(self) -> list[StageSpec]:
        common = dict(num_layers=self.layers, feature_maps=self.feature_maps,
                      num_classes=self.num_classes, dropout=self.dropout,
                      attn_window_base=self.attn_window_base)
        if self.backbone == "mstcn":
            first = StageSpec(kind=TCN_STAGE, input_dim=self.input_dim, **common)
            rest = [StageSpec(kind=TCN_STAGE, input_dim=self.num_classes, **common)
                    for _ in range(self.num_stages - 1)]
        else:
            first = StageSpec(kind=ASFORMER_ENCODER, input_dim=self.input_dim, **common)
            rest = [StageSpec(kind=ASFORMER_DECODER, input_dim=self.feature_maps, **common)
                    for _ in range(self.num_stages - 1)]
        return [first] + rest

    def to_kv(self) -> dict[str, str]:
        return {
            "backbone": self.backbone,
            "num_stages": str(self.num_stages),
            "layers": str(self.layers),
            "feature_maps": str(self.feature_maps),
            "num_classes": str(self.num_classes),
            "input_dim": str(self.input_dim),
            "dropout": repr(self.dropout),
            "attn_window_base": str(self.attn_window_base),
            "seed": str(self.seed),
        }

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "SinglePathConfig":
        return cls(
            backbone=kv["backbone"],
            num_stages=int(kv["num_stages"]),
            layers=int(kv["layers"]),
            feature_maps=int(kv["feature_maps"]),
            num_classes=int(kv["num_classes"]),
            input_dim=int(kv["input_dim"]),
            dropout=float(kv["dropout"]),
            attn_window_base=int(kv["attn_window_base"]),
            seed=int(kv["seed"]),
        )


ModelConfig = SfTmnConfig | SinglePathConfig


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig
    learning_rate: float = 1e-4
    epochs: int = 200
    batch_videos: int = 1
    seed: int = 0
    optimizer: str = "adam"
    loss: LossConfig = field(default_factory=LossConfig)
    grad_clip: float | None = None

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_videos < 1:
            raise ValueError("batch_videos must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ValueError("grad_clip must be positive when set")

    def to_kv(self) -> dict[str, str]:
        kv = {
            "learning_rate": repr(self.learning_rate),
            "epochs": str(self.epochs),
            "batch_videos": str(self.batch_videos),
            "train_seed": str(self.seed),
            "optimizer": self.optimizer,
            "grad_clip": "none" if self.grad_clip is None else repr(self.grad_clip),
        }
        kv.update(self.loss.to_kv())
        return kv


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    train_accuracy: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)
    checkpoint_path: str | None = None


def build_model(config: ModelConfig) -> nn.Module:
    """Construct a freshly seeded model for the config."""
    torch.manual_seed(config.seed)
    if isinstance(config, SfTmnConfig):
        return SlowFastModel(config)
    return TemporalStack(config.stage_specs())


def model_outputs(model: nn.Module, x: torch.Tensor) -> list[torch.Tensor]:
    """The model's supervised (num_classes, T) outputs, final stage last."""
    out = model(x)
    if isinstance(out, StageOutputs):
        return out.combined
    return [stage_out.logits for stage_out in out]


def model_num_classes(model: nn.Module) -> int:
    if isinstance(model, SlowFastModel):
        return model.config.num_classes
    if isinstance(model, TemporalStack):
        return model.specs[0].num_classes
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _check_dataset(dataset: Sequence[VideoSample], config: ModelConfig) -> None:
    if not dataset:
        raise ValueError("dataset is empty")
    dim = dataset[0].features.dim
    for sample in dataset:
        if sample.features.dim != dim:
            raise ValueError(f"video {sample.id!r}: feature dim {sample.features.dim} "
                             f"differs from dataset dim {dim}")
    if config.input_dim != dim:
        raise ValueError(f"model expects feature dim {config.input_dim}, dataset has {dim}")
    num_classes = dataset[0].labels.mapping.num_classes
    if config.num_classes != num_classes:
        raise ValueError(f"model has {config.num_classes} classes, dataset mapping "
                         f"has {num_classes}")


def train(config: TrainConfig, dataset: Sequence[VideoSample],
          out_dir: str | os.PathLike | None = None) -> tuple[nn.Module, TrainLog]:
    """Train a model on the dataset; optionally write artifacts to out_dir.

    Artifacts: checkpoint.bin (final-epoch weights + config) and
    trainlog.jsonl (one record per epoch).
    """
    _check_dataset(dataset, config.model)
    model = build_model(config.model)
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    features = [torch.from_numpy(np.ascontiguousarray(s.features.values, dtype=np.float32))
                for s in dataset]
    labels = [torch.from_numpy(np.ascontiguousarray(s.labels.labels, dtype=np.int64))
              for s in dataset]

    if config.optimizer == "adam":
        optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    else:
        optimizer = torch.optim.SGD(model.parameters(), lr=config.learning_rate)

    log = TrainLog()
    model.train()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(dataset))
        epoch_loss = 0.0
        correct = 0
        total = 0
        for group_start in range(0, len(order), config.batch_videos):
            group = order[group_start:group_start + config.batch_videos]
            optimizer.zero_grad()
            group_loss = None
            for idx in group:
                outputs = model_outputs(model, features[idx])
                loss = total_loss(outputs, labels[idx], config.loss)
                if not torch.isfinite(loss):
                    raise RuntimeError(f"non-finite loss ({loss.item()}) at epoch {epoch}, "
                                       f"video {dataset[idx].id!r}")
                group_loss = loss if group_loss is None else group_loss + loss
                with torch.no_grad():
                    pred = outputs[-1].argmax(dim=0)
                    correct += int((pred == labels[idx]).sum())
                    total += labels[idx].numel()
                epoch_loss += loss.item()
            (group_loss / len(group)).backward()
            if config.grad_clip is not None:
                nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
        log.records.append(EpochRecord(
            epoch=epoch,
            loss=epoch_loss / len(dataset),
            train_accuracy=100.0 * correct / total,
        ))

    model.eval()
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_path = out_dir / "checkpoint.bin"
        save_model(checkpoint_path, model, config.model,
                   mapping=dataset[0].labels.mapping)
        write_trainlog(log, out_dir / "trainlog.jsonl")
        log.checkpoint_path = str(checkpoint_path)
    return model, log


def write_trainlog(log: TrainLog, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in log.records:
            fh.write(json.dumps({"epoch": record.epoch, "loss": record.loss,
                                 "train_acc": record.train_accuracy},
                                sort_keys=True) + "\n")


def save_model(path: str | os.PathLike, model: nn.Module, config: ModelConfig,
               mapping: ClassMapping | None = None) -> None:
    """Write a self-describing checkpoint: model kind + config + weights."""
    kind = "sftmn" if isinstance(config, SfTmnConfig) else "single"
    kv = {"model": kind}
    kv.update(config.to_kv())
    if mapping is not None:
        names = mapping.names
        if any("|" in n for n in names):
            raise ValueError("class names must not contain '|'")
        kv["class_names"] = "|".join(names)
    save_checkpoint(path, kv, dict(model.state_dict()))


def load_model(path: str | os.PathLike) -> tuple[nn.Module, ModelConfig, ClassMapping | None]:
    """Rebuild the model from a checkpoint and restore its exact weights."""
    kv, tensors = load_checkpoint(path)
    kind = kv.get("model")
    if kind == "sftmn":
        config: ModelConfig = SfTmnConfig.from_kv(kv)
    elif kind == "single":
        config = SinglePathConfig.from_kv(kv)
    else:
        raise ValueError(f"{path}: unknown model kind {kind!r}")
    model = build_model(config)
    state = {name: torch.from_numpy(arr) for name, arr in tensors.items()}
    model.load_state_dict(state)
    model.eval()
    mapping = None
    if "class_names" in kv:
        mapping = ClassMapping.from_names(kv["class_names"].split("|"))
    return model, config, mapping


def predict(model: nn.Module, features: FeatureSequence,
            mapping: ClassMapping) -> LabelSequence:
    """Per-frame argmax of the final output; ties go to the lower class index."""
    model.eval()
    with torch.no_grad():
        x = torch.from_numpy(np.ascontiguousarray(features.values, dtype=np.float32))
        final = model_outputs(model, x)[-1]
    scores = final.numpy()
    return LabelSequence(np.argmax(scores, axis=0).astype(np.int64), mapping)


def evaluate(model: nn.Module, dataset: Sequence[VideoSample],
             overlaps: Sequence[float] = DEFAULT_OVERLAPS) -> dict:
    """Predict every video and score against its labels; returns the report."""
    if not dataset:
        raise ValueError("dataset is empty")
    num_classes = model_num_classes(model)
    mapping_classes = dataset[0].labels.mapping.num_classes
    if num_classes != mapping_classes:
        raise ValueError(f"model has {num_classes} classes, dataset mapping has "
                         f"{mapping_classes}")
    pairs = []
    ids = []
    for sample in dataset:
        predicted = predict(model, sample.features, sample.labels.mapping)
        pairs.append((predicted.labels, sample.labels.labels))
        ids.append(sample.id)
    return evaluate_videos(pairs, overlaps=overlaps, ids=ids)
