"""Two-pathway temporal modeling: segment pooling, nearest upsampling,
learned weighted fusion, and the four slow/fast wiring designs.

The slow path runs temporal stages at frame resolution (T frames); the
fast path runs the same architecture on segment-pooled input
(S = ceil(T / L) segments) and its outputs are upsampled back to T by
repetition. At every stage the two paths' class-probability arrays are
fused with learned scalar weights; with the transformer backbone the
feature arrays are fused too, with their own weights. The fused arrays
are the model's supervised outputs, and the wiring design decides which
path feeds its next refinement stage from the fused result:

    a: slow refinement consumes the fused output, fast refinement its own
       previous output (the default);
    b: mirrored (fast consumes the fused output, pooled back to S);
    c: both paths stay self-contained (fusion is still produced per stage);
    d: both paths consume the fused output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import torch
import torch.nn as nn

from .backbones import (ASFORMER_DECODER, ASFORMER_ENCODER, TCN_STAGE,
                        StageOutput, StageSpec, make_stage)

BACKBONES = ("mstcn", "asformer")
DESIGNS = ("a", "b", "c", "d")
POOLING_KINDS = ("max", "average", "power-average")


@dataclass(frozen=True)
class PoolingMode:
    kind: str = "max"
    power: float = 2.0

    def __post_init__(self) -> None:
        if self.kind not in POOLING_KINDS:
            raise ValueError(f"pooling kind must be one of {POOLING_KINDS}, "
                             f"got {self.kind!r}")
        if not (math.isfinite(self.power) and self.power > 0):
            raise ValueError(f"pooling power must be finite and positive, got {self.power}")


def segment_pool(x: torch.Tensor, segment_length: int,
                 mode: PoolingMode = PoolingMode()) -> torch.Tensor:
    """Pool (D, T) to (D, ceil(T / L)) over non-overlapping windows of L frames.

    The final window may be shorter than L and is pooled over its actual
    extent only. Power-average pooling computes (mean |x|^p)^(1/p).
    """
    if segment_length < 1:
        raise ValueError("segment_length must be >= 1")
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError(f"input must be (D, T) with T >= 1, got shape {tuple(x.shape)}")
    d, t = x.shape
    full = t // segment_length
    parts = []
    if full > 0:
        windows = x[:, :full * segment_length].reshape(d, full, segment_length)
        parts.append(_pool_windows(windows, mode))
    if t > full * segment_length:
        tail = x[:, full * segment_length:]
        parts.append(_pool_windows(tail.unsqueeze(1), mode))
    return parts[0] if len(parts) == 1 else torch.cat(parts, dim=1)


def _pool_windows(windows: torch.Tensor, mode: PoolingMode) -> torch.Tensor:
    # windows: (D, S, W) -> (D, S)
    if mode.kind == "max":
        return windows.amax(dim=2)
    if mode.kind == "average":
        return windows.mean(dim=2)
    return windows.abs().pow(mode.power).mean(dim=2).pow(1.0 / mode.power)


def upsample_repeat(y: torch.Tensor, segment_length: int, num_frames: int) -> torch.Tensor:
    """Expand (D, S) to (D, num_frames) by repeating each segment L times.

    The last segment's repetition is truncated so the output is exactly
    num_frames wide. S must equal ceil(num_frames / L).
    """
    if segment_length < 1 or num_frames < 1:
        raise ValueError("segment_length and num_frames must be >= 1")
    if y.ndim != 2:
        raise ValueError(f"input must be (D, S), got shape {tuple(y.shape)}")
    expected = -(-num_frames // segment_length)
    if y.shape[1] != expected:
        raise ValueError(f"got {y.shape[1]} segments, but {num_frames} frames at "
                         f"segment length {segment_length} need {expected}")
    return y.repeat_interleave(segment_length, dim=1)[:, :num_frames]


def fuse(slow: torch.Tensor, fast_upsampled: torch.Tensor, slow_weight, fast_weight
         ) -> torch.Tensor:
    """Elementwise slow_weight * slow + fast_weight * fast_upsampled."""
    if slow.shape != fast_upsampled.shape:
        raise ValueError(f"fusion inputs must share shape, got {tuple(slow.shape)} "
                         f"and {tuple(fast_upsampled.shape)}")
    return slow_weight * slow + fast_weight * fast_upsampled


class FusionGate(nn.Module):
    """One learned scalar weight per path; both start at 0.5."""

    def __init__(self):
        super().__init__()
        self.slow_weight = nn.Parameter(torch.tensor(0.5))
        self.fast_weight = nn.Parameter(torch.tensor(0.5))

    def forward(self, slow: torch.Tensor, fast_upsampled: torch.Tensor) -> torch.Tensor:
        return fuse(slow, fast_upsampled, self.slow_weight, self.fast_weight)


@dataclass(frozen=True)
class SfTmnConfig:
    """Full two-pathway model configuration.

    refinement_stages is the number of stages after the first
    temporal-modeling stage, so the model produces refinement_stages + 1
    fused outputs.
    """

    num_classes: int
    input_dim: int
    backbone: str = "mstcn"
    segment_length: int = 32
    pooling: PoolingMode = field(default_factory=PoolingMode)
    design: str = "a"
    refinement_stages: int = 3
    layers: int = 10
    feature_maps: int = 64
    dropout: float = 0.5
    attn_window_base: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.backbone not in BACKBONES:
            raise ValueError(f"backbone must be one of {BACKBONES}, got {self.backbone!r}")
        if self.design not in DESIGNS:
            raise ValueError(f"design must be one of {DESIGNS}, got {self.design!r}")
        if self.refinement_stages < 0:
            raise ValueError("refinement_stages must be >= 0")
        for name in ("num_classes", "input_dim", "segment_length", "layers",
                     "feature_maps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")

    def stage_specs(self) -> list[StageSpec]:
        """Per-path stage list; both paths instantiate the same specs."""
        common = dict(num_layers=self.layers, feature_maps=self.feature_maps,
                      num_classes=self.num_classes, dropout=self.dropout,
                      attn_window_base=self.attn_window_base)
        if self.backbone == "mstcn":
            first = StageSpec(kind=TCN_STAGE, input_dim=self.input_dim, **common)
            rest = [StageSpec(kind=TCN_STAGE, input_dim=self.num_classes, **common)
                    for _ in range(self.refinement_stages)]
        else:
            first = StageSpec(kind=ASFORMER_ENCODER, input_dim=self.input_dim, **common)
            rest = [StageSpec(kind=ASFORMER_DECODER, input_dim=self.feature_maps, **common)
                    for _ in range(self.refinement_stages)]
        return [first] + rest

    def to_kv(self) -> dict[str, str]:
        return {
            "backbone": self.backbone,
            "segment_length": str(self.segment_length),
            "pooling": self.pooling.kind,
            "power_p": repr(self.pooling.power),
            "design": self.design,
            "refinement_stages": str(self.refinement_stages),
            "layers": str(self.layers),
            "feature_maps": str(self.feature_maps),
            "num_classes": str(self.num_classes),
            "input_dim": str(self.input_dim),
            "dropout": repr(self.dropout),
            "attn_window_base": str(self.attn_window_base),
            "seed": str(self.seed),
        }

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "SfTmnConfig":
        return cls(
            backbone=kv["backbone"],
            segment_length=int(kv["segment_length"]),
            pooling=PoolingMode(kind=kv["pooling"], power=float(kv["power_p"])),
            design=kv["design"],
            refinement_stages=int(kv["refinement_stages"]),
            layers=int(kv["layers"]),
            feature_maps=int(kv["feature_maps"]),
            num_classes=int(kv["num_classes"]),
            input_dim=int(kv["input_dim"]),
            dropout=float(kv["dropout"]),
            attn_window_base=int(kv["attn_window_base"]),
            seed=int(kv["seed"]),
        )


@dataclass
class StageOutputs:
    """Forward results: fused outputs plus per-path diagnostics.

    combined holds refinement_stages + 1 arrays of shape (num_classes, T):
    the supervised outputs, in stage order. combined_features is populated
    only for the transformer backbone, whose fusion also covers features.
    """

    combined: list[torch.Tensor]
    slow_per_stage: list[StageOutput]
    fast_per_stage: list[StageOutput]
    combined_features: list[torch.Tensor] | None = None

    @property
    def final(self) -> torch.Tensor:
        return self.combined[-1]


class SlowFastModel(nn.Module):
    """Two identically-shaped stage stacks with per-stage fusion gates."""

    def __init__(self, config: SfTmnConfig):
        super().__init__()
        self.config = config
        specs = config.stage_specs()
        self.slow_stages = nn.ModuleList([make_stage(s) for s in specs])
        self.fast_stages = nn.ModuleList([make_stage(s) for s in specs])
        self.prob_gates = nn.ModuleList([FusionGate() for _ in specs])
        if config.backbone == "asformer":
            self.feature_gates = nn.ModuleList([FusionGate() for _ in specs])
        else:
            self.feature_gates = None

    def forward(self, x: torch.Tensor) -> StageOutputs:
        config = self.config
        if x.ndim != 2 or x.shape[0] != config.input_dim:
            raise ValueError(f"input must be ({config.input_dim}, T), got shape "
                             f"{tuple(x.shape)}")
        length = config.segment_length
        num_frames = x.shape[1]
        with_features = self.feature_gates is not None

        x_fast = segment_pool(x, length, config.pooling)
        slow_outs: list[StageOutput] = []
        fast_outs: list[StageOutput] = []
        combined: list[torch.Tensor] = []
        combined_features: list[torch.Tensor] = []

        for i in range(config.refinement_stages + 1):
            if i == 0:
                slow_out = self.slow_stages[0](x)
                fast_out = self.fast_stages[0](x_fast)
            else:
                if config.design in ("a", "d"):
                    slow_probs_in = combined[i - 1]
                    slow_feats_in = combined_features[i - 1] if with_features else None
                else:
                    slow_probs_in = torch.softmax(slow_outs[i - 1].logits, dim=0)
                    slow_feats_in = slow_outs[i - 1].features
                if config.design in ("b", "d"):
                    fast_probs_in = segment_pool(combined[i - 1], length, config.pooling)
                    fast_feats_in = (segment_pool(combined_features[i - 1], length,
                                                  config.pooling)
                                     if with_features else None)
                else:
                    fast_probs_in = torch.softmax(fast_outs[i - 1].logits, dim=0)
                    fast_feats_in = fast_outs[i - 1].features
                if with_features:
                    slow_out = self.slow_stages[i](slow_probs_in, slow_feats_in)
                    fast_out = self.fast_stages[i](fast_probs_in, fast_feats_in)
                else:
                    slow_out = self.slow_stages[i](slow_probs_in)
                    fast_out = self.fast_stages[i](fast_probs_in)

            slow_probs = torch.softmax(slow_out.logits, dim=0)
            fast_probs_up = upsample_repeat(torch.softmax(fast_out.logits, dim=0),
                                            length, num_frames)
            combined.append(self.prob_gates[i](slow_probs, fast_probs_up))
            if with_features:
                fast_feats_up = upsample_repeat(fast_out.features, length, num_frames)
                combined_features.append(
                    self.feature_gates[i](slow_out.features, fast_feats_up))
            slow_outs.append(slow_out)
            fast_outs.append(fast_out)

        return StageOutputs(
            combined=combined,
            slow_per_stage=slow_outs,
            fast_per_stage=fast_outs,
            combined_features=combined_features if with_features else None,
        )


def build_sf_tmn(config: SfTmnConfig) -> SlowFastModel:
    """Construct a seeded model; identical configs give identical weights."""
    torch.manual_seed(config.seed)
    return SlowFastModel(config)


def sf_tmn_forward(model: SlowFastModel, x: torch.Tensor) -> StageOutputs:
    return model(x)
