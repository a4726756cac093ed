"""Single-path temporal backbones behind one uniform stage contract.

Two families are provided: multi-stage dilated temporal convolution stages
(TCN) and transformer encoder/decoder stages with block-local single-head
attention. Every stage maps a (channels, T) input to a StageOutput holding
(feature_maps, T) features and (num_classes, T) logits, preserving T for
any T >= 1.

All modules run unbatched on (channels, T) tensors; one video is one
forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

TCN_STAGE = "tcn-stage"
ASFORMER_ENCODER = "asformer-encoder"
ASFORMER_DECODER = "asformer-decoder"
STAGE_KINDS = (TCN_STAGE, ASFORMER_ENCODER, ASFORMER_DECODER)


@dataclass(frozen=True)
class StageSpec:
    """Shape and depth of one temporal stage.

    input_dim is the channel count of the stage's main input: the raw
    feature dim for a first stage, num_classes for a TCN refinement stage
    (which consumes class probabilities), and the previous stage's
    feature_maps for a decoder (which cross-attends to those features).
    """

    kind: str
    num_layers: int
    feature_maps: int
    num_classes: int
    input_dim: int
    dropout: float = 0.5
    attn_window_base: int = 2

    def __post_init__(self) -> None:
        if self.kind not in STAGE_KINDS:
            raise ValueError(f"kind must be one of {STAGE_KINDS}, got {self.kind!r}")
        for name in ("num_layers", "feature_maps", "num_classes", "input_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.attn_window_base < 2:
            raise ValueError("attn_window_base must be >= 2")


@dataclass(frozen=True)
class StageOutput:
    """features: (feature_maps, T); logits: (num_classes, T)."""

    features: torch.Tensor
    logits: torch.Tensor


def _check_input(x: torch.Tensor, channels: int, what: str) -> None:
    if x.ndim != 2 or x.shape[0] != channels:
        raise ValueError(f"{what} must be ({channels}, T), got shape {tuple(x.shape)}")
    if x.shape[1] < 1:
        raise ValueError(f"{what} must have T >= 1")


class DilatedResidualLayer(nn.Module):
    """Dilated conv (kernel 3, zero padding) -> ReLU -> 1x1 conv -> dropout, residual."""

    def __init__(self, channels: int, dilation: int, dropout: float = 0.5):
        super().__init__()
        if dilation < 1:
            raise ValueError("dilation must be >= 1")
        self.conv_dilated = nn.Conv1d(channels, channels, 3,
                                      padding=dilation, dilation=dilation)
        self.conv_1x1 = nn.Conv1d(channels, channels, 1)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = F.relu(self.conv_dilated(x))
        out = self.conv_1x1(out)
        out = self.dropout(out)
        return x + out


class TcnStage(nn.Module):
    """1x1 input conv, num_layers dilated residual layers (dilation 2^l), 1x1 head."""

    def __init__(self, spec: StageSpec):
        super().__init__()
        if spec.kind != TCN_STAGE:
            raise ValueError(f"TcnStage needs kind {TCN_STAGE!r}, got {spec.kind!r}")
        self.spec = spec
        self.conv_in = nn.Conv1d(spec.input_dim, spec.feature_maps, 1)
        self.layers = nn.ModuleList([
            DilatedResidualLayer(spec.feature_maps, 2 ** l, spec.dropout)
            for l in range(spec.num_layers)
        ])
        self.conv_out = nn.Conv1d(spec.feature_maps, spec.num_classes, 1)

    def forward(self, x: torch.Tensor) -> StageOutput:
        _check_input(x, self.spec.input_dim, "stage input")
        hidden = self.conv_in(x)
        for layer in self.layers:
            hidden = layer(hidden)
        return StageOutput(features=hidden, logits=self.conv_out(hidden))


class BlockLocalAttention(nn.Module):
    """Single-head attention restricted to contiguous blocks of `window` frames.

    Queries and keys come from x; values come from `values` when given
    (cross-attention) and from x otherwise. Frames in block
    [b*window, (b+1)*window) attend only to frames of the same block, so
    activity outside a block cannot change that block's output.
    """

    def __init__(self, dim: int, window: int, kv_dim: int | None = None):
        super().__init__()
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self.dim = dim
        self.query = nn.Conv1d(dim, dim, 1)
        self.key = nn.Conv1d(dim, dim, 1)
        self.value = nn.Conv1d(kv_dim if kv_dim is not None else dim, dim, 1)
        for conv in (self.query, self.key, self.value):
            nn.init.xavier_uniform_(conv.weight, gain=0.5)
            nn.init.zeros_(conv.bias)

    def forward(self, x: torch.Tensor, values: torch.Tensor | None = None,
                return_weights: bool = False):
        source = x if values is None else values
        if source.shape[1] != x.shape[1]:
            raise ValueError(f"query frames ({x.shape[1]}) != value frames "
                             f"({source.shape[1]})")
        q = self.query(x)
        k = self.key(x)
        v = self.value(source)
        t = x.shape[1]
        scale = q.shape[0] ** -0.5
        weights = torch.zeros(t, t) if return_weights else None
        chunks = []
        for start in range(0, t, self.window):
            end = min(start + self.window, t)
            scores = q[:, start:end].transpose(0, 1) @ k[:, start:end] * scale
            attn = torch.softmax(scores, dim=1)
            chunks.append(v[:, start:end] @ attn.transpose(0, 1))
            if return_weights:
                weights[start:end, start:end] = attn.detach()
        out = torch.cat(chunks, dim=1)
        return (out, weights) if return_weights else out


class AsformerLayer(nn.Module):
    """Dilated conv -> ReLU -> block-local attention (residual) -> 1x1 conv, residual.

    With cross features given, attention values come from them (every layer
    of a decoder attends to the same cross features); otherwise the layer
    self-attends.
    """

    def __init__(self, feature_maps: int, dilation: int, window: int,
                 dropout: float, kv_dim: int | None = None):
        super().__init__()
        if dilation < 1:
            raise ValueError("dilation must be >= 1")
        self.conv_dilated = nn.Conv1d(feature_maps, feature_maps, 3,
                                      padding=dilation, dilation=dilation)
        self.attention = BlockLocalAttention(feature_maps, window, kv_dim=kv_dim)
        self.conv_out = nn.Conv1d(feature_maps, feature_maps, 1)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, cross: torch.Tensor | None = None) -> torch.Tensor:
        hidden = F.relu(self.conv_dilated(x))
        hidden = hidden + self.attention(hidden, values=cross)
        hidden = self.conv_out(hidden)
        hidden = self.dropout(hidden)
        return x + hidden


class AsformerEncoder(nn.Module):
    """Self-attending stage: window grows as attn_window_base^(l+1) at layer l."""

    def __init__(self, spec: StageSpec):
        super().__init__()
        if spec.kind != ASFORMER_ENCODER:
            raise ValueError(f"AsformerEncoder needs kind {ASFORMER_ENCODER!r}, "
                             f"got {spec.kind!r}")
        self.spec = spec
        self.conv_in = nn.Conv1d(spec.input_dim, spec.feature_maps, 1)
        self.layers = nn.ModuleList([
            AsformerLayer(spec.feature_maps, 2 ** l, spec.attn_window_base ** (l + 1),
                          spec.dropout)
            for l in range(spec.num_layers)
        ])
        self.conv_out = nn.Conv1d(spec.feature_maps, spec.num_classes, 1)

    def forward(self, x: torch.Tensor) -> StageOutput:
        _check_input(x, self.spec.input_dim, "encoder input")
        hidden = self.conv_in(x)
        for layer in self.layers:
            hidden = layer(hidden)
        return StageOutput(features=hidden, logits=self.conv_out(hidden))


class AsformerDecoder(nn.Module):
    """Refining stage: the class-probability stream cross-attends to features.

    The stream input is a (num_classes, T) probability array; cross features
    are (input_dim, T) from the previous stage (attention values are drawn
    from them at every layer).
    """

    def __init__(self, spec: StageSpec):
        super().__init__()
        if spec.kind != ASFORMER_DECODER:
            raise ValueError(f"AsformerDecoder needs kind {ASFORMER_DECODER!r}, "
                             f"got {spec.kind!r}")
        self.spec = spec
        self.conv_in = nn.Conv1d(spec.num_classes, spec.feature_maps, 1)
        self.layers = nn.ModuleList([
            AsformerLayer(spec.feature_maps, 2 ** l, spec.attn_window_base ** (l + 1),
                          spec.dropout, kv_dim=spec.input_dim)
            for l in range(spec.num_layers)
        ])
        self.conv_out = nn.Conv1d(spec.feature_maps, spec.num_classes, 1)

    def forward(self, probs: torch.Tensor, cross_features: torch.Tensor) -> StageOutput:
        _check_input(probs, self.spec.num_classes, "decoder stream input")
        _check_input(cross_features, self.spec.input_dim, "decoder cross features")
        if probs.shape[1] != cross_features.shape[1]:
            raise ValueError(f"stream frames ({probs.shape[1]}) != cross feature "
                             f"frames ({cross_features.shape[1]})")
        hidden = self.conv_in(probs)
        for layer in self.layers:
            hidden = layer(hidden, cross=cross_features)
        return StageOutput(features=hidden, logits=self.conv_out(hidden))


def make_stage(spec: StageSpec) -> nn.Module:
    if spec.kind == TCN_STAGE:
        return TcnStage(spec)
    if spec.kind == ASFORMER_ENCODER:
        return AsformerEncoder(spec)
    return AsformerDecoder(spec)


def validate_chain(specs: Sequence[StageSpec]) -> None:
    """Check the dimension chain between consecutive stages."""
    if not specs:
        raise ValueError("at least one stage is required")
    for i, spec in enumerate(specs):
        if i == 0:
            continue
        prev = specs[i - 1]
        if spec.kind == ASFORMER_ENCODER:
            raise ValueError(f"stage {i}: an encoder can only be the first stage")
        if spec.num_classes != prev.num_classes:
            raise ValueError(f"stage {i}: num_classes {spec.num_classes} != "
                             f"stage {i - 1} num_classes {prev.num_classes}")
        if spec.kind == TCN_STAGE and spec.input_dim != prev.num_classes:
            raise ValueError(f"stage {i}: refinement input_dim {spec.input_dim} must "
                             f"equal previous num_classes {prev.num_classes}")
        if spec.kind == ASFORMER_DECODER and spec.input_dim != prev.feature_maps:
            raise ValueError(f"stage {i}: decoder input_dim {spec.input_dim} must "
                             f"equal previous feature_maps {prev.feature_maps}")


class TemporalStack(nn.Module):
    """Chain of stages: each refining stage consumes the previous stage's
    per-frame softmax probabilities (decoders additionally cross-attend to
    the previous stage's features). Forward returns one StageOutput per
    stage, all sharing the input's T.
    """

    def __init__(self, specs: Sequence[StageSpec]):
        super().__init__()
        validate_chain(specs)
        self.specs = tuple(specs)
        self.stages = nn.ModuleList([make_stage(s) for s in specs])

    def forward(self, x: torch.Tensor) -> list[StageOutput]:
        outputs: list[StageOutput] = []
        for i, stage in enumerate(self.stages):
            if i == 0:
                out = stage(x)
            else:
                probs = torch.softmax(outputs[-1].logits, dim=0)
                if self.specs[i].kind == ASFORMER_DECODER:
                    out = stage(probs, outputs[-1].features)
                else:
                    out = stage(probs)
            outputs.append(out)
        return outputs


def build_backbone(specs: Sequence[StageSpec]) -> TemporalStack:
    """Validate the stage chain and return the parameterized stack."""
    return TemporalStack(specs)
