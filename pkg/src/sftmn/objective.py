"""Training objective: per-stage classification plus truncated smoothing.

Each supervised output contributes a cross-entropy term averaged over
frames and a smoothing term that penalizes squared frame-to-frame jumps in
log-probabilities, truncated at `truncation` to keep genuine boundaries
from dominating. The previous frame is treated as a constant in the
smoothing term (gradient flows only through the current frame), so the
penalty pulls each frame toward its predecessor rather than smearing both.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
import torch.nn.functional as F


@dataclass(frozen=True)
class LossConfig:
    smoothing_weight: float = 0.15
    truncation: float = 4.0

    def __post_init__(self) -> None:
        if self.smoothing_weight < 0:
            raise ValueError("smoothing_weight must be >= 0")
        if self.truncation <= 0:
            raise ValueError("truncation must be positive")

    def to_kv(self) -> dict[str, str]:
        return {"lambda": repr(self.smoothing_weight), "tau": repr(self.truncation)}

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "LossConfig":
        return cls(smoothing_weight=float(kv["lambda"]), truncation=float(kv["tau"]))


def _check_scores(scores: torch.Tensor) -> None:
    if scores.ndim != 2:
        raise ValueError(f"scores must be (num_classes, num_frames), got shape "
                         f"{tuple(scores.shape)}")


def classification_loss(scores: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy over frames. scores are unnormalized (C, T)."""
    _check_scores(scores)
    if labels.ndim != 1 or labels.shape[0] != scores.shape[1]:
        raise ValueError(f"labels must be ({scores.shape[1]},), got {tuple(labels.shape)}")
    return F.cross_entropy(scores.transpose(0, 1), labels)


def smoothing_loss(scores: torch.Tensor, truncation: float = 4.0) -> torch.Tensor:
    """Mean truncated squared difference of adjacent log-probabilities.

    Averaged over all num_classes * (num_frames - 1) adjacent pairs; zero
    for single-frame inputs. |delta| is clamped at `truncation` before
    squaring and the t-1 term is detached.
    """
    _check_scores(scores)
    if truncation <= 0:
        raise ValueError("truncation must be positive")
    if scores.shape[1] < 2:
        return scores.sum() * 0.0
    log_probs = F.log_softmax(scores, dim=0)
    delta = log_probs[:, 1:] - log_probs[:, :-1].detach()
    return torch.clamp(delta.abs(), max=truncation).pow(2).mean()


def stage_loss(scores: torch.Tensor, labels: torch.Tensor,
               config: LossConfig = LossConfig()) -> torch.Tensor:
    """Classification plus weighted smoothing for one supervised output."""
    return (classification_loss(scores, labels)
            + config.smoothing_weight * smoothing_loss(scores, config.truncation))


def total_loss(stage_scores: Sequence[torch.Tensor], labels: torch.Tensor,
               config: LossConfig = LossConfig()) -> torch.Tensor:
    """Sum of stage losses over every supervised output."""
    if not stage_scores:
        raise ValueError("no supervised outputs given")
    total = stage_loss(stage_scores[0], labels, config)
    for scores in stage_scores[1:]:
        total = total + stage_loss(scores, labels, config)
    return total
