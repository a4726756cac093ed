"""
Segment pooling, upsampling, and learned fusion
===============================================

The fast pathway sees the video at segment resolution: non-overlapping
windows of a fixed frame count, with a short tail pooled over its own
frames only. Its per-segment outputs are repeated back to frame
resolution before a learned scalar gate blends the two pathways.
"""

import torch

from sftmn.slowfast import (FusionGate, PoolingMode, fuse, segment_pool,
                            upsample_repeat)

torch.manual_seed(0)
x = torch.arange(14.0).reshape(2, 7)
print("input (2 channels x 7 frames):")
print(x)

# 7 frames with windows of 3 -> ceil(7/3) = 3 segments; the last segment
# covers only frame 6
for mode in (PoolingMode("max"), PoolingMode("average"),
             PoolingMode("power-average", 2.0)):
    pooled = segment_pool(x, 3, mode)
    print(f"\n{mode.kind} pooled to {tuple(pooled.shape)}:")
    print(pooled)

pooled = segment_pool(x, 3)
restored = upsample_repeat(pooled, 3, 7)
print(f"\nrepeated back to frame rate {tuple(restored.shape)}:")
print(restored)

# window of 1 is the identity for max and average pooling
assert torch.equal(segment_pool(x, 1), x)
assert torch.equal(segment_pool(x, 1, PoolingMode("average")), x)
print("\nwindow=1 pooling is the identity")

# fusion is a weighted sum of the two pathway outputs; the weights are
# plain scalars, so either path can be amplified or suppressed
slow = torch.full((2, 7), 1.0)
fast = torch.full((2, 7), 3.0)
print("\nfused with (0.5, 0.5):", fuse(slow, fast, torch.tensor(0.5),
                                       torch.tensor(0.5))[0, 0].item())
print("fused with (1.0, 0.0):", fuse(slow, fast, torch.tensor(1.0),
                                     torch.tensor(0.0))[0, 0].item())

gate = FusionGate()
print(f"\nFusionGate starts balanced: slow={gate.slow_weight.item():.2f}, "
      f"fast={gate.fast_weight.item():.2f}")
out = gate(slow, fast)
print("gated output at init:", out[0, 0].item())
