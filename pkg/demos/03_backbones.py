"""
Temporal backbones: dilated TCN stages and windowed transformers
================================================================

Both backbones map (input_dim, T) to per-frame class scores and stack
into multi-stage chains where each later stage refines the previous
stage's class probabilities.
"""

import torch

from sftmn.backbones import (ASFORMER_DECODER, ASFORMER_ENCODER, TCN_STAGE,
                             StageSpec, TemporalStack, build_backbone)

torch.manual_seed(0)
x = torch.randn(12, 40)

# a prediction stage reads features; refinement stages read the previous
# stage's class probabilities, so their input_dim equals num_classes
tcn = TemporalStack([
    StageSpec(TCN_STAGE, num_layers=6, feature_maps=24, num_classes=5,
              input_dim=12, dropout=0.0),
    StageSpec(TCN_STAGE, num_layers=6, feature_maps=24, num_classes=5,
              input_dim=5, dropout=0.0),
])
outputs = tcn(x)
print(f"TCN chain: {len(outputs)} supervised outputs, "
      f"shapes {[tuple(o.logits.shape) for o in outputs]}")

# doubling dilation per layer grows the receptive field exponentially:
# 6 layers of kernel-3 convolutions reach 2*(2^6 - 1) + 1 = 127 frames
reach = 2 * (2 ** 6 - 1) + 1
print(f"per-stage receptive field at 6 layers: {reach} frames")

# the transformer variant pairs one encoder with cross-attending
# decoders; a decoder's input_dim is the previous stage's feature width
# because it attends back into those features
former = TemporalStack([
    StageSpec(ASFORMER_ENCODER, num_layers=4, feature_maps=24, num_classes=5,
              input_dim=12, dropout=0.0),
    StageSpec(ASFORMER_DECODER, num_layers=4, feature_maps=24, num_classes=5,
              input_dim=24, dropout=0.0),
])
outputs = former(x)
print(f"\ntransformer chain: {len(outputs)} supervised outputs, "
      f"shapes {[tuple(o.logits.shape) for o in outputs]}")

# attention is restricted to sliding windows that widen with depth
for layer_index in range(4):
    print(f"  layer {layer_index}: attention window "
          f"{2 ** (layer_index + 1)} frames")

# build_backbone validates the chain before constructing it: the first
# stage must read features, later stages must read class probabilities
specs = [StageSpec(TCN_STAGE, num_layers=8, feature_maps=32, num_classes=5,
                   input_dim=12, dropout=0.0)]
specs += [StageSpec(TCN_STAGE, num_layers=8, feature_maps=32, num_classes=5,
                    input_dim=5, dropout=0.0) for _ in range(2)]
model = build_backbone(specs)
outputs = model(x)
print(f"\nbuild_backbone, 3-stage TCN: {len(outputs)} outputs, "
      f"all {tuple(outputs[-1].logits.shape)}")
