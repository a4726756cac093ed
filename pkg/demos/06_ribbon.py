"""
Rendering label ribbons from the command line
=============================================

The CLI's ribbon subcommand turns per-frame label files into color
bands, one band per file, for eyeballing segmentation quality. This
script drives the same entry point the `sftmn` console command uses.
"""

import tempfile
from pathlib import Path

from sftmn.cli import main
from sftmn.featureio import SyntheticSpec, generate_synthetic, write_dataset

root = Path(tempfile.mkdtemp(prefix="sftmn-ribbon-"))
# every band in one ribbon must cover the same frame count, so the two
# videos are generated at a fixed length
samples, mapping = generate_synthetic(SyntheticSpec(
    num_videos=2, num_classes=4, feature_dim=8, min_length=72, max_length=72,
    mean_segment_length=15, noise_level=0.0, separation=2.0, seed=3))
write_dataset(samples, mapping, root)

label_files = sorted(str(p) for p in (root / "groundTruth").glob("*.txt"))
print(f"rendering {len(label_files)} label files from {root}")

# one horizontal band per file; svg scales each run to its frame share
code = main(["ribbon", *label_files,
             "--mapping", str(root / "mapping.txt"),
             "--format", "svg", "--name", "truth", "--out", str(root)])
assert code == 0

# ppm writes raw pixels, csv writes the run-length segment table
for fmt in ("ppm", "csv"):
    code = main(["ribbon", *label_files,
                 "--mapping", str(root / "mapping.txt"),
                 "--format", fmt, "--name", "truth", "--out", str(root)])
    assert code == 0

for name in ("truth.svg", "truth.ppm", "truth.csv"):
    path = root / name
    print(f"  {name}: {path.stat().st_size} bytes")

print("\nfirst csv rows:")
for line in (root / "truth.csv").read_text().splitlines()[:5]:
    print(f"  {line}")
