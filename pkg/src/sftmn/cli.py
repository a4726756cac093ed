"""Command-line surface: dataset synthesis, training, evaluation,
prediction, and ribbon-plot export.

Exit codes: 0 success, 1 runtime failure (bad data, failed training),
2 usage errors (unknown flags, missing files). Every subcommand's file
output is byte-reproducible for identical flags and seeds; wall-clock
timing is confined to a single stdout line.
"""

from __future__ import annotations

import argparse
import colorsys
import csv
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .checkpoint import CheckpointError
from .featureio import (ClassMapping, DataError, FeatureSequence, LabelSequence,
                        SyntheticSpec, generate_synthetic, load_dataset,
                        load_features, parse_mapping, write_dataset)
from .harness import (SinglePathConfig, TrainConfig, evaluate, load_model,
                      predict, save_model, train)
from .metrics import labels_to_segments, write_report_csv, write_report_json
from .objective import LossConfig
from .slowfast import PoolingMode, SfTmnConfig

POOL_TOKENS = {"max": "max", "avg": "average", "power": "power-average"}

# Seven visually distinct band colors; classes beyond seven get
# golden-angle generated hues so any class count stays deterministic.
BASE_PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                "#59a14f", "#edc948", "#b07aa1")
GOLDEN_ANGLE_DEG = 137.50776405003785

SVG_WIDTH = 960
SVG_BAND_HEIGHT = 28
SVG_LABEL_HEIGHT = 18
SVG_ROW_GAP = 10
PPM_BAND_HEIGHT = 24


def default_palette(num_classes: int) -> dict[int, str]:
    if num_classes < 1:
        raise ValueError("num_classes must be >= 1")
    colors = list(BASE_PALETTE[:num_classes])
    for i in range(len(colors), num_classes):
        hue = (i * GOLDEN_ANGLE_DEG) % 360.0
        r, g, b = colorsys.hsv_to_rgb(hue / 360.0, 0.65, 0.85)
        colors.append(f"#{round(r * 255):02x}{round(g * 255):02x}{round(b * 255):02x}")
    return dict(enumerate(colors))


@dataclass(frozen=True)
class RibbonSpec:
    """Rows of equal-length label sequences plus a class color table."""

    rows: tuple[tuple[str, LabelSequence], ...]
    palette: dict[int, str]
    output_format: str = "svg"

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("ribbon needs at least one row")
        if self.output_format not in ("svg", "ppm", "csv"):
            raise ValueError(f"output format must be svg, ppm, or csv, "
                             f"got {self.output_format!r}")
        t = len(self.rows[0][1])
        for name, labels in self.rows:
            if len(labels) != t:
                raise ValueError(f"row {name!r} has {len(labels)} frames, "
                                 f"expected {t}")
            present = set(int(v) for v in np.unique(labels.labels))
            missing = present - set(self.palette)
            if missing:
                raise ValueError(f"palette misses classes {sorted(missing)}")

    @property
    def num_frames(self) -> int:
        return len(self.rows[0][1])


def _hex_to_rgb(color: str) -> tuple[int, int, int]:
    color = color.lstrip("#")
    return tuple(int(color[i:i + 2], 16) for i in (0, 2, 4))


def _render_svg(spec: RibbonSpec) -> str:
    t = spec.num_frames
    row_height = SVG_LABEL_HEIGHT + SVG_BAND_HEIGHT + SVG_ROW_GAP
    height = len(spec.rows) * row_height - SVG_ROW_GAP
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" '
             f'height="{height}" viewBox="0 0 {SVG_WIDTH} {height}">']
    for i, (name, labels) in enumerate(spec.rows):
        y_text = i * row_height + SVG_LABEL_HEIGHT - 5
        y_band = i * row_height + SVG_LABEL_HEIGHT
        parts.append(f'<text x="0" y="{y_text}" font-family="sans-serif" '
                     f'font-size="12">{escape(name)}</text>')
        for segment in labels_to_segments(labels.labels):
            x = segment.start / t * SVG_WIDTH
            width = segment.length / t * SVG_WIDTH
            parts.append(f'<rect x="{x:.4f}" y="{y_band}" width="{width:.4f}" '
                         f'height="{SVG_BAND_HEIGHT}" '
                         f'fill="{spec.palette[segment.label]}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _render_ppm(spec: RibbonSpec) -> bytes:
    t = spec.num_frames
    height = len(spec.rows) * PPM_BAND_HEIGHT
    header = f"P6\n{t} {height}\n255\n".encode("ascii")
    body = bytearray()
    for _, labels in spec.rows:
        scanline = bytearray()
        for value in labels.labels:
            scanline.extend(_hex_to_rgb(spec.palette[int(value)]))
        body.extend(bytes(scanline) * PPM_BAND_HEIGHT)
    return header + bytes(body)


def render_ribbon(spec: RibbonSpec, path: str | Path) -> None:
    """Write the ribbon in the requested format; bytes depend only on the RibbonSpec."""
    path = Path(path)
    if spec.output_format == "svg":
        path.write_text(_render_svg(spec), encoding="utf-8")
    elif spec.output_format == "ppm":
        path.write_bytes(_render_ppm(spec))
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "label", "start", "end"])
            for name, labels in spec.rows:
                for segment in labels_to_segments(labels.labels):
                    writer.writerow([name, segment.label, segment.start, segment.end])


def _write_kv(kv: dict[str, str], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(kv):
            fh.write(f"{key}={kv[key]}\n")


def _resolve_split(root: Path, split: str) -> Path:
    candidate = Path(split)
    if candidate.exists():
        return candidate
    bundled = root / "splits" / f"{split}.bundle"
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"split {split!r} not found (tried {candidate} and {bundled})")


def _load_mapping(args: argparse.Namespace, root: Path) -> ClassMapping:
    mapping_path = Path(args.mapping) if args.mapping else root / "mapping.txt"
    if not mapping_path.exists():
        raise FileNotFoundError(f"mapping file not found at {mapping_path}")
    return parse_mapping(mapping_path)


def _model_config(args: argparse.Namespace, num_classes: int, input_dim: int):
    pooling = PoolingMode(kind=POOL_TOKENS[args.pool], power=args.power_p)
    if args.model == "sftmn":
        refinements = args.stages - 1 if args.backbone == "mstcn" else args.decoders
        return SfTmnConfig(
            num_classes=num_classes, input_dim=input_dim, backbone=args.backbone,
            segment_length=args.segment_length, pooling=pooling, design=args.design,
            refinement_stages=refinements, layers=args.layers,
            feature_maps=args.feature_maps, dropout=args.dropout, seed=args.seed,
        )
    num_stages = args.stages if args.backbone == "mstcn" else args.decoders + 1
    return SinglePathConfig(
        num_classes=num_classes, input_dim=input_dim, backbone=args.backbone,
        num_stages=num_stages, layers=args.layers, feature_maps=args.feature_maps,
        dropout=args.dropout, seed=args.seed,
    )


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        num_videos=args.videos, num_classes=args.classes,
        feature_dim=args.feature_dim, min_length=args.min_length,
        max_length=args.max_length, mean_segment_length=args.mean_segment,
        noise_level=args.noise, separation=args.separation, seed=args.seed,
    )
    samples, mapping = generate_synthetic(spec)
    write_dataset(samples, mapping, args.out, feature_format=args.feature_format,
                  feature_layout=args.feature_layout, split_name=args.split_name)
    total = sum(s.features.num_frames for s in samples)
    print(f"wrote {len(samples)} videos ({total} frames, {mapping.num_classes} classes) "
          f"to {args.out}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    root = Path(args.dataset_root)
    mapping = _load_mapping(args, root)
    split = _resolve_split(root, args.split)
    dataset = load_dataset(root, split, mapping, args.feature_layout)
    input_dim = dataset[0].features.dim

    model_config = _model_config(args, mapping.num_classes, input_dim)
    config = TrainConfig(
        model=model_config, learning_rate=args.lr, epochs=args.epochs,
        batch_videos=args.batch_videos, seed=args.seed, optimizer=args.optimizer,
        loss=LossConfig(smoothing_weight=args.smoothing_weight,
                        truncation=args.truncation),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    _, log = train(config, dataset, out_dir=out)
    elapsed = time.monotonic() - started
    kv = {"model": "sftmn" if isinstance(model_config, SfTmnConfig) else "single"}
    kv.update(model_config.to_kv())
    kv.update(config.to_kv())
    _write_kv(kv, out / "train_config.txt")
    last = log.records[-1]
    print(f"trained {last.epoch} epochs on {len(dataset)} videos: "
          f"loss {last.loss:.6f}, train acc {last.train_accuracy:.2f}%")
    print(f"elapsed {elapsed:.1f}s")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    root = Path(args.dataset_root)
    mapping = _load_mapping(args, root)
    split = _resolve_split(root, args.split)
    dataset = load_dataset(root, split, mapping, args.feature_layout)
    if not Path(args.checkpoint).exists():
        raise FileNotFoundError(f"checkpoint not found at {args.checkpoint}")
    model, _, _ = load_model(args.checkpoint)
    report = evaluate(model, dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report_json(report, out / "report.json")
    write_report_csv(report, out / "report.csv")
    for name in ("accuracy", "precision", "recall", "jaccard", "edit", "f1_avg"):
        stats = report["summary"][name]
        print(f"{name}: {stats['mean']:.2f} +/- {stats['std']:.2f}")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    if not Path(args.checkpoint).exists():
        raise FileNotFoundError(f"checkpoint not found at {args.checkpoint}")
    if not Path(args.features).exists():
        raise FileNotFoundError(f"feature file not found at {args.features}")
    model, _, mapping = load_model(args.checkpoint)
    if args.mapping:
        mapping = parse_mapping(args.mapping)
    if mapping is None:
        raise DataError("checkpoint stores no class names; pass --mapping")
    values = load_features(args.features, args.feature_layout)
    video_id = args.id or Path(args.features).stem
    labels = predict(model, FeatureSequence(values), mapping)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    out_path = out / f"{video_id}.txt"
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(mapping.name_of(int(v)) for v in labels.labels) + "\n")
    print(f"wrote {len(labels)} frame predictions to {out_path}")
    return 0


def _cmd_ribbon(args: argparse.Namespace) -> int:
    if not args.mapping:
        raise FileNotFoundError("ribbon requires --mapping")
    mapping = parse_mapping(args.mapping)
    rows = []
    for label_file in args.labels:
        path = Path(label_file)
        if not path.exists():
            raise FileNotFoundError(f"label file not found at {path}")
        names = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()
                 if line.strip()]
        if not names:
            raise DataError(f"{path}: no labels")
        values = np.array([mapping.index_of(n) for n in names], dtype=np.int64)
        rows.append((path.stem, LabelSequence(values, mapping)))
    spec = RibbonSpec(rows=tuple(rows), palette=default_palette(mapping.num_classes),
                      output_format=args.format)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    out_path = out / f"{args.name}.{args.format}"
    render_ribbon(spec, out_path)
    print(f"wrote {len(rows)}-row ribbon to {out_path}")
    return 0


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset-root", required=True, help="dataset directory")
    parser.add_argument("--split", required=True,
                        help="split name (under <root>/splits/) or bundle path")
    parser.add_argument("--mapping", default=None,
                        help="class mapping file (default <root>/mapping.txt)")
    parser.add_argument("--feature-layout", choices=("DxT", "TxD"), default="DxT",
                        help="array orientation of .npy feature files")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backbone", choices=("mstcn", "asformer"), default="mstcn")
    parser.add_argument("--model", choices=("single", "sftmn"), default="sftmn")
    parser.add_argument("--design", choices=("a", "b", "c", "d"), default="a",
                        help="slow/fast refinement wiring")
    parser.add_argument("--segment-length", type=int, default=32,
                        help="frames pooled into one fast-path segment")
    parser.add_argument("--pool", choices=tuple(POOL_TOKENS), default="max")
    parser.add_argument("--power-p", type=float, default=2.0,
                        help="exponent for power-average pooling")
    parser.add_argument("--stages", type=int, default=4,
                        help="total stages (mstcn)")
    parser.add_argument("--decoders", type=int, default=3,
                        help="decoder count (asformer)")
    parser.add_argument("--layers", type=int, default=10, help="layers per stage")
    parser.add_argument("--feature-maps", type=int, default=64)
    parser.add_argument("--dropout", type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sftmn",
        description="Two-pathway temporal modeling for full-video action segmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--videos", type=int, default=5)
    p_synth.add_argument("--classes", type=int, default=4)
    p_synth.add_argument("--feature-dim", type=int, default=16)
    p_synth.add_argument("--min-length", type=int, default=80)
    p_synth.add_argument("--max-length", type=int, default=160)
    p_synth.add_argument("--mean-segment", type=int, default=20)
    p_synth.add_argument("--noise", type=float, default=0.1)
    p_synth.add_argument("--separation", type=float, default=2.0)
    p_synth.add_argument("--feature-format", choices=("npy", "raw"), default="npy")
    p_synth.add_argument("--feature-layout", choices=("DxT", "TxD"), default="DxT")
    p_synth.add_argument("--split-name", default="all")
    p_synth.set_defaults(func=_cmd_synth)

    p_train = sub.add_parser("train", help="train a model")
    _add_data_flags(p_train)
    _add_model_flags(p_train)
    p_train.add_argument("--epochs", type=int, default=200)
    p_train.add_argument("--lr", type=float, default=1e-4)
    p_train.add_argument("--lambda", dest="smoothing_weight", type=float, default=0.15,
                         help="smoothing loss weight")
    p_train.add_argument("--tau", dest="truncation", type=float, default=4.0,
                         help="smoothing loss truncation")
    p_train.add_argument("--batch-videos", type=int, default=1)
    p_train.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    _add_data_flags(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=_cmd_eval)

    p_predict = sub.add_parser("predict", help="predict labels for one feature file")
    p_predict.add_argument("--checkpoint", required=True)
    p_predict.add_argument("--features", required=True)
    p_predict.add_argument("--feature-layout", choices=("DxT", "TxD"), default="DxT")
    p_predict.add_argument("--mapping", default=None,
                           help="override class names stored in the checkpoint")
    p_predict.add_argument("--id", default=None, help="output file stem")
    p_predict.add_argument("--out", required=True)
    p_predict.set_defaults(func=_cmd_predict)

    p_ribbon = sub.add_parser("ribbon", help="render label files as color bands")
    p_ribbon.add_argument("labels", nargs="+", help="label files (one class name per line)")
    p_ribbon.add_argument("--mapping", required=True)
    p_ribbon.add_argument("--format", choices=("svg", "ppm", "csv"), default="svg")
    p_ribbon.add_argument("--name", default="ribbon", help="output file stem")
    p_ribbon.add_argument("--out", required=True)
    p_ribbon.set_defaults(func=_cmd_ribbon)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, CheckpointError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
