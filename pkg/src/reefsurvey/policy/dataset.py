"""Labeled-sample dataset: directory of PNG images plus a JSONL manifest."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image


@dataclass
class LabeledSample:
    """A SegDepth image with its ground-truth class pair."""

    image: np.ndarray                 # (64, 64, 3) uint8
    c_yaw: int
    c_pitch: int
    provenance: str = "expert"        # expert | human
    scenario_id: str = ""
    step: int = 0

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.uint8)
        if not (0 <= self.c_yaw <= 6 and 0 <= self.c_pitch <= 6):
            raise ValueError(f"class out of range: ({self.c_yaw}, {self.c_pitch})")


@dataclass
class DatasetSummary:
    count: int
    yaw_histogram: list[int] = field(default_factory=lambda: [0] * 7)
    pitch_histogram: list[int] = field(default_factory=lambda: [0] * 7)


def save_dataset(samples: list[LabeledSample], directory,
                 meta: dict | None = None) -> DatasetSummary:
    """Write sample PNGs and manifest.jsonl; returns per-class counts."""
    os.makedirs(directory, exist_ok=True)
    summary = DatasetSummary(count=len(samples))
    manifest_path = os.path.join(directory, "manifest.jsonl")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for idx, sample in enumerate(samples):
            name = f"sample_{idx:06d}.png"
            Image.fromarray(sample.image, mode="RGB").save(
                os.path.join(directory, name))
            record = {
                "file": name,
                "c_yaw": sample.c_yaw,
                "c_pitch": sample.c_pitch,
                "provenance": sample.provenance,
                "scenario_id": sample.scenario_id,
                "step": sample.step,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            summary.yaw_histogram[sample.c_yaw] += 1
            summary.pitch_histogram[sample.c_pitch] += 1
    if meta is not None:
        with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, sort_keys=True)
            fh.write("\n")
    return summary


def load_dataset(directory) -> list[LabeledSample]:
    manifest_path = os.path.join(directory, "manifest.jsonl")
    samples = []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            image = np.asarray(
                Image.open(os.path.join(directory, record["file"])).convert("RGB"))
            samples.append(LabeledSample(
                image=image, c_yaw=int(record["c_yaw"]),
                c_pitch=int(record["c_pitch"]),
                provenance=record.get("provenance", "expert"),
                scenario_id=record.get("scenario_id", ""),
                step=int(record.get("step", 0))))
    return samples
