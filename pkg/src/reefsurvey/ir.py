"""SegDepth composition: fuse a segmentation mask and a proximity image.

The fused image keeps depth everywhere but renders it through a false-color
lookup table on OOI pixels and as replicated grayscale elsewhere. The LUT is
built so no entry is gray, which makes the mask exactly recoverable from the
fused image alone, and each LUT segment is strictly monotone in one channel,
which makes depth recoverable too.
"""

from __future__ import annotations

import csv
import io

import numpy as np

# index -> RGB anchors; per-channel linear interpolation between them
LUT_ANCHORS = (
    (0, (0, 0, 255)),
    (64, (0, 255, 255)),
    (128, (0, 255, 0)),
    (191, (255, 255, 0)),
    (255, (255, 0, 0)),
)


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def build_lut() -> np.ndarray:
    """256x3 uint8 false-color table, piecewise-linear through LUT_ANCHORS."""
    lut = np.zeros((256, 3), dtype=np.float64)
    for (i0, c0), (i1, c1) in zip(LUT_ANCHORS[:-1], LUT_ANCHORS[1:]):
        idx = np.arange(i0, i1 + 1)
        t = (idx - i0) / (i1 - i0)
        for ch in range(3):
            lut[idx, ch] = _round_half_up(c0[ch] + t * (c1[ch] - c0[ch]))
    return lut.astype(np.uint8)


LUT = build_lut()

# the LUT is globally injective, so depth inverts from the packed color
_PACKED = (LUT[:, 0].astype(np.int64) << 16) | (LUT[:, 1].astype(np.int64) << 8) \
    | LUT[:, 2].astype(np.int64)
_PACK_ORDER = np.argsort(_PACKED, kind="stable")
_PACK_SORTED = _PACKED[_PACK_ORDER]


def colormap(d: int) -> tuple[int, int, int]:
    """LUT lookup for a single proximity value in 0..255."""
    r, g, b = LUT[int(d)]
    return int(r), int(g), int(b)


def dump_lut_csv(path) -> None:
    """Write the LUT as a 256x3 CSV (index,r,g,b) for conformance checks."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "r", "g", "b"])
        for i, (r, g, b) in enumerate(LUT):
            writer.writerow([i, int(r), int(g), int(b)])


def load_lut_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_lut_csv(fh.read())


def _parse_lut_csv(text: str) -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if rows and rows[0][0] == "index":
        rows = rows[1:]
    if len(rows) != 256:
        raise ValueError(f"LUT CSV must have 256 entries, got {len(rows)}")
    lut = np.zeros((256, 3), dtype=np.uint8)
    for row in rows:
        i = int(row[0])
        lut[i] = [int(row[1]), int(row[2]), int(row[3])]
    return lut


def compose_segdepth(seg: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """Fuse mask and proximity into the 3-channel SegDepth image.

    OOI pixels take the LUT color of their depth value; non-OOI pixels take
    the depth value replicated into all three channels. The two supports are
    disjoint, so the sum of the masked parts is plain composition.
    """
    seg = np.asarray(seg, dtype=bool)
    depth = np.asarray(depth, dtype=np.uint8)
    if seg.shape != depth.shape:
        raise ValueError(f"seg shape {seg.shape} != depth shape {depth.shape}")
    depth_ooi = np.where(seg, depth, 0).astype(np.uint8)
    depth_rest = np.where(seg, 0, depth).astype(np.uint8)
    colored = LUT[depth_ooi] * seg[..., None]
    gray = np.repeat(depth_rest[..., None], 3, axis=-1)
    return (colored + gray).astype(np.uint8)


def recover_seg(segdepth: np.ndarray) -> np.ndarray:
    """Exact mask recovery: a SegDepth pixel is OOI iff it is not gray."""
    r, g, b = segdepth[..., 0], segdepth[..., 1], segdepth[..., 2]
    return (r != g) | (g != b)


def recover_depth(segdepth: np.ndarray) -> np.ndarray:
    """Exact proximity recovery: gray pixels read any channel, colored
    pixels invert through the LUT."""
    seg = recover_seg(segdepth)
    packed = ((segdepth[..., 0].astype(np.int64) << 16)
              | (segdepth[..., 1].astype(np.int64) << 8)
              | segdepth[..., 2].astype(np.int64))
    pos = np.searchsorted(_PACK_SORTED, packed)
    pos = np.clip(pos, 0, 255)
    candidates = _PACK_ORDER[pos]
    valid = _PACKED[candidates] == packed
    if np.any(seg & ~valid):
        raise ValueError("colored pixel is not a LUT entry")
    return np.where(seg, candidates, segdepth[..., 0]).astype(np.uint8)


def downsample(segdepth: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Block-mean reduction per channel, rounded half-up."""
    h, w = segdepth.shape[:2]
    if h % out_h != 0 or w % out_w != 0:
        raise ValueError(f"output dims ({out_w}, {out_h}) must divide ({w}, {h})")
    fh, fw = h // out_h, w // out_w
    blocks = segdepth.reshape(out_h, fh, out_w, fw, -1).astype(np.float64)
    means = blocks.mean(axis=(1, 3))
    out = _round_half_up(means).astype(np.uint8)
    if segdepth.ndim == 2:
        return out[..., 0]
    return out
