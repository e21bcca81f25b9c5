"""Small dual-head convolutional classifier over SegDepth images.

Architecture: 64x64x3 input scaled to [0,1]; conv 8@5x5 stride 2 + ReLU;
conv 16@5x5 stride 2 + ReLU; dense 64 + ReLU; two independent dense-7
softmax heads for yaw and pitch. Forward and backward passes are plain
numpy so training is bit-reproducible from a seed.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from .actions import NUM_CLASSES, ActionClass

MODEL_FORMAT_VERSION = "1.0"

ARCH = {
    "input": [64, 64, 3],
    "conv_channels": [8, 16],
    "kernel": 5,
    "stride": 2,
    "hidden": 64,
    "classes": NUM_CLASSES,
}

INPUT_H, INPUT_W, INPUT_C = ARCH["input"]


def _conv_out(size: int, kernel: int, stride: int) -> int:
    return (size - kernel) // stride + 1

_H1 = _conv_out(INPUT_H, ARCH["kernel"], ARCH["stride"])     # 30
_H2 = _conv_out(_H1, ARCH["kernel"], ARCH["stride"])         # 13
_FLAT = _H2 * _H2 * ARCH["conv_channels"][1]                 # 2704


@dataclass
class PolicyModel:
    """Weight container; params keyed W1,b1,W2,b2,W3,b3,Wy,by,Wp,bp."""

    params: dict[str, np.ndarray]
    lam: float = 0.1
    arch: dict = field(default_factory=lambda: dict(ARCH))

    def copy(self) -> "PolicyModel":
        return PolicyModel(params={k: v.copy() for k, v in self.params.items()},
                           lam=self.lam, arch=dict(self.arch))


def init_model(seed: int = 0, lam: float = 0.1) -> PolicyModel:
    """Uniform fan-in initialization, deterministic per seed."""
    rng = np.random.default_rng(seed)
    k = ARCH["kernel"]
    c1, c2 = ARCH["conv_channels"]
    hidden = ARCH["hidden"]

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    params = {
        "W1": uniform((k * k * INPUT_C, c1), k * k * INPUT_C),
        "b1": uniform((c1,), k * k * INPUT_C),
        "W2": uniform((k * k * c1, c2), k * k * c1),
        "b2": uniform((c2,), k * k * c1),
        "W3": uniform((_FLAT, hidden), _FLAT),
        "b3": uniform((hidden,), _FLAT),
        "Wy": uniform((hidden, NUM_CLASSES), hidden),
        "by": uniform((NUM_CLASSES,), hidden),
        "Wp": uniform((hidden, NUM_CLASSES), hidden),
        "bp": uniform((NUM_CLASSES,), hidden),
    }
    return PolicyModel(params=params, lam=lam)


def _im2col(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    """(N, H, W, C) -> (N, oh, ow, kernel, kernel, C) patch view."""
    windows = np.lib.stride_tricks.sliding_window_view(x, (kernel, kernel),
                                                       axis=(1, 2))
    windows = windows[:, ::stride, ::stride]          # (N, oh, ow, C, k, k)
    return np.ascontiguousarray(windows.transpose(0, 1, 2, 4, 5, 3))


def _col2im(dcols: np.ndarray, x_shape: tuple, kernel: int,
            stride: int) -> np.ndarray:
    """Scatter-add patch gradients back to the input layout."""
    n, h, w, c = x_shape
    oh, ow = dcols.shape[1], dcols.shape[2]
    dx = np.zeros((n, h, w, c), dtype=dcols.dtype)
    for ki in range(kernel):
        for kj in range(kernel):
            dx[:, ki:ki + stride * oh:stride,
               kj:kj + stride * ow:stride, :] += dcols[:, :, :, ki, kj, :]
    return dx


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(model: PolicyModel, x: np.ndarray,
            want_cache: bool = False):
    """Batch forward pass.

    x is (N, 64, 64, 3) float64 already scaled to [0,1]. Returns
    (p_yaw, p_pitch) and, when want_cache, the intermediates needed by
    backward().
    """
    p = model.params
    k, s = ARCH["kernel"], ARCH["stride"]
    cols1 = _im2col(x, k, s)
    n, oh1, ow1 = cols1.shape[:3]
    z1 = cols1.reshape(n * oh1 * ow1, -1) @ p["W1"] + p["b1"]
    a1 = np.maximum(z1, 0.0).reshape(n, oh1, ow1, -1)
    cols2 = _im2col(a1, k, s)
    oh2, ow2 = cols2.shape[1], cols2.shape[2]
    z2 = cols2.reshape(n * oh2 * ow2, -1) @ p["W2"] + p["b2"]
    a2 = np.maximum(z2, 0.0).reshape(n, oh2, ow2, -1)
    flat = a2.reshape(n, -1)
    z3 = flat @ p["W3"] + p["b3"]
    a3 = np.maximum(z3, 0.0)
    zy = a3 @ p["Wy"] + p["by"]
    zp = a3 @ p["Wp"] + p["bp"]
    p_yaw = softmax(zy)
    p_pitch = softmax(zp)
    if not want_cache:
        return p_yaw, p_pitch
    cache = {"x": x, "cols1": cols1, "z1": z1, "a1": a1, "cols2": cols2,
             "z2": z2, "a2": a2, "flat": flat, "z3": z3, "a3": a3}
    return (p_yaw, p_pitch), cache


def backward(model: PolicyModel, cache: dict,
             p_yaw: np.ndarray, p_pitch: np.ndarray,
             t_yaw: np.ndarray, t_pitch: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the mean dual-head loss over the batch.

    The softmax+loss gradient per head is (p - t) / N regardless of the
    CCE/KL mix, because both terms share the -t/p prediction gradient.
    """
    p = model.params
    k, s = ARCH["kernel"], ARCH["stride"]
    n = cache["x"].shape[0]
    dzy = (p_yaw - t_yaw) / n
    dzp = (p_pitch - t_pitch) / n
    grads = {
        "Wy": cache["a3"].T @ dzy, "by": dzy.sum(axis=0),
        "Wp": cache["a3"].T @ dzp, "bp": dzp.sum(axis=0),
    }
    da3 = dzy @ p["Wy"].T + dzp @ p["Wp"].T
    dz3 = da3 * (cache["z3"] > 0)
    grads["W3"] = cache["flat"].T @ dz3
    grads["b3"] = dz3.sum(axis=0)
    dflat = dz3 @ p["W3"].T
    da2 = dflat.reshape(cache["a2"].shape)
    dz2 = (da2 * (cache["z2"].reshape(da2.shape) > 0)).reshape(-1, ARCH["conv_channels"][1])
    cols2_flat = cache["cols2"].reshape(dz2.shape[0], -1)
    grads["W2"] = cols2_flat.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    dcols2 = (dz2 @ p["W2"].T).reshape(cache["cols2"].shape)
    da1 = _col2im(dcols2, cache["a1"].shape, k, s)
    dz1 = (da1.reshape(-1, ARCH["conv_channels"][0])
           * (cache["z1"] > 0)).astype(np.float64)
    cols1_flat = cache["cols1"].reshape(dz1.shape[0], -1)
    grads["W1"] = cols1_flat.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return grads


def _check_input(segdepth: np.ndarray) -> None:
    if segdepth.shape != (INPUT_H, INPUT_W, INPUT_C):
        raise ValueError(
            f"policy input must be ({INPUT_H}, {INPUT_W}, {INPUT_C}), "
            f"got {segdepth.shape}")


def predict(model: PolicyModel, segdepth: np.ndarray
            ) -> tuple[np.ndarray, np.ndarray, ActionClass]:
    """Class distributions and the argmax action for one SegDepth image.

    This is the only inference entry point; it sees nothing but the fused
    image. Ties resolve to the lower class index.
    """
    _check_input(segdepth)
    x = segdepth.astype(np.float64)[None] / 255.0
    p_yaw, p_pitch = forward(model, x)
    action = ActionClass(c_yaw=int(np.argmax(p_yaw[0])),
                         c_pitch=int(np.argmax(p_pitch[0])))
    return p_yaw[0], p_pitch[0], action


def _encode_array(a: np.ndarray) -> dict:
    return {"shape": list(a.shape),
            "data": base64.b64encode(a.astype("<f8").tobytes()).decode("ascii")}


def _decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(d["shape"]).copy()


def save_model(model: PolicyModel, path, meta: dict | None = None) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "arch": model.arch,
        "lam": model.lam,
        "weights": {k: _encode_array(v) for k, v in sorted(model.params.items())},
    }
    if meta is not None:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> PolicyModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if str(doc.get("version", "")).split(".")[0] != MODEL_FORMAT_VERSION.split(".")[0]:
        raise ValueError(f"unsupported model format version {doc.get('version')!r}")
    if doc["arch"] != ARCH:
        raise ValueError(f"architecture mismatch: file has {doc['arch']}")
    params = {k: _decode_array(v) for k, v in doc["weights"].items()}
    return PolicyModel(params=params, lam=float(doc["lam"]), arch=dict(doc["arch"]))
