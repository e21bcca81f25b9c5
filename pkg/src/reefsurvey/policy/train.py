"""Behavior-cloning trainer: Adam over the dual-head loss, seeded end to end."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actions import smooth_label
from .dataset import LabeledSample
from .loss import loss_terms
from .net import INPUT_C, INPUT_H, INPUT_W, PolicyModel, backward, forward, init_model


@dataclass
class TrainReport:
    train_loss: float
    val_loss: float | None
    accuracy: dict = field(default_factory=dict)
    epoch_losses: list[float] = field(default_factory=list)


class Adam:
    """Per-parameter adaptive step; the usual first-order defaults."""

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray],
             grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for key in sorted(params):
            g = grads[key]
            self.m[key] = self.beta1 * self.m[key] + (1.0 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1.0 - self.beta2) * g * g
            m_hat = self.m[key] / bc1
            v_hat = self.v[key] / bc2
            params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _prepare(samples: list[LabeledSample]):
    for sample in samples:
        if sample.image.shape != (INPUT_H, INPUT_W, INPUT_C):
            raise ValueError(
                f"sample image shape {sample.image.shape} != "
                f"({INPUT_H}, {INPUT_W}, {INPUT_C})")
    x = np.stack([s.image for s in samples]).astype(np.float64) / 255.0
    t_yaw = np.stack([smooth_label(s.c_yaw) for s in samples])
    t_pitch = np.stack([smooth_label(s.c_pitch) for s in samples])
    classes = np.array([[s.c_yaw, s.c_pitch] for s in samples], dtype=np.int64)
    return x, t_yaw, t_pitch, classes


def _mean_loss(model: PolicyModel, x, t_yaw, t_pitch, batch: int = 256) -> float:
    total = 0.0
    for lo in range(0, x.shape[0], batch):
        hi = min(lo + batch, x.shape[0])
        p_yaw, p_pitch = forward(model, x[lo:hi])
        for i in range(hi - lo):
            total += loss_terms(p_yaw[i], t_yaw[lo + i], model.lam)
            total += loss_terms(p_pitch[i], t_pitch[lo + i], model.lam)
    return total / x.shape[0]


def _accuracies(model: PolicyModel, x, classes, batch: int = 256) -> dict:
    hits = np.zeros(2)
    near = np.zeros(2)
    for lo in range(0, x.shape[0], batch):
        hi = min(lo + batch, x.shape[0])
        p_yaw, p_pitch = forward(model, x[lo:hi])
        pred = np.stack([p_yaw.argmax(axis=1), p_pitch.argmax(axis=1)], axis=1)
        diff = np.abs(pred - classes[lo:hi])
        hits += (diff == 0).sum(axis=0)
        near += (diff <= 1).sum(axis=0)
    n = x.shape[0]
    return {
        "yaw_exact": hits[0] / n, "pitch_exact": hits[1] / n,
        "yaw_within1": near[0] / n, "pitch_within1": near[1] / n,
    }


def train_bc(dataset: list[LabeledSample], epochs: int = 30, lr: float = 1e-3,
             batch: int = 32, seed: int = 0, lam: float = 0.1,
             val: list[LabeledSample] | None = None,
             min_samples: int = 100) -> tuple[PolicyModel, TrainReport]:
    """Clone the labeling behavior in ``dataset``.

    Deterministic for a given seed: initialization and epoch shuffles come
    from one seeded generator. ``min_samples`` guards against accidentally
    tiny training sets; pass a smaller value deliberately for smoke tests.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if len(dataset) < min_samples:
        raise ValueError(f"dataset has {len(dataset)} samples; "
                         f"at least {min_samples} required")
    x, t_yaw, t_pitch, classes = _prepare(dataset)
    rng = np.random.default_rng(seed)
    model = init_model(seed=seed, lam=lam)
    optimizer = Adam(model.params, lr=lr)
    n = x.shape[0]
    epoch_losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        running = 0.0
        for lo in range(0, n, batch):
            idx = order[lo:lo + batch]
            (p_yaw, p_pitch), cache = forward(model, x[idx], want_cache=True)
            grads = backward(model, cache, p_yaw, p_pitch, t_yaw[idx], t_pitch[idx])
            optimizer.step(model.params, grads)
            for i, j in enumerate(idx):
                running += loss_terms(p_yaw[i], t_yaw[j], lam)
                running += loss_terms(p_pitch[i], t_pitch[j], lam)
        epoch_losses.append(running / n)
    report = TrainReport(
        train_loss=_mean_loss(model, x, t_yaw, t_pitch),
        val_loss=None,
        epoch_losses=epoch_losses,
    )
    report.accuracy["train"] = _accuracies(model, x, classes)
    if val:
        vx, v_yaw, v_pitch, v_classes = _prepare(val)
        report.val_loss = _mean_loss(model, vx, v_yaw, v_pitch)
        report.accuracy["val"] = _accuracies(model, vx, v_classes)
    return model, report
