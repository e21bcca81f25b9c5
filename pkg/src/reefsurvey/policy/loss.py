"""Dual-head training loss: weighted cross-entropy plus forward KL.

Per head, L = lam * CCE(t, p) + (1 - lam) * KL(t || p) with
CCE(t, p) = -sum t_i log p_i and KL(t || p) = sum t_i log(t_i / p_i)
(0 log 0 = 0). The two heads are summed so a wrong prediction on one axis
never penalizes the other. Because CCE = H(t) + KL, the gradient with
respect to the prediction is -t/p for every lam.
"""

from __future__ import annotations

import numpy as np

from .actions import NUM_CLASSES

DEFAULT_LAMBDA = 0.1
LOG_CLAMP = 1e-12
SIMPLEX_TOL = 1e-9


def _check_simplex(v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (NUM_CLASSES,):
        raise ValueError(f"{name} must have shape ({NUM_CLASSES},), got {v.shape}")
    if np.any(v < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(float(v.sum()) - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"{name} does not sum to 1 (sum={v.sum()!r})")
    return v


def entropy(t: np.ndarray) -> float:
    """H(t) in nats, with 0 log 0 = 0."""
    t = np.asarray(t, dtype=np.float64)
    nz = t > 0
    return float(-np.sum(t[nz] * np.log(t[nz])))


def cross_entropy(t: np.ndarray, p: np.ndarray) -> float:
    p = np.maximum(np.asarray(p, dtype=np.float64), LOG_CLAMP)
    t = np.asarray(t, dtype=np.float64)
    nz = t > 0
    return float(-np.sum(t[nz] * np.log(p[nz])))


def kl_divergence(t: np.ndarray, p: np.ndarray) -> float:
    """Forward KL(t || p); exactly 0 when p equals t entrywise."""
    p = np.maximum(np.asarray(p, dtype=np.float64), LOG_CLAMP)
    t = np.asarray(t, dtype=np.float64)
    nz = t > 0
    return float(np.sum(t[nz] * np.log(t[nz] / p[nz])))


def loss_terms(pred: np.ndarray, target: np.ndarray,
               lam: float = DEFAULT_LAMBDA) -> float:
    """Single-head loss without simplex validation (differentiable core)."""
    return lam * cross_entropy(target, pred) + (1.0 - lam) * kl_divergence(target, pred)


def loss(pred_yaw: np.ndarray, pred_pitch: np.ndarray,
         target_yaw: np.ndarray, target_pitch: np.ndarray,
         lam: float = DEFAULT_LAMBDA) -> float:
    """Total loss over both heads; inputs must be valid distributions."""
    pred_yaw = _check_simplex(pred_yaw, "pred_yaw")
    pred_pitch = _check_simplex(pred_pitch, "pred_pitch")
    target_yaw = _check_simplex(target_yaw, "target_yaw")
    target_pitch = _check_simplex(target_pitch, "target_pitch")
    return loss_terms(pred_yaw, target_yaw, lam) + loss_terms(pred_pitch, target_pitch, lam)


def loss_gradient(pred: np.ndarray, target: np.ndarray,
                  lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """d(loss_terms)/d(pred) for one head.

    Written as the lam-weighted sum of both terms' gradients even though
    they coincide, so the lam-invariance is exercised rather than assumed.
    """
    p = np.maximum(np.asarray(pred, dtype=np.float64), LOG_CLAMP)
    t = np.asarray(target, dtype=np.float64)
    grad_cce = -t / p
    grad_kl = -t / p
    return lam * grad_cce + (1.0 - lam) * grad_kl
