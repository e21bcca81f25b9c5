"""Action space, expert labeler, behavior-cloning network and trainer."""

from .actions import ActionClass, decode_action, smooth_label
from .dataset import LabeledSample, load_dataset, save_dataset
from .expert import ExpertConfig, expert_policy
from .loss import loss, loss_gradient
from .net import PolicyModel, load_model, predict, save_model
from .train import TrainReport, train_bc

__all__ = [
    "ActionClass", "decode_action", "smooth_label",
    "ExpertConfig", "expert_policy",
    "loss", "loss_gradient",
    "PolicyModel", "predict", "save_model", "load_model",
    "TrainReport", "train_bc",
    "LabeledSample", "save_dataset", "load_dataset",
]
