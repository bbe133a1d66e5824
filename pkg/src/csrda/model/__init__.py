from .checkpoint import load_checkpoint, save_checkpoint
from .optim import AdamState, OptimConfig, optimizer_step
from .unet import (
    ModelState,
    Prediction,
    backward,
    backward_batch,
    forward,
    forward_batch,
    init_model,
    register,
)

__all__ = [
    "AdamState",
    "ModelState",
    "OptimConfig",
    "Prediction",
    "backward",
    "backward_batch",
    "forward",
    "forward_batch",
    "init_model",
    "load_checkpoint",
    "optimizer_step",
    "register",
    "save_checkpoint",
]
