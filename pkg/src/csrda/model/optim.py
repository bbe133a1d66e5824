"""Adam optimizer with bias correction, producing new states (no mutation)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericsError, ShapeError
from .unet import ModelState


@dataclass(frozen=True)
class OptimConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """First/second moment estimates plus the step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_model(cls, state: ModelState) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in state.parameters.items()},
            v={k: np.zeros_like(p) for k, p in state.parameters.items()},
            step=0,
        )


def optimizer_step(
    state: ModelState,
    gradients: dict[str, np.ndarray],
    opt: AdamState,
    config: OptimConfig,
) -> tuple[ModelState, AdamState]:
    """One Adam update. Returns the updated model and moment states."""
    b1, b2, eps = config.beta1, config.beta2, config.eps
    t = opt.step + 1
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name, p in state.parameters.items():
        g = gradients[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name!r}")
        if not np.isfinite(g).all():
            raise NumericsError(f"non-finite gradient for parameter {name!r}")
        m = b1 * opt.m[name] + (1.0 - b1) * g
        v = b2 * opt.v[name] + (1.0 - b2) * (g * g)
        update = config.learning_rate * (m / c1) / (np.sqrt(v / c2) + eps)
        new_params[name] = p - update.astype(p.dtype)
        new_m[name] = m
        new_v[name] = v
    return (
        ModelState(parameters=new_params, architecture_id=state.architecture_id),
        AdamState(m=new_m, v=new_v, step=t),
    )
