"""Checkpoint archive: one .npz holding both models and optimizer moments.

Key layout (format version 1):
    meta/format_version, meta/architecture_id, meta/iteration, meta/opt_step
    student/<param>, teacher/<param>, opt_m/<param>, opt_v/<param>

Writes are atomic (temp file in the target directory, then rename).
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .optim import AdamState
from .unet import ModelState

FORMAT_VERSION = 1


def save_checkpoint(
    path: str | Path,
    student: ModelState,
    teacher: ModelState,
    opt: AdamState,
    iteration: int,
) -> None:
    path = Path(path)
    arrays: dict[str, np.ndarray] = {
        "meta/format_version": np.asarray(FORMAT_VERSION),
        "meta/architecture_id": np.asarray(student.architecture_id),
        "meta/iteration": np.asarray(iteration),
        "meta/opt_step": np.asarray(opt.step),
    }
    for k, p in student.parameters.items():
        arrays[f"student/{k}"] = p
    for k, p in teacher.parameters.items():
        arrays[f"teacher/{k}"] = p
    for k, p in opt.m.items():
        arrays[f"opt_m/{k}"] = p
    for k, p in opt.v.items():
        arrays[f"opt_v/{k}"] = p
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".npz.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **arrays)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str | Path) -> tuple[ModelState, ModelState, AdamState, int]:
    """Returns (student, teacher, adam_state, iteration)."""
    with np.load(Path(path), allow_pickle=False) as z:
        version = int(z["meta/format_version"])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format version {version}")
        arch = str(z["meta/architecture_id"])
        iteration = int(z["meta/iteration"])
        step = int(z["meta/opt_step"])
        student: dict[str, np.ndarray] = {}
        teacher: dict[str, np.ndarray] = {}
        m: dict[str, np.ndarray] = {}
        v: dict[str, np.ndarray] = {}
        for key in z.files:
            group, _, name = key.partition("/")
            if group == "student":
                student[name] = z[key]
            elif group == "teacher":
                teacher[name] = z[key]
            elif group == "opt_m":
                m[name] = z[key]
            elif group == "opt_v":
                v[name] = z[key]
    return (
        ModelState(parameters=student, architecture_id=arch),
        ModelState(parameters=teacher, architecture_id=arch),
        AdamState(m=m, v=v, step=step),
        iteration,
    )
