"""Binary-segmentation backbones behind a pluggable architecture registry.

The registry maps ``architecture_id`` strings to implementations exposing
``init_params`` / ``forward`` / ``backward``. The default backbone is a
4-level encoder-decoder (channels 16/32/64/128, 3x3 convs, group norm, SiLU,
2x2 average pooling down, x2 bilinear up, skip connections, single-logit
head), roughly 500K parameters. ``micro5`` is a 5-parameter net used by tiny
gradient-check tests. External backbones can be plugged in by registering an
adapter that reduces their output to a single final logit map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import ImageTensor, SoftMask
from ..errors import NumericsError, ShapeError
from . import layers

GROUPS = 8


@dataclass
class ModelState:
    """Named parameter arrays plus the architecture they belong to."""

    parameters: dict[str, np.ndarray]
    architecture_id: str

    @property
    def param_count(self) -> int:
        return int(sum(p.size for p in self.parameters.values()))

    @property
    def dtype(self):
        return next(iter(self.parameters.values())).dtype

    def copy(self) -> "ModelState":
        return ModelState(
            parameters={k: v.copy() for k, v in self.parameters.items()},
            architecture_id=self.architecture_id,
        )

    def check_finite(self) -> None:
        for name, p in self.parameters.items():
            if not np.isfinite(p).all():
                raise NumericsError(f"non-finite parameter {name!r}")


@dataclass(frozen=True)
class Prediction:
    """Logit map and its sigmoid, for one image."""

    logits: np.ndarray
    probabilities: SoftMask

    @classmethod
    def from_logits(cls, logits: np.ndarray) -> "Prediction":
        return cls(logits=logits, probabilities=SoftMask(layers._sigmoid(logits)))


# -- default encoder-decoder --------------------------------------------------

_BLOCKS = [
    ("enc1", 3, 16),
    ("enc2", 16, 32),
    ("enc3", 32, 64),
    ("bott", 64, 128),
    ("dec3", 128 + 64, 64),
    ("dec2", 64 + 32, 32),
    ("dec1", 32 + 16, 16),
]


def _conv_init(rng, cin: int, cout: int, dtype) -> np.ndarray:
    bound = np.sqrt(6.0 / (9 * cin))
    return rng.uniform(-bound, bound, size=(3, 3, cin, cout)).astype(dtype)


class UNetSmall:
    id = "unet16"

    def init_params(self, seed: int, dtype=np.float32) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        p: dict[str, np.ndarray] = {}
        for name, cin, cout in _BLOCKS:
            p[f"{name}.c1.w"] = _conv_init(rng, cin, cout, dtype)
            p[f"{name}.c1.b"] = np.zeros(cout, dtype=dtype)
            p[f"{name}.n1.g"] = np.ones(cout, dtype=dtype)
            p[f"{name}.n1.b"] = np.zeros(cout, dtype=dtype)
            p[f"{name}.c2.w"] = _conv_init(rng, cout, cout, dtype)
            p[f"{name}.c2.b"] = np.zeros(cout, dtype=dtype)
            p[f"{name}.n2.g"] = np.ones(cout, dtype=dtype)
            p[f"{name}.n2.b"] = np.zeros(cout, dtype=dtype)
        # zero head: untrained output is exactly 0.5 probability everywhere
        p["head.w"] = np.zeros((3, 3, 16, 1), dtype=dtype)
        p["head.b"] = np.zeros(1, dtype=dtype)
        return p

    def _block(self, p, name, x):
        h1 = layers.conv3x3(x, p[f"{name}.c1.w"], p[f"{name}.c1.b"])
        n1, gc1 = layers.groupnorm(h1, p[f"{name}.n1.g"], p[f"{name}.n1.b"], GROUPS)
        a1 = layers.silu(n1)
        h2 = layers.conv3x3(a1, p[f"{name}.c2.w"], p[f"{name}.c2.b"])
        n2, gc2 = layers.groupnorm(h2, p[f"{name}.n2.g"], p[f"{name}.n2.b"], GROUPS)
        out = layers.silu(n2)
        return out, (x, gc1, n1, a1, gc2, n2)

    def _block_bwd(self, p, name, cache, dy, grads):
        x, gc1, n1, a1, gc2, n2 = cache
        d = layers.silu_bwd(n2, dy)
        d, grads[f"{name}.n2.g"], grads[f"{name}.n2.b"] = layers.groupnorm_bwd(
            gc2, p[f"{name}.n2.g"], GROUPS, d
        )
        d, grads[f"{name}.c2.w"], grads[f"{name}.c2.b"] = layers.conv3x3_bwd(
            a1, p[f"{name}.c2.w"], d
        )
        d = layers.silu_bwd(n1, d)
        d, grads[f"{name}.n1.g"], grads[f"{name}.n1.b"] = layers.groupnorm_bwd(
            gc1, p[f"{name}.n1.g"], GROUPS, d
        )
        d, grads[f"{name}.c1.w"], grads[f"{name}.c1.b"] = layers.conv3x3_bwd(
            x, p[f"{name}.c1.w"], d
        )
        return d

    def forward(self, p, x, with_cache: bool = False):
        s1, c_e1 = self._block(p, "enc1", x)
        s2, c_e2 = self._block(p, "enc2", layers.avgpool2(s1))
        s3, c_e3 = self._block(p, "enc3", layers.avgpool2(s2))
        bt, c_bt = self._block(p, "bott", layers.avgpool2(s3))
        d3, c_d3 = self._block(p, "dec3", np.concatenate([layers.upsample2(bt), s3], axis=3))
        d2, c_d2 = self._block(p, "dec2", np.concatenate([layers.upsample2(d3), s2], axis=3))
        d1, c_d1 = self._block(p, "dec1", np.concatenate([layers.upsample2(d2), s1], axis=3))
        logits = layers.conv3x3(d1, p["head.w"], p["head.b"])[..., 0]
        cache = (c_e1, c_e2, c_e3, c_bt, c_d3, c_d2, c_d1, d1) if with_cache else None
        return logits, cache

    def backward(self, p, cache, dlogits):
        c_e1, c_e2, c_e3, c_bt, c_d3, c_d2, c_d1, d1 = cache
        grads: dict[str, np.ndarray] = {}
        d, grads["head.w"], grads["head.b"] = layers.conv3x3_bwd(
            d1, p["head.w"], dlogits[..., None]
        )
        dcat1 = self._block_bwd(p, "dec1", c_d1, d, grads)
        dd2, ds1 = dcat1[..., :32], dcat1[..., 32:]
        dcat2 = self._block_bwd(p, "dec2", c_d2, layers.upsample2_bwd(dd2), grads)
        dd3, ds2 = dcat2[..., :64], dcat2[..., 64:]
        dcat3 = self._block_bwd(p, "dec3", c_d3, layers.upsample2_bwd(dd3), grads)
        dbt, ds3 = dcat3[..., :128], dcat3[..., 128:]
        dp3 = self._block_bwd(p, "bott", c_bt, layers.upsample2_bwd(dbt), grads)
        ds3 = ds3 + layers.avgpool2_bwd(dp3)
        dp2 = self._block_bwd(p, "enc3", c_e3, ds3, grads)
        ds2 = ds2 + layers.avgpool2_bwd(dp2)
        dp1 = self._block_bwd(p, "enc2", c_e2, ds2, grads)
        ds1 = ds1 + layers.avgpool2_bwd(dp1)
        self._block_bwd(p, "enc1", c_e1, ds1, grads)
        return grads


class MicroNet:
    """5-parameter net (1x1 projection + output gain) for tiny grad checks."""

    id = "micro5"

    def init_params(self, seed: int, dtype=np.float32) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        return {
            "proj.w": rng.normal(0.0, 0.5, size=3).astype(dtype),
            "proj.b": np.zeros(1, dtype=dtype),
            "gain": np.ones(1, dtype=dtype),
        }

    def forward(self, p, x, with_cache: bool = False):
        z = x @ p["proj.w"] + p["proj.b"][0]
        logits = p["gain"][0] * z
        return logits, ((x, z) if with_cache else None)

    def backward(self, p, cache, dlogits):
        x, z = cache
        dz = dlogits * p["gain"][0]
        return {
            "proj.w": np.einsum("bhw,bhwc->c", dz, x),
            "proj.b": np.asarray([dz.sum()], dtype=x.dtype),
            "gain": np.asarray([(dlogits * z).sum()], dtype=x.dtype),
        }


REGISTRY = {UNetSmall.id: UNetSmall(), MicroNet.id: MicroNet()}


def register(arch) -> None:
    """Plug in an external backbone adapter (must emit one logit map)."""
    REGISTRY[arch.id] = arch


def init_model(architecture_id: str, seed: int, dtype=np.float32) -> ModelState:
    arch = REGISTRY[architecture_id]
    return ModelState(parameters=arch.init_params(seed, dtype), architecture_id=architecture_id)


def forward_batch(state: ModelState, x: np.ndarray, with_cache: bool = False):
    """x: (B,H,W,3) in the model dtype. Returns (logits (B,H,W), cache)."""
    state.check_finite()
    return REGISTRY[state.architecture_id].forward(state.parameters, x, with_cache)


def backward_batch(state: ModelState, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    return REGISTRY[state.architecture_id].backward(state.parameters, cache, dlogits)


def _to_nhwc(image: ImageTensor, dtype) -> np.ndarray:
    return np.ascontiguousarray(image.pixels.transpose(1, 2, 0), dtype=dtype)[None]


def forward(state: ModelState, image: ImageTensor) -> Prediction:
    """Run one image through the model."""
    logits, _ = forward_batch(state, _to_nhwc(image, state.dtype))
    return Prediction.from_logits(logits[0].astype(np.float64))


def backward(state: ModelState, image: ImageTensor, upstream: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients of a loss whose logit-gradient is ``upstream``."""
    x = _to_nhwc(image, state.dtype)
    if upstream.shape != x.shape[1:3]:
        raise ShapeError(f"upstream shape {upstream.shape} != logits shape {x.shape[1:3]}")
    logits, cache = forward_batch(state, x, with_cache=True)
    return backward_batch(state, cache, upstream.astype(state.dtype)[None])
