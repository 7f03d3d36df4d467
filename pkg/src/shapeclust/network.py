"""Causal convolutional encoder/decoder over fixed-grid candidate views.

The encoder stacks causal dilated convolutions (dilations 1, 2, 4, ...)
with leaky-rectifier activations and projects the final time step's hidden
state to an embedding. The decoder mirrors it: a linear layer expands the
embedding to a short multichannel signal, which nearest-neighbor
upsampling + convolution stages grow back to the grid length, followed by
a linear 1x1 output head.

Effective encoder depth is capped at ceil(log2(G)) + 1 so the receptive
field covers the grid without dead layers.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .autodiff import Tensor, causal_conv1d, conv1d_forward, leaky_relu, upsample2

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ArchConfig:
    grid_len: int = 32
    channels: int = 40
    kernel: int = 3
    depth: int = 10
    embed_dim: int = 16
    leaky_slope: float = 0.01

    def __post_init__(self):
        if self.grid_len < 2 or self.channels < 1 or self.kernel < 1:
            raise ValueError("invalid architecture configuration")
        if self.depth < 1 or self.embed_dim < 1:
            raise ValueError("invalid architecture configuration")

    @property
    def effective_depth(self) -> int:
        return min(self.depth, int(math.ceil(math.log2(self.grid_len))) + 1)

    @property
    def upsample_stages(self) -> int:
        for u in (3, 2, 1):
            if self.grid_len % (1 << u) == 0 and self.grid_len >> u >= 2:
                return u
        return 0

    @property
    def base_len(self) -> int:
        return self.grid_len >> self.upsample_stages


def _kaiming_uniform(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_params(config: ArchConfig, seed: int = 0) -> dict[str, Tensor]:
    """Seeded Kaiming-uniform weights, zero biases, in a fixed key order."""
    rng = np.random.default_rng(seed)
    c, k, e = config.channels, config.kernel, config.embed_dim
    params: dict[str, Tensor] = {}

    def add(name: str, shape: tuple, fan_in: int):
        params[name] = Tensor(_kaiming_uniform(rng, shape, fan_in), requires_grad=True)
        params[name + ".b"] = Tensor(np.zeros(shape[0]), requires_grad=True)

    in_ch = 1
    for i in range(config.effective_depth):
        add(f"enc.conv{i}", (c, in_ch, k), in_ch * k)
        in_ch = c
    params["enc.proj"] = Tensor(_kaiming_uniform(rng, (c, e), c), requires_grad=True)
    params["enc.proj.b"] = Tensor(np.zeros(e), requires_grad=True)

    params["dec.in"] = Tensor(
        _kaiming_uniform(rng, (e, c * config.base_len), e), requires_grad=True
    )
    params["dec.in.b"] = Tensor(np.zeros(c * config.base_len), requires_grad=True)
    for i in range(config.upsample_stages):
        add(f"dec.conv{i}", (c, c, k), c * k)
    add("dec.head", (1, c, 1), c)
    return params


def _check_finite(arr: np.ndarray, where: str):
    if not np.isfinite(arr).all():
        raise FloatingPointError(f"non-finite activation in {where}")


def encode(params: dict[str, Tensor], config: ArchConfig, x) -> Tensor:
    """Batch of grid views (B, G) -> embeddings (B, E), differentiable."""
    x = x if isinstance(x, Tensor) else Tensor(x)
    if x.data.ndim != 2 or x.data.shape[1] != config.grid_len:
        raise ValueError(f"encode expects (B, {config.grid_len}), got {x.data.shape}")
    h = x.reshape(x.data.shape[0], 1, config.grid_len)
    for i in range(config.effective_depth):
        h = causal_conv1d(h, params[f"enc.conv{i}"], params[f"enc.conv{i}.b"], 1 << i)
        h = leaky_relu(h, config.leaky_slope)
        _check_finite(h.data, f"encoder layer {i}")
    last = h[:, :, -1]
    emb = last @ params["enc.proj"] + params["enc.proj.b"]
    _check_finite(emb.data, "encoder projection")
    return emb


def decode(params: dict[str, Tensor], config: ArchConfig, embeddings) -> Tensor:
    """Embeddings (B, E) -> signals (B, G), differentiable."""
    h = embeddings if isinstance(embeddings, Tensor) else Tensor(embeddings)
    z = h @ params["dec.in"] + params["dec.in.b"]
    z = z.reshape(z.data.shape[0], config.channels, config.base_len)
    for i in range(config.upsample_stages):
        z = upsample2(z)
        z = causal_conv1d(z, params[f"dec.conv{i}"], params[f"dec.conv{i}.b"], 1)
        z = leaky_relu(z, config.leaky_slope)
        _check_finite(z.data, f"decoder stage {i}")
    out = causal_conv1d(z, params["dec.head"], params["dec.head.b"], 1)
    _check_finite(out.data, "decoder head")
    return out.reshape(out.data.shape[0], config.grid_len)


# -- fast (graph-free) forward passes ----------------------------------


def _leaky_np(x: np.ndarray, slope: float) -> np.ndarray:
    return np.maximum(x, slope * x)


def encoder_layer_outputs(
    params: dict[str, Tensor], config: ArchConfig, x: np.ndarray
) -> list[np.ndarray]:
    """Per-layer activations of the encoder stack (no graph). For probes."""
    h = np.asarray(x, dtype=np.float64).reshape(len(x), 1, config.grid_len)
    outs = []
    for i in range(config.effective_depth):
        h = conv1d_forward(
            h, params[f"enc.conv{i}"].data, params[f"enc.conv{i}.b"].data, 1 << i
        )
        h = _leaky_np(h, config.leaky_slope)
        outs.append(h)
    return outs


def encode_array(
    params: dict[str, Tensor], config: ArchConfig, x: np.ndarray, chunk: int = 512
) -> np.ndarray:
    """Graph-free encode for large pools; same math as :func:`encode`."""
    x = np.asarray(x, dtype=np.float64)
    pieces = []
    for lo in range(0, len(x), chunk):
        h = encoder_layer_outputs(params, config, x[lo : lo + chunk])[-1]
        last = h[:, :, -1]
        pieces.append(last @ params["enc.proj"].data + params["enc.proj.b"].data)
    return np.concatenate(pieces, axis=0)


def decode_array(
    params: dict[str, Tensor], config: ArchConfig, embeddings: np.ndarray, chunk: int = 512
) -> np.ndarray:
    embeddings = np.asarray(embeddings, dtype=np.float64)
    pieces = []
    for lo in range(0, len(embeddings), chunk):
        z = embeddings[lo : lo + chunk] @ params["dec.in"].data + params["dec.in.b"].data
        z = z.reshape(len(z), config.channels, config.base_len)
        for i in range(config.upsample_stages):
            z = np.repeat(z, 2, axis=-1)
            z = conv1d_forward(
                z, params[f"dec.conv{i}"].data, params[f"dec.conv{i}.b"].data, 1
            )
            z = _leaky_np(z, config.leaky_slope)
        out = conv1d_forward(z, params["dec.head"].data, params["dec.head.b"].data, 1)
        pieces.append(out.reshape(len(out), config.grid_len))
    return np.concatenate(pieces, axis=0)


# -- optimization and persistence ---------------------------------------


def sgd_step(params: dict[str, Tensor], lr: float) -> None:
    """w <- w - lr * g for every parameter with a gradient."""
    for t in params.values():
        if t.grad is not None:
            t.data -= lr * t.grad


def zero_grad(params: dict[str, Tensor]) -> None:
    for t in params.values():
        t.grad = None


def save_checkpoint(params: dict[str, Tensor], config: ArchConfig, path: str) -> None:
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "arch": asdict(config),
        "params": {
            name: {"shape": list(t.data.shape), "values": t.data.ravel().tolist()}
            for name, t in params.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_checkpoint(path: str) -> tuple[dict[str, Tensor], ArchConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('format_version')}")
    config = ArchConfig(**payload["arch"])
    params = {
        name: Tensor(
            np.array(entry["values"], dtype=np.float64).reshape(entry["shape"]),
            requires_grad=True,
        )
        for name, entry in payload["params"].items()
    }
    return params, config
