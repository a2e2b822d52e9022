"""Masked autoencoder over image patches.

The encoder runs only on the visible tokens; the decoder sees projected
latents at the kept positions and a shared learnable mask token at every
masked position, plus a full-length positional encoding, and predicts all
patches. At reconstruction the received visible patches pass through
verbatim; only masked positions take the decoder's output.

Checkpoint layout (little-endian): magic "TMCK", version u8 = 1, ten u32
config fields (patch_size, channels, enc d_model/depth/heads/d_ff, dec
d_model/depth/heads/d_ff), then every weight tensor in the fixed
``named_parameters`` order as rank u8, dims u32 x rank, float32 data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from . import transformer as tf
from .autograd import Tensor
from .errors import CheckpointError, ContractError, ShapeError
from .masking import MaskSpec, PatchGrid, unpatchify

CHECKPOINT_MAGIC = b"TMCK"
CHECKPOINT_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sB10I")
_MAX_TENSOR_ELEMENTS = 1 << 26


@dataclass(frozen=True)
class TMAEConfig:
    """Architecture of the autoencoder pair.

    The encoder must be at least as deep as the decoder (the decoder is
    the lightweight half). Widths are free; the decoder may even have
    depth 0, reducing it to mask-token + positional-encoding + head.
    """

    patch_size: int = 8
    channels: int = 1
    enc_d_model: int = 64
    enc_depth: int = 4
    enc_heads: int = 4
    enc_d_ff: int = 128
    dec_d_model: int = 32
    dec_depth: int = 2
    dec_heads: int = 4
    dec_d_ff: int = 64

    def __post_init__(self):
        if self.patch_size <= 0:
            raise ContractError(f"patch_size must be positive, got {self.patch_size}")
        if self.channels not in (1, 3):
            raise ContractError(f"channels must be 1 or 3, got {self.channels}")
        if self.enc_depth < 1:
            raise ContractError("encoder needs at least one block")
        if self.dec_depth < 0 or self.enc_depth < self.dec_depth:
            raise ContractError(
                f"encoder depth {self.enc_depth} must be >= decoder depth {self.dec_depth}"
            )
        # validate head splits and widths
        tf.AttentionConfig(self.enc_d_model, self.enc_heads)
        tf.AttentionConfig(self.dec_d_model, self.dec_heads)
        if self.enc_d_ff < self.enc_d_model or self.dec_d_ff < self.dec_d_model:
            raise ContractError("d_ff must be >= d_model on both sides")

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * self.channels

    @property
    def encoder_attention(self) -> tf.AttentionConfig:
        return tf.AttentionConfig(self.enc_d_model, self.enc_heads)

    @property
    def decoder_attention(self) -> tf.AttentionConfig:
        return tf.AttentionConfig(self.dec_d_model, self.dec_heads)

    def as_ints(self) -> tuple[int, ...]:
        return (
            self.patch_size,
            self.channels,
            self.enc_d_model,
            self.enc_depth,
            self.enc_heads,
            self.enc_d_ff,
            self.dec_d_model,
            self.dec_depth,
            self.dec_heads,
            self.dec_d_ff,
        )


class MaskedAutoencoder:
    def __init__(
        self,
        config: TMAEConfig,
        embed: Tensor,
        enc_blocks: list[tf.EncoderBlockParams],
        enc_ln_gain: Tensor,
        enc_ln_bias: Tensor,
        enc2dec_w: Tensor,
        enc2dec_b: Tensor,
        mask_token: Tensor,
        dec_blocks: list[tf.EncoderBlockParams],
        head_w: Tensor,
        head_b: Tensor,
    ):
        self.config = config
        self.embed = embed
        self.enc_blocks = enc_blocks
        self.enc_ln_gain = enc_ln_gain
        self.enc_ln_bias = enc_ln_bias
        self.enc2dec_w = enc2dec_w
        self.enc2dec_b = enc2dec_b
        self.mask_token = mask_token
        self.dec_blocks = dec_blocks
        self.head_w = head_w
        self.head_b = head_b

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        """Every weight tensor in the frozen serialization order."""
        named: list[tuple[str, Tensor]] = [("embed", self.embed)]
        for i, block in enumerate(self.enc_blocks):
            named += [(f"enc{i}.{n}", t) for n, t in block.tensors()]
        named += [
            ("enc_ln_gain", self.enc_ln_gain),
            ("enc_ln_bias", self.enc_ln_bias),
            ("enc2dec_w", self.enc2dec_w),
            ("enc2dec_b", self.enc2dec_b),
            ("mask_token", self.mask_token),
        ]
        for i, block in enumerate(self.dec_blocks):
            named += [(f"dec{i}.{n}", t) for n, t in block.tensors()]
        named += [("head_w", self.head_w), ("head_b", self.head_b)]
        return named

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]


def init_model(config: TMAEConfig, seed: int = 0) -> MaskedAutoencoder:
    """Fresh random weights; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    d_in, d_enc, d_dec = config.patch_dim, config.enc_d_model, config.dec_d_model

    def w(rows, cols):
        return Tensor(rng.normal(0.0, 1.0 / np.sqrt(rows), (rows, cols)), requires_grad=True)

    return MaskedAutoencoder(
        config=config,
        embed=w(d_in, d_enc),
        enc_blocks=[
            tf.init_encoder_block(config.encoder_attention, config.enc_d_ff, rng)
            for _ in range(config.enc_depth)
        ],
        enc_ln_gain=Tensor(np.ones(d_enc), requires_grad=True),
        enc_ln_bias=Tensor(np.zeros(d_enc), requires_grad=True),
        enc2dec_w=w(d_enc, d_dec),
        enc2dec_b=Tensor(np.zeros(d_dec), requires_grad=True),
        mask_token=Tensor(rng.normal(0.0, 0.02, d_dec), requires_grad=True),
        dec_blocks=[
            tf.init_encoder_block(config.decoder_attention, config.dec_d_ff, rng)
            for _ in range(config.dec_depth)
        ],
        head_w=w(d_dec, d_in),
        head_b=Tensor(np.zeros(d_in), requires_grad=True),
    )


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def encode_visible(visible, keep_indices, model: MaskedAutoencoder) -> Tensor:
    """Latents of the visible tokens: embed, add positions, encode, norm."""
    cfg = model.config
    vis = _as_tensor(visible)
    keep = tuple(int(i) for i in keep_indices)
    if vis.ndim != 2 or vis.shape[1] != cfg.patch_dim:
        raise ShapeError(
            f"visible patches must be k x {cfg.patch_dim}, got {vis.shape}"
        )
    if vis.shape[0] != len(keep):
        raise ShapeError(f"{vis.shape[0]} patches for {len(keep)} keep indices")
    if any(i < 0 for i in keep):
        raise ContractError("negative patch index")
    seq = tf.patch_embed(vis, model.embed, positions=keep)
    pe = tf.positional_rows(keep, cfg.enc_d_model)
    seq = tf.TokenSequence(ag.add(seq.tokens, pe), seq.positions)
    for block in model.enc_blocks:
        seq = tf.encoder_block(seq, block)
    return ag.layer_norm(seq.tokens, model.enc_ln_gain, model.enc_ln_bias)


def decode_full(latent: Tensor, spec: MaskSpec, model: MaskedAutoencoder) -> Tensor:
    """Predict every patch from visible latents plus mask tokens."""
    cfg = model.config
    latent = _as_tensor(latent)
    if latent.shape != (spec.keep_count, cfg.enc_d_model):
        raise ShapeError(
            f"latent must be {spec.keep_count} x {cfg.enc_d_model}, got {latent.shape}"
        )
    n = spec.n_patches
    proj = ag.add(ag.matmul(latent, model.enc2dec_w), model.enc2dec_b)
    tokens = ag.scatter_rows(n, spec.keep_indices, proj)
    if spec.masked_indices:
        mask_rows = ag.tile_rows(model.mask_token, len(spec.masked_indices))
        tokens = ag.add(tokens, ag.scatter_rows(n, spec.masked_indices, mask_rows))
    tokens = ag.add(tokens, tf.positional_encoding(n, cfg.dec_d_model))
    seq = tf.TokenSequence(tokens, tuple(range(n)))
    for block in model.dec_blocks:
        seq = tf.encoder_block(seq, block)
    return ag.add(ag.matmul(seq.tokens, model.head_w), model.head_b)


def reconstruct(visible, spec: MaskSpec, grid: PatchGrid, model: MaskedAutoencoder | None) -> np.ndarray:
    """Full image in [0, 1]: received patches verbatim, predictions elsewhere."""
    vis = np.asarray(visible.data if isinstance(visible, Tensor) else visible, dtype=np.float64)
    if vis.shape != (spec.keep_count, grid.patch_dim):
        raise ShapeError(
            f"visible patches must be {spec.keep_count} x {grid.patch_dim}, got {vis.shape}"
        )
    if spec.n_patches != grid.n_patches:
        raise ContractError(
            f"mask is for {spec.n_patches} patches, grid has {grid.n_patches}"
        )
    if not spec.masked_indices:
        return unpatchify(vis, grid)
    if model is None:
        raise ContractError("masked positions present but no model supplied")
    if model.config.patch_dim != grid.patch_dim:
        raise ContractError(
            f"model expects {model.config.patch_dim}-dim patches, grid has {grid.patch_dim}"
        )
    latent = encode_visible(vis, spec.keep_indices, model)
    pred = decode_full(latent, spec, model).data
    full = np.empty((spec.n_patches, grid.patch_dim))
    full[list(spec.masked_indices)] = np.clip(pred[list(spec.masked_indices)], 0.0, 1.0)
    full[list(spec.keep_indices)] = vis
    return unpatchify(full, grid)


def masked_mse(pred: Tensor, target, spec: MaskSpec) -> Tensor:
    """Mean squared error over the masked rows only (differentiable)."""
    target = _as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"pred {pred.shape} vs target {target.shape}")
    if not spec.masked_indices:
        raise ContractError("masked_mse undefined for an empty masked set")
    idx = list(spec.masked_indices)
    diff = ag.sub(ag.gather_rows(pred, idx), ag.gather_rows(target, idx))
    return ag.mean_all(ag.mul(diff, diff))


def forward_loss(model: MaskedAutoencoder, patches, spec: MaskSpec) -> Tensor:
    """Training objective for one image's patch matrix."""
    target = _as_tensor(patches)
    vis = ag.gather_rows(target, list(spec.keep_indices))
    latent = encode_visible(vis, spec.keep_indices, model)
    pred = decode_full(latent, spec, model)
    return masked_mse(pred, target, spec)


# -- checkpoint serialization ------------------------------------------------


def save_bytes(model: MaskedAutoencoder) -> bytes:
    out = bytearray(
        _CKPT_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, *model.config.as_ints())
    )
    for _, tensor in model.named_parameters():
        arr = np.ascontiguousarray(tensor.data, dtype=np.float32)
        out.append(arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.tobytes()
    return bytes(out)


def load_bytes(blob: bytes) -> MaskedAutoencoder:
    if len(blob) < _CKPT_HEADER.size:
        raise CheckpointError(f"checkpoint header truncated at {len(blob)} bytes")
    magic, version, *fields = _CKPT_HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        config = TMAEConfig(*fields)
    except ContractError as exc:
        raise CheckpointError(f"invalid checkpoint config: {exc}") from exc

    pos = _CKPT_HEADER.size
    tensors: list[Tensor] = []
    while pos < len(blob):
        rank = blob[pos]
        pos += 1
        if rank == 0 or rank > 2:
            raise CheckpointError(f"bad tensor rank {rank} at byte {pos - 1}")
        if pos + 4 * rank > len(blob):
            raise CheckpointError(f"tensor dims truncated at byte {pos}")
        dims = struct.unpack_from(f"<{rank}I", blob, pos)
        pos += 4 * rank
        count = int(np.prod(dims, dtype=np.int64))
        if count <= 0 or count > _MAX_TENSOR_ELEMENTS:
            raise CheckpointError(f"implausible tensor shape {dims} at byte {pos}")
        if pos + 4 * count > len(blob):
            raise CheckpointError(f"tensor data truncated at byte {pos}")
        data = np.frombuffer(blob, dtype="<f4", count=count, offset=pos)
        pos += 4 * count
        tensors.append(
            Tensor(data.astype(np.float64).reshape(dims), requires_grad=True)
        )
    return _assemble(config, tensors)


def _assemble(config: TMAEConfig, tensors: list[Tensor]) -> MaskedAutoencoder:
    """Rebuild the model from the flat tensor list, validating every shape."""
    template = init_model(config, seed=0)
    expected = template.named_parameters()
    if len(tensors) != len(expected):
        raise CheckpointError(
            f"checkpoint holds {len(tensors)} tensors, config needs {len(expected)}"
        )
    for (name, slot), tensor in zip(expected, tensors):
        if tensor.shape != slot.shape:
            raise CheckpointError(
                f"tensor {name} has shape {tensor.shape}, expected {slot.shape}"
            )
        slot.data = tensor.data
    return template


def save_checkpoint(model: MaskedAutoencoder, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_bytes(model))


def load_checkpoint(path) -> MaskedAutoencoder:
    with open(path, "rb") as fh:
        return load_bytes(fh.read())
