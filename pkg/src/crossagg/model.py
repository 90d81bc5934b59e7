"""Model assembly: attention blocks, residual groups, task heads, parameter
initialization/counting, and bit-exact weight serialization.

The graph is: a 3x3 convolution lifts the input image to C channels; a stack
of residual groups (each: blocks_per_group attention blocks, every odd block
shifted, followed by a 3x3 convolution and a group-level residual) plus one
aggregation convolution forms the deep feature, added back to the shallow
feature; a task head reconstructs the output. Super-resolution uses a staged
sub-pixel head (conv to head_width, conv + pixel shuffle per stage, conv to
the output channels); artifact reduction uses a single channel-adjusting
convolution plus a global residual from the input.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .attention import POS_HIDDEN, AttentionParams, PositionBiasParams, rwin_self_attention
from .windowing import WindowSpec

__all__ = [
    "ModelConfig",
    "ParamStore",
    "ConfigError",
    "WeightFormatError",
    "parameter_schema",
    "init_params",
    "count_params",
    "block_params",
    "catb_forward",
    "residual_group_forward",
    "cat_forward",
    "save_weights",
    "load_weights",
    "parse_config",
    "parse_config_text",
    "format_config",
    "preset_config",
    "PRESET_NAMES",
]


class ConfigError(ValueError):
    """Malformed or inconsistent model configuration."""


class WeightFormatError(ValueError):
    """Malformed, truncated, or mismatching weight file."""


TASK_SR = "sr"
TASK_CAR = "car"


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters.

    ``num_groups`` may be zero for accounting edge cases; building or running
    an actual model requires at least one group.
    """

    task: str
    channels: int
    num_groups: int
    blocks_per_group: int
    num_heads: int
    mlp_ratio: float
    window_kind: str  # "regular" | "axial"
    scale: int = 1
    in_channels: int = 3
    out_channels: int = 3
    window_height: int = 0
    window_width: int = 0
    axial_lengths: tuple[int, ...] = ()
    use_lcm: bool = True
    head_width: int = 64

    def __post_init__(self):
        if self.task not in (TASK_SR, TASK_CAR):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.task == TASK_SR and self.scale not in (2, 3, 4):
            raise ConfigError(f"super-resolution scale must be 2, 3, or 4, got {self.scale}")
        if self.channels < 1 or self.num_groups < 0 or self.blocks_per_group < 1:
            raise ConfigError("channels and blocks_per_group must be positive")
        if self.num_heads < 2 or self.num_heads % 2 != 0:
            raise ConfigError(f"head count must be even and >= 2, got {self.num_heads}")
        if self.channels % self.num_heads != 0:
            raise ConfigError(f"channels {self.channels} not divisible by {self.num_heads} heads")
        if self.mlp_ratio <= 0:
            raise ConfigError("mlp_ratio must be positive")
        if self.head_width < 1 or self.in_channels < 1 or self.out_channels < 1:
            raise ConfigError("channel counts must be positive")
        if self.window_kind == "regular":
            if self.window_height < 1 or self.window_width < 1:
                raise ConfigError("regular windows need window_height and window_width >= 1")
        elif self.window_kind == "axial":
            if len(self.axial_lengths) != self.num_groups:
                raise ConfigError(
                    f"axial_lengths has {len(self.axial_lengths)} entries for "
                    f"{self.num_groups} groups"
                )
            if any(s < 1 for s in self.axial_lengths):
                raise ConfigError("axial lengths must be >= 1")
        else:
            raise ConfigError(f"unknown window kind {self.window_kind!r}")

    @property
    def mlp_hidden(self) -> int:
        return int(round(self.mlp_ratio * self.channels))

    def spec_for_group(self, group: int) -> WindowSpec:
        if self.window_kind == "regular":
            return WindowSpec.regular(self.window_height, self.window_width)
        return WindowSpec.axial(self.axial_lengths[group])

    def upsample_stages(self) -> tuple[int, ...]:
        if self.task != TASK_SR:
            return ()
        return {2: (2,), 3: (3,), 4: (2, 2)}[self.scale]


class ParamStore:
    """Ordered, immutable-by-convention map of named parameter tensors.

    Iteration order is lexicographic in the hierarchical names; every tensor
    carries a trainability flag (informational; all built-in parameters are
    trainable).
    """

    def __init__(self, entries: dict[str, Tensor], trainable: dict[str, bool] | None = None):
        names = sorted(entries)
        if len(names) != len(set(names)):
            raise ValueError("duplicate parameter names")
        self._entries = {name: entries[name] for name in names}
        self._trainable = {name: True for name in names}
        if trainable:
            self._trainable.update({k: bool(v) for k, v in trainable.items() if k in self._entries})

    def __getitem__(self, name: str) -> Tensor:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list[str]:
        return list(self._entries)

    def items(self):
        return self._entries.items()

    def as_dict(self) -> dict[str, Tensor]:
        return dict(self._entries)

    def trainable(self, name: str) -> bool:
        return self._trainable[name]

    @property
    def dtype(self):
        return next(iter(self._entries.values())).dtype

    def total_elements(self) -> int:
        return sum(t.size for t in self._entries.values())

    def with_values(self, updates: dict[str, Tensor]) -> "ParamStore":
        merged = dict(self._entries)
        for name, t in updates.items():
            if name not in merged:
                raise KeyError(f"unknown parameter '{name}'")
            if t.shape != merged[name].shape:
                raise ValueError(f"shape change for '{name}': {merged[name].shape} -> {t.shape}")
            merged[name] = t
        return ParamStore(merged, dict(self._trainable))


# ---------------------------------------------------------------------------
# Parameter schema
# ---------------------------------------------------------------------------

_NORMAL, _ZEROS, _ONES = "normal", "zeros", "ones"


def parameter_schema(config: ModelConfig) -> list[tuple[str, tuple[int, ...], str]]:
    """Every parameter the model owns: (name, shape, init kind)."""
    c = config.channels
    hidden = config.mlp_hidden
    schema: list[tuple[str, tuple[int, ...], str]] = [
        ("shallow.conv.weight", (3, 3, config.in_channels, c), _NORMAL),
        ("shallow.conv.bias", (c,), _ZEROS),
        ("posbias.fc1.weight", (2, POS_HIDDEN), _NORMAL),
        ("posbias.fc1.bias", (POS_HIDDEN,), _ZEROS),
        ("posbias.fc2.weight", (POS_HIDDEN, POS_HIDDEN), _NORMAL),
        ("posbias.fc2.bias", (POS_HIDDEN,), _ZEROS),
        ("posbias.fc3.weight", (POS_HIDDEN, config.num_heads), _NORMAL),
        ("posbias.fc3.bias", (config.num_heads,), _ZEROS),
    ]
    for i in range(config.num_groups):
        for j in range(config.blocks_per_group):
            p = f"body.group{i}.block{j}"
            schema += [
                (f"{p}.norm1.gamma", (c,), _ONES),
                (f"{p}.norm1.beta", (c,), _ZEROS),
                (f"{p}.attn.qkv.weight", (c, 3 * c), _NORMAL),
                (f"{p}.attn.qkv.bias", (3 * c,), _ZEROS),
                (f"{p}.attn.proj.weight", (c, c), _NORMAL),
                (f"{p}.attn.proj.bias", (c,), _ZEROS),
            ]
            if config.use_lcm:
                schema += [
                    (f"{p}.attn.lcm.weight", (3, 3, c, 1), _NORMAL),
                    (f"{p}.attn.lcm.bias", (c,), _ZEROS),
                ]
            schema += [
                (f"{p}.norm2.gamma", (c,), _ONES),
                (f"{p}.norm2.beta", (c,), _ZEROS),
                (f"{p}.mlp.fc1.weight", (c, hidden), _NORMAL),
                (f"{p}.mlp.fc1.bias", (hidden,), _ZEROS),
                (f"{p}.mlp.fc2.weight", (hidden, c), _NORMAL),
                (f"{p}.mlp.fc2.bias", (c,), _ZEROS),
            ]
        schema += [
            (f"body.group{i}.conv.weight", (3, 3, c, c), _NORMAL),
            (f"body.group{i}.conv.bias", (c,), _ZEROS),
        ]
    schema += [
        ("body.conv.weight", (3, 3, c, c), _NORMAL),
        ("body.conv.bias", (c,), _ZEROS),
    ]
    if config.task == TASK_SR:
        hw = config.head_width
        schema += [
            ("head.pre.weight", (3, 3, c, hw), _NORMAL),
            ("head.pre.bias", (hw,), _ZEROS),
        ]
        for s, r in enumerate(config.upsample_stages()):
            schema += [
                (f"head.up{s}.weight", (3, 3, hw, hw * r * r), _NORMAL),
                (f"head.up{s}.bias", (hw * r * r,), _ZEROS),
            ]
        schema += [
            ("head.post.weight", (3, 3, hw, config.out_channels), _NORMAL),
            ("head.post.bias", (config.out_channels,), _ZEROS),
        ]
    else:
        schema += [
            ("head.conv.weight", (3, 3, c, config.out_channels), _NORMAL),
            ("head.conv.bias", (config.out_channels,), _ZEROS),
        ]
    return schema


def count_params(config: ModelConfig) -> int:
    """Analytic parameter count; equals the materialized store total exactly."""
    total = 0
    for _, shape, _ in parameter_schema(config):
        total += int(np.prod(shape))
    return total


INIT_STD = 0.02
INIT_BOUND = 2.0  # truncation at +- INIT_BOUND * INIT_STD


def _named_rng(seed: int, name: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}/{name}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "little")))


def _trunc_normal(rng: np.random.Generator, shape, dtype) -> np.ndarray:
    limit = INIT_BOUND * INIT_STD
    out = rng.normal(0.0, INIT_STD, size=shape)
    bad = np.abs(out) > limit
    while bad.any():
        out[bad] = rng.normal(0.0, INIT_STD, size=int(bad.sum()))
        bad = np.abs(out) > limit
    return out.astype(dtype)


def init_params(config: ModelConfig, seed: int, dtype=np.float32) -> ParamStore:
    """Deterministic initialization: each tensor is drawn from its own
    name-keyed generator, so the result depends on (config, seed) only."""
    if config.num_groups < 1:
        raise ConfigError("a runnable model needs at least one residual group")
    entries: dict[str, Tensor] = {}
    for name, shape, kind in parameter_schema(config):
        if kind == _NORMAL:
            data = _trunc_normal(_named_rng(seed, name), shape, dtype)
        elif kind == _ONES:
            data = np.ones(shape, dtype=dtype)
        else:
            data = np.zeros(shape, dtype=dtype)
        entries[name] = Tensor(data, dtype=dtype)
    return ParamStore(entries)


# ---------------------------------------------------------------------------
# Forward graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockParams:
    norm1_gamma: Tensor
    norm1_beta: Tensor
    attn: AttentionParams
    norm2_gamma: Tensor
    norm2_beta: Tensor
    fc1_weight: Tensor
    fc1_bias: Tensor
    fc2_weight: Tensor
    fc2_bias: Tensor
    use_lcm: bool


def _pos_net(store: ParamStore) -> PositionBiasParams:
    return PositionBiasParams(
        w1=store["posbias.fc1.weight"],
        b1=store["posbias.fc1.bias"],
        w2=store["posbias.fc2.weight"],
        b2=store["posbias.fc2.bias"],
        w3=store["posbias.fc3.weight"],
        b3=store["posbias.fc3.bias"],
    )


def block_params(store: ParamStore, prefix: str, config: ModelConfig) -> BlockParams:
    attn = AttentionParams(
        qkv_weight=store[f"{prefix}.attn.qkv.weight"],
        qkv_bias=store[f"{prefix}.attn.qkv.bias"],
        proj_weight=store[f"{prefix}.attn.proj.weight"],
        proj_bias=store[f"{prefix}.attn.proj.bias"],
        lcm_weight=store[f"{prefix}.attn.lcm.weight"] if config.use_lcm else None,
        lcm_bias=store[f"{prefix}.attn.lcm.bias"] if config.use_lcm else None,
        pos_net=_pos_net(store),
        heads=config.num_heads,
    )
    return BlockParams(
        norm1_gamma=store[f"{prefix}.norm1.gamma"],
        norm1_beta=store[f"{prefix}.norm1.beta"],
        attn=attn,
        norm2_gamma=store[f"{prefix}.norm2.gamma"],
        norm2_beta=store[f"{prefix}.norm2.beta"],
        fc1_weight=store[f"{prefix}.mlp.fc1.weight"],
        fc1_bias=store[f"{prefix}.mlp.fc1.bias"],
        fc2_weight=store[f"{prefix}.mlp.fc2.weight"],
        fc2_bias=store[f"{prefix}.mlp.fc2.bias"],
        use_lcm=config.use_lcm,
    )


def catb_forward(
    x: Tensor,
    bp: BlockParams,
    spec: WindowSpec,
    shifted: bool,
    cache: dict | None = None,
    probe: dict | None = None,
) -> Tensor:
    """One attention block: attention and MLP branches, each residual."""
    attn_in = ad.layer_norm(x, bp.norm1_gamma, bp.norm1_beta)
    x = ad.add(
        rwin_self_attention(
            attn_in, bp.attn, spec, shifted=shifted, lcm=bp.use_lcm, cache=cache, probe=probe
        ),
        x,
    )
    h = ad.layer_norm(x, bp.norm2_gamma, bp.norm2_beta)
    h = ad.linear(h, bp.fc1_weight, bp.fc1_bias)
    h = ad.gelu(h)
    h = ad.linear(h, bp.fc2_weight, bp.fc2_bias)
    return ad.add(h, x)


def residual_group_forward(
    x: Tensor,
    store: ParamStore,
    config: ModelConfig,
    group: int,
    cache: dict | None = None,
) -> Tensor:
    """blocks_per_group attention blocks (odd-indexed ones shifted), a 3x3
    convolution, and a residual from the group input."""
    spec = config.spec_for_group(group)
    y = x
    for j in range(config.blocks_per_group):
        bp = block_params(store, f"body.group{group}.block{j}", config)
        y = catb_forward(y, bp, spec, shifted=(j % 2 == 1), cache=cache)
    y = ad.conv2d_3x3(y, store[f"body.group{group}.conv.weight"], store[f"body.group{group}.conv.bias"])
    return ad.add(y, x)


def cat_forward(img: Tensor, store: ParamStore, config: ModelConfig, cache: dict | None = None) -> Tensor:
    """Full model: [N, H, W, in_channels] image in [0, 1] to restored output."""
    if config.num_groups < 1:
        raise ConfigError("a runnable model needs at least one residual group")
    if img.ndim != 4 or img.shape[-1] != config.in_channels:
        raise ConfigError(
            f"input shape {img.shape} does not match configured in_channels={config.in_channels}"
        )
    if cache is None:
        cache = {}
    f0 = ad.conv2d_3x3(img, store["shallow.conv.weight"], store["shallow.conv.bias"])
    y = f0
    for i in range(config.num_groups):
        y = residual_group_forward(y, store, config, i, cache=cache)
    y = ad.conv2d_3x3(y, store["body.conv.weight"], store["body.conv.bias"])
    deep = ad.add(y, f0)

    if config.task == TASK_SR:
        y = ad.conv2d_3x3(deep, store["head.pre.weight"], store["head.pre.bias"])
        for s, r in enumerate(config.upsample_stages()):
            y = ad.conv2d_3x3(y, store[f"head.up{s}.weight"], store[f"head.up{s}.bias"])
            y = ad.pixel_shuffle(y, r)
        return ad.conv2d_3x3(y, store["head.post.weight"], store["head.post.bias"])
    y = ad.conv2d_3x3(deep, store["head.conv.weight"], store["head.conv.bias"])
    return ad.add(y, img)


# ---------------------------------------------------------------------------
# Weight serialization
# ---------------------------------------------------------------------------

_MAGIC = b"CATW"
_VERSION = 1
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def save_weights(store: ParamStore, path: str) -> None:
    """Little-endian container: magic, version, count, then per entry the
    name, dtype code (0 = float32, 1 = float64), rank, dims, raw elements."""
    chunks = [_MAGIC, struct.pack("<I", _VERSION), struct.pack("<I", len(store))]
    for name, t in store.items():
        raw = name.encode("utf-8")
        code = _DTYPE_CODES.get(t.dtype)
        if code is None:
            raise WeightFormatError(f"unsupported dtype {t.dtype} for '{name}'")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<BB", code, t.ndim))
        chunks.append(struct.pack(f"<{t.ndim}I", *t.shape))
        chunks.append(np.ascontiguousarray(t.data, dtype=_CODE_DTYPES[code]).tobytes())
    with open(path, "wb") as f:
        f.write(b"".join(chunks))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.buf):
            raise WeightFormatError(f"truncated weight file while reading {what} at offset {self.off}")
        piece = self.buf[self.off : self.off + n]
        self.off += n
        return piece


def load_weights(path: str, expected_names=None) -> ParamStore:
    """Strict load; with ``expected_names`` given, the file must contain
    exactly those entries (an unknown extra entry is rejected by name)."""
    with open(path, "rb") as f:
        r = _Reader(f.read())
    if r.take(4, "magic") != _MAGIC:
        raise WeightFormatError("bad magic: not a weight file")
    (version,) = struct.unpack("<I", r.take(4, "version"))
    if version != _VERSION:
        raise WeightFormatError(f"unsupported weight file version {version}")
    (count,) = struct.unpack("<I", r.take(4, "entry count"))
    entries: dict[str, Tensor] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", r.take(2, "name length"))
        name = r.take(name_len, "name").decode("utf-8")
        code, rank = struct.unpack("<BB", r.take(2, f"header of '{name}'"))
        if code not in _CODE_DTYPES:
            raise WeightFormatError(f"unknown dtype code {code} for '{name}'")
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank, f"dims of '{name}'"))
        if any(d < 1 for d in dims):
            raise WeightFormatError(f"non-positive extent in dims {dims} of '{name}'")
        dt = _CODE_DTYPES[code]
        nbytes = int(np.prod(dims, dtype=np.int64)) * dt.itemsize if rank else dt.itemsize
        data = np.frombuffer(r.take(nbytes, f"data of '{name}'"), dtype=dt).reshape(dims)
        if name in entries:
            raise WeightFormatError(f"duplicate entry '{name}'")
        entries[name] = Tensor(data, dtype=np.float32 if code == 0 else np.float64)
    if r.off != len(r.buf):
        raise WeightFormatError(f"{len(r.buf) - r.off} trailing bytes after last entry")
    if expected_names is not None:
        expected = set(expected_names)
        extra = sorted(set(entries) - expected)
        if extra:
            raise WeightFormatError(f"unknown extra entry '{extra[0]}'")
        missing = sorted(expected - set(entries))
        if missing:
            raise WeightFormatError(f"missing entry '{missing[0]}'")
    return ParamStore(entries)


# ---------------------------------------------------------------------------
# Config text format
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "task",
    "scale",
    "in_channels",
    "out_channels",
    "channels",
    "num_groups",
    "blocks_per_group",
    "num_heads",
    "mlp_ratio",
    "window",
    "window_height",
    "window_width",
    "axial_lengths",
    "use_lcm",
    "head_width",
}

_INT_KEYS = {
    "scale",
    "in_channels",
    "out_channels",
    "channels",
    "num_groups",
    "blocks_per_group",
    "num_heads",
    "window_height",
    "window_width",
    "head_width",
}


def parse_config_text(text: str) -> ModelConfig:
    """Parse `key = value` lines; blank lines and `#` comments are allowed,
    unknown or repeated keys are rejected."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: repeated key {key!r}")
        raw[key] = value

    def need(key: str) -> str:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
        return raw[key]

    def as_int(key: str, value: str) -> int:
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"key {key!r}: expected an integer, got {value!r}") from None

    task = need("task")
    window_kind = need("window")
    kwargs: dict = {
        "task": task,
        "window_kind": window_kind,
        "channels": as_int("channels", need("channels")),
        "num_groups": as_int("num_groups", need("num_groups")),
        "blocks_per_group": as_int("blocks_per_group", need("blocks_per_group")),
        "num_heads": as_int("num_heads", need("num_heads")),
    }
    ratio_text = need("mlp_ratio")
    try:
        kwargs["mlp_ratio"] = float(ratio_text)
    except ValueError:
        raise ConfigError(f"key 'mlp_ratio': expected a number, got {ratio_text!r}") from None
    default_io = 3 if task == TASK_SR else 1
    kwargs["in_channels"] = as_int("in_channels", raw["in_channels"]) if "in_channels" in raw else default_io
    kwargs["out_channels"] = as_int("out_channels", raw["out_channels"]) if "out_channels" in raw else default_io
    if task == TASK_SR:
        kwargs["scale"] = as_int("scale", need("scale"))
    elif "scale" in raw:
        kwargs["scale"] = as_int("scale", raw["scale"])
    if window_kind == "regular":
        kwargs["window_height"] = as_int("window_height", need("window_height"))
        kwargs["window_width"] = as_int("window_width", need("window_width"))
    elif window_kind == "axial":
        parts = [p.strip() for p in need("axial_lengths").split(",") if p.strip()]
        kwargs["axial_lengths"] = tuple(as_int("axial_lengths", p) for p in parts)
    if "use_lcm" in raw:
        value = raw["use_lcm"].lower()
        if value not in ("true", "false"):
            raise ConfigError(f"key 'use_lcm': expected true or false, got {raw['use_lcm']!r}")
        kwargs["use_lcm"] = value == "true"
    if "head_width" in raw:
        kwargs["head_width"] = as_int("head_width", raw["head_width"])
    return ModelConfig(**kwargs)


def parse_config(path: str) -> ModelConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read())


def format_config(config: ModelConfig) -> str:
    lines = [f"task = {config.task}"]
    if config.task == TASK_SR:
        lines.append(f"scale = {config.scale}")
    lines += [
        f"in_channels = {config.in_channels}",
        f"out_channels = {config.out_channels}",
        f"channels = {config.channels}",
        f"num_groups = {config.num_groups}",
        f"blocks_per_group = {config.blocks_per_group}",
        f"num_heads = {config.num_heads}",
        f"mlp_ratio = {config.mlp_ratio:g}",
        f"window = {config.window_kind}",
    ]
    if config.window_kind == "regular":
        lines += [
            f"window_height = {config.window_height}",
            f"window_width = {config.window_width}",
        ]
    else:
        lines.append(f"axial_lengths = {','.join(str(s) for s in config.axial_lengths)}")
    lines += [
        f"use_lcm = {'true' if config.use_lcm else 'false'}",
        f"head_width = {config.head_width}",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------


def _base_sr(scale: int) -> dict:
    return dict(
        task=TASK_SR,
        scale=scale,
        in_channels=3,
        out_channels=3,
        channels=180,
        num_groups=6,
        blocks_per_group=6,
        num_heads=6,
        mlp_ratio=4.0,
        use_lcm=True,
        head_width=64,
    )


def preset_config(name: str) -> ModelConfig:
    """Named stock configurations (regular/axial windows, SR and artifact
    reduction, plus a tiny trainable-on-a-laptop demo model)."""
    if name.startswith("cat_r_x"):
        scale = int(name.removeprefix("cat_r_x"))
        return ModelConfig(window_kind="regular", window_height=4, window_width=16, **_base_sr(scale))
    if name.startswith("cat_a_x"):
        scale = int(name.removeprefix("cat_a_x"))
        return ModelConfig(window_kind="axial", axial_lengths=(2, 2, 2, 4, 4, 4), **_base_sr(scale))
    if name == "cat_a_car":
        return ModelConfig(
            task=TASK_CAR,
            in_channels=1,
            out_channels=1,
            channels=180,
            num_groups=6,
            blocks_per_group=6,
            num_heads=6,
            mlp_ratio=4.0,
            window_kind="axial",
            axial_lengths=(2, 2, 2, 4, 4, 4),
            use_lcm=True,
        )
    if name == "tiny_sr_x2":
        return ModelConfig(
            task=TASK_SR,
            scale=2,
            in_channels=3,
            out_channels=3,
            channels=16,
            num_groups=1,
            blocks_per_group=1,
            num_heads=2,
            mlp_ratio=2.0,
            window_kind="regular",
            window_height=2,
            window_width=4,
            use_lcm=True,
            head_width=16,
        )
    raise ConfigError(f"unknown preset {name!r}")


PRESET_NAMES = (
    "cat_r_x2",
    "cat_r_x3",
    "cat_r_x4",
    "cat_a_x2",
    "cat_a_x3",
    "cat_a_x4",
    "cat_a_car",
    "tiny_sr_x2",
)
