"""
Model geometry: frame encoder channel pattern, temporal encoder layers,
feature widths and vocabulary, with the two reserved presets.
"""

from pathlib import Path
from typing import Any, Dict, List, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError, FormatError

RESERVED_PRESETS = ("full", "tiny")


class TemporalLayer(BaseModel):
    """One first-level 1D conv layer: filter, stride, zero padding, max-pool window"""

    model_config = ConfigDict(frozen=True)

    filter: int = Field(ge=1)
    stride: int = Field(default=1, ge=1)
    pad: int = Field(default=0, ge=0)
    pool: int = Field(default=1, ge=1)

    def to_text(self) -> str:
        return f"{self.filter}/{self.stride}/{self.pad}/{self.pool}"

    @classmethod
    def from_text(cls, text: str) -> "TemporalLayer":
        filter_, stride, pad, pool = (int(part) for part in text.strip().split("/"))
        return cls(filter=filter_, stride=stride, pad=pad, pool=pool)


def _geometry(preset: str) -> Dict[str, Any]:
    if preset == "full":
        return dict(
            input_channels=3,
            input_height=224,
            input_width=224,
            s_channel_pattern=[3, 32, 64, 64, 128, 128, 256, 256, 512, 512],
            f_s=512,
            f_g=512,
            f_g2=1024,
        )
    if preset == "tiny":
        return dict(
            input_channels=3,
            input_height=32,
            input_width=32,
            s_channel_pattern=[3, 16, 32, 64],
            f_s=64,
            f_g=64,
            f_g2=128,
        )
    raise ConfigError(f"Unknown preset '{preset}', reserved presets are {RESERVED_PRESETS}")


_VIEW_RESIZE = {"full": 256, "tiny": 36}

_SHARED_TEMPORAL = dict(
    s_filter=3,
    s_pad=1,
    s_pool=2,
    g1_layers=[TemporalLayer(filter=5, pool=2), TemporalLayer(filter=5, pool=2)],
    g2_filter=3,
    window=16,
    stride=4,
)


class ModelConfig(BaseModel):
    """Architecture of the fully convolutional recognizer"""

    model_config = ConfigDict(frozen=True)

    preset: str = "custom"
    input_channels: int = Field(ge=1)
    input_height: int = Field(ge=1)
    input_width: int = Field(ge=1)
    s_channel_pattern: List[int]
    s_filter: int = Field(default=3, ge=1)
    s_pad: int = Field(default=1, ge=0)
    s_pool: int = Field(default=2, ge=1)
    g1_layers: List[TemporalLayer]
    g2_filter: int = Field(default=3, ge=1)
    use_g2: bool = True
    f_s: int = Field(ge=1)
    f_g: int = Field(ge=1)
    f_g2: int = Field(ge=1)
    vocab_size: int = Field(ge=1)
    window: int = Field(ge=1)
    stride: int = Field(ge=1)
    # square side frames are resized to before cropping to the input size, 0 = no resize
    view_resize: int = Field(default=0, ge=0)
    bn_momentum: float = Field(default=0.1, gt=0.0, le=1.0)
    bn_eps: float = Field(default=1e-5, gt=0.0)

    # ── derived geometry ──

    @property
    def num_classes(self) -> int:
        """u = v + 1"""
        return self.vocab_size + 1

    @property
    def blank(self) -> int:
        return self.vocab_size

    @property
    def g2_context(self) -> int:
        """Gloss steps of context on each side used by the second level"""
        return (self.g2_filter - 1) // 2 if self.use_g2 else 0

    @property
    def head_features(self) -> int:
        return self.f_g2 if self.use_g2 else self.f_g

    def steps_for(self, frames: int) -> int:
        """k = floor((t - l) / delta) + 1, zero below one window"""
        if frames < self.window:
            return 0
        return (frames - self.window) // self.stride + 1

    def receptive_field(self) -> Dict[str, Any]:
        """Accumulated window and stride of the first level, with a per-layer trace"""
        field, jump = 1, 1
        trace = []
        for i, layer in enumerate(self.g1_layers):
            field += (layer.filter - 1) * jump
            jump *= layer.stride
            trace.append({"layer": f"g1.conv{i}", "window": field, "stride": jump})
            if layer.pool > 1:
                field += (layer.pool - 1) * jump
                jump *= layer.pool
                trace.append({"layer": f"g1.pool{i}", "window": field, "stride": jump})
        return {"window": field, "stride": jump, "trace": trace}

    def spatial_output(self) -> int:
        """Spatial extent left after the frame encoder pools"""
        h, w = self.input_height, self.input_width
        for c_in, c_out in zip(self.s_channel_pattern, self.s_channel_pattern[1:]):
            h = h + 2 * self.s_pad - self.s_filter + 1
            w = w + 2 * self.s_pad - self.s_filter + 1
            if c_out > c_in:
                h, w = h // self.s_pool, w // self.s_pool
        return min(h, w)

    @model_validator(mode="after")
    def _check_geometry(self) -> "ModelConfig":
        if len(self.s_channel_pattern) < 2:
            raise ValueError("s_channel_pattern needs the input channels and at least one layer")
        if self.s_channel_pattern[0] != self.input_channels:
            raise ValueError("s_channel_pattern must start with input_channels")
        if self.s_channel_pattern[-1] != self.f_s:
            raise ValueError("f_s must equal the last frame encoder channel count")
        if self.spatial_output() < 1:
            raise ValueError("Input resolution too small for the frame encoder pools")
        if not self.g1_layers:
            raise ValueError("g1_layers must contain at least one layer")
        if any(layer.pad != 0 for layer in self.g1_layers):
            raise ValueError("First level temporal convolutions must use zero padding 0")
        if self.g2_filter % 2 == 0:
            raise ValueError(f"g2_filter must be odd, got {self.g2_filter}")
        if self.view_resize and self.view_resize < max(self.input_height, self.input_width):
            raise ValueError("view_resize must be 0 or at least the input resolution")

        rf = self.receptive_field()
        if (rf["window"], rf["stride"]) != (self.window, self.stride):
            raise ValueError(
                f"Configured window/stride {self.window}/{self.stride} do not match "
                f"the first level receptive field {rf['window']}/{rf['stride']}"
            )

        if self.preset in RESERVED_PRESETS:
            expected = {**_geometry(self.preset), **_SHARED_TEMPORAL}
            for key, value in expected.items():
                if getattr(self, key) != value:
                    raise ValueError(f"Preset '{self.preset}' is reserved, {key} cannot be changed")
        return self

    # ── construction ──

    @classmethod
    def create(cls, **fields: Any) -> "ModelConfig":
        """Validate fields, raising ConfigError instead of pydantic's error"""
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ConfigError(f"Invalid model configuration: {e}") from e

    @classmethod
    def from_preset(cls, preset: str = "tiny", vocab_size: int = 12, /, **overrides: Any) -> "ModelConfig":
        fields = {**_geometry(preset), **_SHARED_TEMPORAL, "preset": preset, "vocab_size": vocab_size}
        fields["view_resize"] = _VIEW_RESIZE[preset]
        fields.update(overrides)
        return cls.create(**fields)

    # ── key = value text file ──

    def to_text(self) -> str:
        lines = ["# glossfcn model configuration"]
        for key, value in self.model_dump().items():
            if key == "g1_layers":
                text = ", ".join(layer.to_text() for layer in self.g1_layers)
            elif isinstance(value, list):
                text = ", ".join(str(v) for v in value)
            elif isinstance(value, bool):
                text = "true" if value else "false"
            else:
                text = str(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    def write(self, path: Union[str, Path]) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str, path: str = "<text>") -> "ModelConfig":
        fields: Dict[str, Any] = {}
        offset = 0
        for line in text.splitlines(keepends=True):
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                if "=" not in stripped:
                    raise FormatError(f"Expected 'key = value', got '{stripped}'", path, offset)
                key, raw = (part.strip() for part in stripped.split("=", 1))
                if key not in cls.model_fields:
                    raise FormatError(f"Unknown model configuration key '{key}'", path, offset)
                try:
                    fields[key] = _parse_value(key, raw)
                except ValueError:
                    raise FormatError(f"Cannot parse value for '{key}'", path, offset)
            offset += len(line.encode("utf-8"))
        return cls.create(**fields)

    @classmethod
    def read(cls, path: Union[str, Path]) -> "ModelConfig":
        logger.debug(f"Reading model configuration from {path}")
        return cls.from_text(Path(path).read_text(encoding="utf-8"), str(path))


def _parse_value(key: str, raw: str) -> Any:
    if key == "g1_layers":
        return [TemporalLayer.from_text(part) for part in raw.split(",") if part.strip()]
    if key == "s_channel_pattern":
        return [int(part) for part in raw.split(",") if part.strip()]
    if key == "use_g2":
        if raw.lower() not in ("true", "false"):
            raise ValueError(raw)
        return raw.lower() == "true"
    if key in ("bn_momentum", "bn_eps"):
        return float(raw)
    if key == "preset":
        return raw
    return int(raw)
