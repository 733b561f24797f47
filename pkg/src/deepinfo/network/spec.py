"""Network architecture description."""
from dataclasses import asdict, dataclass, field

from ..errors import InvalidConfigError

LAYER_KINDS = ("conv", "relu", "residual", "gap", "dense", "logits")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    channels: int = 0  # conv output channels / residual width
    units: int = 0  # dense width
    stride: int = 1  # conv only

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise InvalidConfigError(f"unknown layer kind {self.kind!r}")


@dataclass(frozen=True)
class NetSpec:
    """Ordered layers; ``capture_points`` maps names to layer indices whose output is recorded."""

    layers: tuple
    input_shape: tuple = (32, 32)
    n_classes: int = 20
    capture_points: dict = field(default_factory=dict)

    def __post_init__(self):
        layers = tuple(l if isinstance(l, LayerSpec) else LayerSpec(**l) for l in self.layers)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        object.__setattr__(self, "capture_points", dict(self.capture_points))
        self.output_shapes()

    def output_shapes(self):
        """Shape after each layer; validates the chain."""
        if self.n_classes < 2:
            raise InvalidConfigError("n_classes must be >= 2")
        kinds = [l.kind for l in self.layers]
        if kinds.count("logits") != 1 or kinds[-1] != "logits":
            raise InvalidConfigError("exactly one logits layer is required, and it must be last")
        shape = (*self.input_shape, 1)
        shapes = []
        for i, l in enumerate(self.layers):
            spatial = len(shape) == 3
            if l.kind == "conv":
                if not spatial or l.channels < 1 or l.stride < 1:
                    raise InvalidConfigError(f"layer {i}: conv needs a spatial input and channels >= 1")
                shape = ((shape[0] - 1) // l.stride + 1, (shape[1] - 1) // l.stride + 1, l.channels)
            elif l.kind == "residual":
                if not spatial or l.channels != shape[2]:
                    raise InvalidConfigError(f"layer {i}: residual width {l.channels} != input channels {shape[-1]}")
            elif l.kind == "gap":
                if not spatial:
                    raise InvalidConfigError(f"layer {i}: global pooling needs a spatial input")
                shape = (shape[2],)
            elif l.kind in ("dense", "logits"):
                if spatial:
                    raise InvalidConfigError(f"layer {i}: {l.kind} needs a flat input (pool first)")
                shape = (self.n_classes,) if l.kind == "logits" else (l.units,)
                if shape[0] < 1:
                    raise InvalidConfigError(f"layer {i}: dense needs units >= 1")
            shapes.append(shape)
        pools = [i for i, k in enumerate(kinds) if k == "gap"]
        for name, idx in self.capture_points.items():
            if not 0 <= idx < len(self.layers):
                raise InvalidConfigError(f"capture point {name!r} -> {idx} out of range")
        if pools and pools[-1] not in self.capture_points.values():
            raise InvalidConfigError("the last global pooling layer must be a capture point")
        return shapes

    def to_dict(self):
        return {
            "layers": [asdict(l) for l in self.layers],
            "input_shape": list(self.input_shape),
            "n_classes": self.n_classes,
            "capture_points": dict(self.capture_points),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(LayerSpec(**l) for l in d["layers"]), tuple(d["input_shape"]),
                   int(d["n_classes"]), dict(d.get("capture_points", {})))


def desk_netspec(n_classes=20, width=8, input_shape=(32, 32)):
    """Three stride-2 conv stages, each followed by one residual block, pooled into the logits.

    Index 12 is the global average pool, the penultimate representation.
    """
    layers = []
    for stage in range(3):
        w = width * 2 ** stage
        layers += [LayerSpec("conv", channels=w, stride=2), LayerSpec("relu"),
                   LayerSpec("residual", channels=w), LayerSpec("relu")]
    layers += [LayerSpec("gap"), LayerSpec("logits")]
    return NetSpec(tuple(layers), input_shape, n_classes, {"block1": 3, "block2": 7, "block3": 11, "pool": 12})
