"""Run configuration: presets, JSON-schema validation and stage seeds."""
import copy
import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from ..analysis.planted import PLANTED_TRAIN, PlantedConfig, stage_seeds
from ..errors import DeepInfoError, SchemaError

DESK_ANALYSIS = {
    "proportions": [0.0, 0.4, 0.8, 2.0, 4.0],
    "robustness_channel": "texture",
    "robustness_trials": 200,
    "rdm_rows_per_block": 100,
}


def _train_dict(train):
    d = train.to_dict()
    d.pop("seed")  # always replaced by the "train" stage seed
    return d


def _preset_desk():
    planted = PlantedConfig()
    d = planted.to_dict()
    return {
        "preset": "desk",
        "seed": 0,
        "generator": {"factors": d.pop("factors"), "database_rows_per_cell": d.pop("database_rows_per_cell")},
        "network": {"width": d.pop("width")},
        "train": _train_dict(PLANTED_TRAIN),
        "planted": {k: v for k, v in d.items() if k != "train"},
        "analysis": dict(DESK_ANALYSIS),
    }


def _preset_smoke():
    """Seconds-scale run for exercising the plumbing; the network barely trains."""
    d = _preset_desk()
    d["preset"] = "smoke"
    d["generator"]["database_rows_per_cell"] = 10
    d["network"]["width"] = 4
    d["train"]["epochs"] = 1
    d["planted"].update(n_identities=4, renders_per_identity=20, trials_per_viewpoint=40, n_pcs=3, n_perm=100)
    d["analysis"].update(robustness_trials=20, rdm_rows_per_block=10)
    return d


PRESETS = {"desk": _preset_desk, "smoke": _preset_smoke}


def preset(name):
    """A fresh, fully populated config dict for a named preset."""
    if name not in PRESETS:
        raise SchemaError(f"unknown preset {name!r}", allowed=sorted(PRESETS))
    return PRESETS[name]()


def schema():
    text = resources.files("deepinfo.io").joinpath("runconfig.schema.json").read_text()
    return json.loads(text)


def _merge(base, overlay):
    out = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration.

    ``data`` is the JSON document; :attr:`planted` and :attr:`seeds` are the
    derived objects every stage uses.
    """

    data: dict = field(repr=False)

    def __post_init__(self):
        validate(self.data)

    @property
    def seed(self):
        return self.data["seed"]

    @property
    def seeds(self):
        return stage_seeds(self.seed)

    @property
    def analysis(self):
        return self.data["analysis"]

    @property
    def planted(self):
        d = self.data
        return PlantedConfig.from_dict({
            **d["planted"], **d["generator"], "width": d["network"]["width"], "train": d["train"],
        })

    def to_json(self):
        return json.dumps(self.data, sort_keys=True, indent=2)


def validate(data):
    """Raise :class:`SchemaError` unless ``data`` is a complete, consistent RunConfig document."""
    try:
        jsonschema.validate(data, schema())
    except jsonschema.ValidationError as exc:
        raise SchemaError(exc.message, path="/".join(str(p) for p in exc.absolute_path)) from None
    try:
        # cross-field rules live in the dataclasses
        PlantedConfig.from_dict({
            **data["planted"], **data["generator"], "width": data["network"]["width"], "train": data["train"],
        })
    except DeepInfoError as exc:
        raise SchemaError(str(exc), path="planted") from None


def load_config(path=None, preset_name="desk", seed=None, overrides=None):
    """Preset, overlaid by a JSON file, then by ``overrides``, then by ``seed``.

    The file and overrides may be partial; nested objects merge key by key.
    """
    data = preset(preset_name)
    if path is not None:
        with open(path) as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: not valid JSON ({exc.msg})", line=exc.lineno) from None
        if not isinstance(loaded, dict):
            raise SchemaError(f"{path}: top level must be an object")
        data = _merge(data, loaded)
    if overrides:
        data = _merge(data, overrides)
    if seed is not None:
        data["seed"] = seed
    return RunConfig(data)
