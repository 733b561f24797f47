"""Run manifests: what a run wrote, in which order, and how to check it."""
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import CorruptFileError, InvalidDataError, MissingInputError
from .imat import HEADER, atomic_write_bytes, decode_matrix, encode_matrix

MANIFEST_NAME = "manifest.json"
FORMAT = "deepinfo-manifest/1"
ROLES = ("S", "L", "R", "map", "rdm", "labels", "params", "metrics", "figure")


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def run_id(command, config, inputs):
    """Content hash of what determines a run's outputs; no clock, no paths."""
    doc = json.dumps({"command": command, "config": config, "inputs": inputs}, sort_keys=True)
    return sha256_bytes(doc.encode())[:16]


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class Manifest:
    """File inventory of one run directory.

    ``files`` is kept in creation order. Each entry records the file name
    (relative to the run directory), its semantic role, its stored shape
    (``None`` for text files), its SHA-256 and free-form metadata.
    """

    command: str
    config: dict
    seeds: dict
    inputs: dict = field(default_factory=dict)  # name -> {"run_id", "manifest_sha256"}
    files: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    @property
    def run_id(self):
        return run_id(self.command, self.config, self.inputs)

    def _add(self, run_dir, name, role, data, shape, meta):
        if role not in ROLES:
            raise InvalidDataError(f"unknown role {role!r}", allowed=list(ROLES))
        if any(f["name"] == name for f in self.files):
            raise InvalidDataError(f"file {name!r} already written in this run")
        atomic_write_bytes(os.path.join(run_dir, name), data)
        self.files.append({"name": name, "role": role, "shape": shape, "sha256": sha256_bytes(data),
                           "meta": _jsonable(meta)})

    def add_matrix(self, run_dir, name, role, matrix, **meta):
        """Write ``matrix`` as IMAT1 and record it. Returns the stored matrix."""
        data = encode_matrix(matrix)
        rows, cols = HEADER.unpack_from(data)[2:]
        self._add(run_dir, name, role, data, [rows, cols], meta)
        return decode_matrix(data)

    def add_text(self, run_dir, name, role, text, **meta):
        self._add(run_dir, name, role, text.encode("utf-8"), None, meta)

    def entries(self, role=None, **meta):
        """File entries with ``role`` whose metadata contains every ``meta`` item."""
        return [f for f in self.files
                if (role is None or f["role"] == role) and all(f["meta"].get(k) == v for k, v in meta.items())]

    def entry(self, name):
        for f in self.files:
            if f["name"] == name:
                return f
        raise MissingInputError(f"run {self.run_id} has no file {name!r}")

    def to_dict(self):
        return {
            "format": FORMAT,
            "run_id": self.run_id,
            "command": self.command,
            "seeds": _jsonable(self.seeds),
            "config": _jsonable(self.config),
            "inputs": _jsonable(self.inputs),
            "files": [dict(f, order=i) for i, f in enumerate(self.files)],
            "results": _jsonable(self.results),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def write(self, run_dir):
        """Write ``manifest.json`` last, so a run with a manifest is complete."""
        atomic_write_bytes(os.path.join(run_dir, MANIFEST_NAME), self.to_json().encode("utf-8"))

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != FORMAT:
            raise CorruptFileError(f"unsupported manifest format {d.get('format')!r}")
        files = [{k: v for k, v in f.items() if k != "order"} for f in d["files"]]
        return cls(d["command"], d["config"], d["seeds"], d.get("inputs", {}), files, d.get("results", {}))


def manifest_sha256(run_dir):
    with open(os.path.join(run_dir, MANIFEST_NAME), "rb") as fh:
        return sha256_bytes(fh.read())


def load_manifest(run_dir, verify=True):
    """Read a run's manifest; with ``verify``, check every listed file.

    Raises :class:`MissingInputError` when the directory, manifest or a listed
    file is absent and :class:`CorruptFileError` on a shape or checksum mismatch.
    """
    path = os.path.join(run_dir, MANIFEST_NAME)
    if not os.path.isfile(path):
        raise MissingInputError(f"no manifest at {path}", path=path)
    with open(path) as fh:
        try:
            manifest = Manifest.from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError) as exc:
            raise CorruptFileError(f"{path}: unreadable manifest ({exc})") from None
    if verify:
        for f in manifest.files:
            _verify_file(run_dir, f)
    return manifest


def _verify_file(run_dir, entry):
    path = os.path.join(run_dir, entry["name"])
    if not os.path.isfile(path):
        raise MissingInputError(f"manifest lists missing file {path}", path=path)
    with open(path, "rb") as fh:
        data = fh.read()
    if entry["shape"] is not None:
        shape = list(decode_matrix(data, path).shape)
        if shape != entry["shape"]:
            raise CorruptFileError(f"{path}: shape {shape} does not match manifest {entry['shape']}")
    if sha256_bytes(data) != entry["sha256"]:
        raise CorruptFileError(f"{path}: checksum mismatch")


def read_entry(run_dir, entry):
    """The matrix stored for a manifest entry."""
    path = os.path.join(run_dir, entry["name"])
    with open(path, "rb") as fh:
        return decode_matrix(fh.read(), path)
