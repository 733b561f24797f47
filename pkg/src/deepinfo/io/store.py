"""Trial sets, network parameters and feature maps as manifest-tracked IMAT1 files."""
import numpy as np

from ..analysis.maps import FeatureMap
from ..errors import CorruptFileError, MissingInputError
from ..network import NetSpec, Params, init_params
from ..trialset import TrialSet
from .manifest import read_entry

CHANNEL_CODES = ("none", "shape", "texture", "both")


def save_trialset(manifest, run_dir, trialset, prefix, with_captures=False):
    """Write ``S`` and the row labels, plus ``L`` and ``R`` when ``with_captures``."""
    meta = {"trialset": prefix}
    codes = [CHANNEL_CODES.index(c) for c in trialset.channel.tolist()]
    labels = np.column_stack([trialset.identity, trialset.viewpoint, trialset.replicate, codes])
    manifest.add_matrix(run_dir, f"{prefix}_S.imat", "S", trialset.S, feature_dims=trialset.feature_dims,
                        grid_shape=list(trialset.grid_shape), feature_space=trialset.feature_space, **meta)
    manifest.add_matrix(run_dir, f"{prefix}_labels.imat", "labels", labels,
                        columns=["identity", "viewpoint", "replicate", "channel"], **meta)
    if with_captures:
        save_captures(manifest, run_dir, trialset, prefix)


def save_captures(manifest, run_dir, trialset, prefix):
    meta = {"trialset": prefix}
    for name in sorted(trialset.L):
        manifest.add_matrix(run_dir, f"{prefix}_L_{name}.imat", "L", trialset.L[name], layer=name, **meta)
    manifest.add_matrix(run_dir, f"{prefix}_R.imat", "R", trialset.R, target=trialset.target, **meta)


def _one(manifest, role, **meta):
    found = manifest.entries(role, **meta)
    if not found:
        raise MissingInputError(f"run {manifest.run_id} has no {role} file for {meta}", role=role, **meta)
    return found[0]


def load_trialset(run_dir, manifest, prefix, capture=None):
    """Rebuild a trial set; ``capture`` is an optional ``(run_dir, manifest)`` holding ``L`` and ``R``."""
    s_entry = _one(manifest, "S", trialset=prefix)
    labels = read_entry(run_dir, _one(manifest, "labels", trialset=prefix)).astype(np.int64)
    S = read_entry(run_dir, s_entry)
    meta = s_entry["meta"]
    ts = TrialSet(
        S=S,
        identity=labels[:, 0],
        viewpoint=labels[:, 1],
        replicate=labels[:, 2],
        channel=np.array([CHANNEL_CODES[c] for c in labels[:, 3]]),
        feature_dims=int(meta["feature_dims"]),
        grid_shape=tuple(meta["grid_shape"]),
        feature_space=meta["feature_space"],
    )
    if capture is not None:
        cap_dir, cap_manifest = capture
        r_entry = _one(cap_manifest, "R", trialset=prefix)
        ts.R = read_entry(cap_dir, r_entry)[:, 0]
        ts.target = r_entry["meta"]["target"]
        ts.L = {e["meta"]["layer"]: read_entry(cap_dir, e) for e in cap_manifest.entries("L", trialset=prefix)}
        ts.validate()
    return ts


def save_params(manifest, run_dir, params):
    """One IMAT1 file per tensor; the network description goes in ``results``."""
    for i, name, array in params.flat():
        stored = array.reshape(array.shape[0], -1) if array.ndim > 1 else array
        manifest.add_matrix(run_dir, f"param_{i:02d}_{name}.imat", "params", stored, layer=i, tensor=name,
                            array_shape=list(array.shape))
    manifest.results["network"] = {
        "netspec": params.spec.to_dict(),
        "seed": params.seed,
        "input_mean": params.input_mean,
        "input_scale": params.input_scale,
    }


def load_params(run_dir, manifest):
    if "network" not in manifest.results:
        raise MissingInputError(f"run {manifest.run_id} holds no network parameters")
    net = manifest.results["network"]
    spec = NetSpec.from_dict(net["netspec"])
    tensors = [{} for _ in spec.layers]
    for entry in manifest.entries("params"):
        meta = entry["meta"]
        tensors[meta["layer"]][meta["tensor"]] = read_entry(run_dir, entry).reshape(meta["array_shape"])
    params = Params(spec, tensors, net["seed"], net["input_mean"], net["input_scale"])
    expected = {(i, k) for i, k, _ in init_params(spec).flat()}
    if {(i, k) for i, k, _ in params.flat()} != expected:
        raise CorruptFileError(f"run {manifest.run_id}: parameter tensors do not match the network")
    return params


def save_maps(manifest, run_dir, maps, family):
    for m in maps:
        manifest.add_matrix(run_dir, f"{family}_{m.label()}.imat", "map", m.values, family=family, kind=m.kind,
                            threshold=m.threshold, grid_shape=list(m.grid_shape), feature_dims=m.feature_dims,
                            pc_index=m.pc_index, viewpoint=m.viewpoint,
                            degenerate=np.flatnonzero(m.degenerate))


def load_maps(run_dir, manifest, family=None):
    out = []
    for entry in manifest.entries("map"):
        meta = entry["meta"]
        if family is not None and meta["family"] != family:
            continue
        values = read_entry(run_dir, entry)[:, 0]
        degenerate = np.zeros(values.size, dtype=bool)
        degenerate[np.asarray(meta["degenerate"], dtype=np.int64)] = True
        out.append((meta["family"], FeatureMap(values, meta["kind"], tuple(meta["grid_shape"]), meta["threshold"],
                                               meta["feature_dims"], meta["pc_index"], meta["viewpoint"],
                                               degenerate)))
    return out
