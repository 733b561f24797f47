"""Command-line interface: one subcommand per pipeline stage, plus ``pipeline`` for all of them.

Every command writes a fresh run directory holding IMAT1 files and a
``manifest.json``. The directory is assembled under a temporary name and
renamed into place only when the command succeeds, so a failed command leaves
nothing behind. Errors are printed to stderr as one JSON object and mapped to
an exit code by kind (see :data:`EXIT_CODES`).
"""
import argparse
import json
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager

import numpy as np

from .analysis.capture import capture_trialset
from .analysis.maps import diagnostic_map, layer_and_redundancy_maps, viewpoint_consistency
from .analysis.planted import (
    FACTOR_PRESETS,
    per_viewpoint_pca,
    planted_identities,
    planted_renders,
    planted_trialsets,
    region_mask,
    region_peaks,
    run_planted,
    target_index,
    top_fraction_in_mask,
    train_planted,
)
from .analysis.representation import rdm_pipeline
from .analysis.robustness import noise_robustness_test
from .errors import DeepInfoError, InvalidDataError, MissingInputError, OutputExistsError, UsageError
from .genmodel import build_generative_model
from .io.config import PRESETS, RunConfig, load_config
from .io.manifest import Manifest, load_manifest, manifest_sha256, read_entry
from .io.store import (
    load_maps,
    load_params,
    load_trialset,
    save_captures,
    save_maps,
    save_params,
    save_trialset,
)
from .io.svg import svg_heatmap
from .network import forward

EXIT_CODES = {
    "usage": 2,
    "schema-violation": 3,
    "missing-input": 4,
    "corrupt-file": 5,
    "output-exists": 6,
}
EXIT_ERROR = 1  # any other library error
EXIT_INTERNAL = 70
RUNS_ENV = "DEEPINFO_RUNS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, prog=self.prog)


# ---------------------------------------------------------------- run directories

class _Run:
    def __init__(self, command, config, inputs, out):
        self.manifest = Manifest(command, config.data, config.seeds, inputs)
        root = os.environ.get(RUNS_ENV, "runs")
        self.final = out or os.path.join(root, f"{command}-{self.manifest.run_id}")
        if os.path.exists(self.final) and (not os.path.isdir(self.final) or os.listdir(self.final)):
            raise OutputExistsError(f"output directory {self.final} already exists", path=self.final)
        parent = os.path.dirname(os.path.abspath(self.final))
        os.makedirs(parent, exist_ok=True)
        self.dir = tempfile.mkdtemp(prefix=f".{os.path.basename(self.final)}-", dir=parent)
        os.chmod(self.dir, 0o755)

    def matrix(self, name, role, matrix, **meta):
        return self.manifest.add_matrix(self.dir, name, role, matrix, **meta)

    def commit(self):
        self.manifest.write(self.dir)
        if os.path.isdir(self.final):
            os.rmdir(self.final)  # known to be empty
        os.replace(self.dir, self.final)


@contextmanager
def _open_run(command, config, inputs, out):
    run = _Run(command, config, inputs, out)
    try:
        yield run
    except BaseException:
        shutil.rmtree(run.dir, ignore_errors=True)
        raise
    run.commit()
    summary = {"run_dir": run.final, "run_id": run.manifest.run_id, "results": run.manifest.results}
    print(json.dumps(summary, sort_keys=True, default=_json_default))


def _json_default(value):
    if isinstance(value, (np.generic, np.ndarray)):
        return value.tolist()
    raise TypeError(type(value).__name__)


def _input(args, flag):
    path = getattr(args, flag.replace("-", "_"))
    if path is None:
        raise MissingInputError(f"--{flag} is required", flag=flag)
    return path, load_manifest(path)


def _ref(path, manifest):
    return {"run_id": manifest.run_id, "manifest_sha256": manifest_sha256(path)}


def _config(args, inherited=None):
    """Explicit ``--config``/``--preset`` win; otherwise inherit the primary input's config."""
    overrides = {}
    if getattr(args, "proportions", None) is not None:
        overrides["analysis"] = {"proportions": args.proportions}
    if inherited is not None and args.config is None and args.preset is None:
        data = json.loads(json.dumps(inherited))
        if overrides:
            data["analysis"].update(overrides["analysis"])
        if args.seed is not None:
            data["seed"] = args.seed
        return RunConfig(data)
    return load_config(args.config, args.preset or "desk", args.seed, overrides)


def _generator(config):
    pc, seeds = config.planted, config.seeds
    model = build_generative_model(FACTOR_PRESETS[pc.factors], pc.database_rows_per_cell, seeds["model"])
    identities, codes = planted_identities(model, pc, seeds["identities"])
    return model, identities, codes


def _target(config, identities):
    return identities[target_index(config.planted)]


# ---------------------------------------------------------------- commands

def cmd_gen(args):
    config = _config(args)
    model, identities, codes = _generator(config)
    target = _target(config, identities)
    pixel, coef = planted_trialsets(model, target, config.planted, config.seeds["trials"])
    with _open_run("gen", config, {}, args.out) as run:
        save_trialset(run.manifest, run.dir, pixel, "pixel")
        save_trialset(run.manifest, run.dir, coef, "coef")
        run.matrix("codes.imat", "metrics", codes, description="decision-region code per identity")
        run.manifest.results.update(target=target.id_label, n_trials=pixel.n_trials,
                                    identities=[i.to_dict() for i in identities])


def _history_results(history):
    return {k: history[k] for k in ("train_acc", "train_loss", "test_acc", "test_loss")}


def cmd_train(args):
    config = _config(args)
    _, _, params, history, _ = train_planted(config.planted, config.seed)
    with _open_run("train", config, {}, args.out) as run:
        save_params(run.manifest, run.dir, params)
        run.matrix("test_index.imat", "labels", history["test_index"], description="held-out render rows")
        run.manifest.results["history"] = _history_results(history)
        run.manifest.results["held_out_accuracy"] = history["test_acc"][-1] if history["test_acc"] else None


def cmd_eval(args):
    model_dir, model_manifest = _input(args, "model")
    config = _config(args, model_manifest.config)
    params = load_params(model_dir, model_manifest)
    model, identities, _ = _generator(config)
    images, labels, _ = planted_renders(model, identities, config.planted, config.seeds["renders"])
    rows = read_entry(model_dir, model_manifest.entry("test_index.imat"))[:, 0].astype(np.int64)
    predicted = forward(params, images[rows])[0].argmax(axis=1)
    n = params.spec.n_classes
    confusion = np.zeros((n, n))
    np.add.at(confusion, (labels[rows], predicted), 1.0)
    with _open_run("eval", config, {"model": _ref(model_dir, model_manifest)}, args.out) as run:
        run.matrix("confusion.imat", "metrics", confusion, rows="true class", cols="predicted class")
        run.manifest.results["held_out_accuracy"] = float(np.trace(confusion) / confusion.sum())


def cmd_capture(args):
    trials_dir, trials_manifest = _input(args, "trials")
    model_dir, model_manifest = _input(args, "model")
    config = _config(args, trials_manifest.config)
    params = load_params(model_dir, model_manifest)
    pixel = load_trialset(trials_dir, trials_manifest, "pixel")
    size = pixel.grid_shape
    pixel.images = pixel.S.reshape(pixel.n_trials, *size)
    captured = capture_trialset(params, pixel, trials_manifest.results["target"], layers=args.layers)
    inputs = {"trials": _ref(trials_dir, trials_manifest), "model": _ref(model_dir, model_manifest)}
    with _open_run("capture", config, inputs, args.out) as run:
        for prefix in ("pixel", "coef"):
            save_captures(run.manifest, run.dir, captured, prefix)
        run.manifest.results["target"] = captured.target


def _captured(args):
    trials_dir, trials_manifest = _input(args, "trials")
    capture_dir, capture_manifest = _input(args, "capture")
    if capture_manifest.inputs.get("trials", {}).get("run_id") != trials_manifest.run_id:
        raise InvalidDataError("capture run was not made from this trials run",
                               trials=trials_manifest.run_id, capture_inputs=capture_manifest.inputs)
    config = _config(args, trials_manifest.config)
    capture = (capture_dir, capture_manifest)
    pixel = load_trialset(trials_dir, trials_manifest, "pixel", capture)
    coef = load_trialset(trials_dir, trials_manifest, "coef", capture)
    inputs = {"trials": _ref(trials_dir, trials_manifest), "capture": _ref(capture_dir, capture_manifest)}
    return config, pixel, coef, inputs


def _diagnostic(config, pixel, coef):
    pc, seeds = config.planted, config.seeds
    pixel_maps = diagnostic_map(pixel, n_perm=pc.n_perm, seed=seeds["null"], per_viewpoint=True)
    coef_maps = diagnostic_map(coef, n_perm=pc.n_perm, seed=seeds["null"], per_viewpoint=True)
    model, identities, _ = _generator(config)
    target = _target(config, identities)
    in_mask = {}
    for m in pixel_maps:
        mask = region_mask(model, target, pc.decision_regions, m.viewpoint)
        in_mask[str(m.viewpoint)] = top_fraction_in_mask(m, mask, pc.top_fraction)
    results = {
        "top_decile_in_mask": in_mask,
        "thresholds": {str(m.viewpoint): m.threshold for m in pixel_maps},
        "coefficient_consistency": viewpoint_consistency(coef_maps)[1],
    }
    return pixel_maps, coef_maps, results


def cmd_mi_map(args):
    config, pixel, coef, inputs = _captured(args)
    pixel_maps, coef_maps, results = _diagnostic(config, pixel, coef)
    with _open_run("mi-map", config, inputs, args.out) as run:
        save_maps(run.manifest, run.dir, pixel_maps, "pixel")
        save_maps(run.manifest, run.dir, coef_maps, "coef")
        run.manifest.results.update(results)


def _pc_family(config, pixel, coef):
    pc, seeds = config.planted, config.seeds
    scores, models = per_viewpoint_pca(pixel, "pool", pc.n_pcs, seeds["pca"])
    layer, red = layer_and_redundancy_maps(pixel, scores, pc.n_pcs, per_viewpoint=True, n_perm=pc.n_perm,
                                           seed=seeds["null"])
    coef_layer, coef_red = layer_and_redundancy_maps(coef, scores, pc.n_pcs, per_viewpoint=False,
                                                     n_perm=pc.n_perm, seed=seeds["null"])
    unused_layer, threshold = region_peaks(coef_layer, [pc.unused_region])
    peaks, _ = region_peaks(coef_red, [pc.unused_region, *pc.decision_regions])
    results = {
        "layer_threshold": threshold,
        "unused_layer_peak": float(unused_layer[0]),
        "unused_redundancy_peak": float(peaks[0]),
        "decision_redundancy_peak": float(peaks[1:].max()),
        "explained_variance_ratio": {str(v): m.explained_variance_ratio for v, m in models.items()},
    }
    return scores, (layer, coef_layer), (red, coef_red), results


def _cmd_pc(args, command, which):
    config, pixel, coef, inputs = _captured(args)
    scores, layer, red, results = _pc_family(config, pixel, coef)
    pixel_maps, coef_maps = layer if which == "layer" else red
    with _open_run(command, config, inputs, args.out) as run:
        run.matrix("pc_scores.imat", "L", scores, layer="pool", description="per-viewpoint PCA scores")
        save_maps(run.manifest, run.dir, pixel_maps, "pixel")
        save_maps(run.manifest, run.dir, coef_maps, "coef")
        run.manifest.results.update(results)


def cmd_pc_map(args):
    _cmd_pc(args, "pc-map", "layer")


def cmd_red_map(args):
    _cmd_pc(args, "red-map", "redundancy")


def _rdm(config, pixel):
    pc = config.planted
    groups = rdm_pipeline(pixel, "pool", pc.n_pcs, config.analysis["rdm_rows_per_block"], config.seeds["pca"])
    return [(ident, channel, r) for (ident, channel), (_, r, _) in groups.items()]


def _save_rdms(run, rdms):
    ratios = {}
    for ident, channel, r in rdms:
        run.matrix(f"rdm_{ident}_{channel}.imat", "rdm", r.matrix, identity=ident, channel=channel,
                   block_labels=r.block_labels)
        ratios[f"{ident}_{channel}"] = r.ratio
    run.manifest.results["rdm_ratio"] = ratios


def cmd_rdm(args):
    config, pixel, _, inputs = _captured(args)
    rdms = _rdm(config, pixel)
    with _open_run("rdm", config, inputs, args.out) as run:
        _save_rdms(run, rdms)


def _robustness(config, params, model, identities):
    a = config.analysis
    return noise_robustness_test(params, model, _target(config, identities), a["robustness_channel"],
                                 a["proportions"], a["robustness_trials"], config.seeds["robustness"])


def _save_robustness(run, report):
    run.matrix("robustness.imat", "metrics", np.column_stack([report.proportions, report.accuracy]),
               cols=["proportion", "accuracy"], channel=report.channel)
    run.manifest.results["robustness"] = report.to_dict()


def cmd_robustness(args):
    model_dir, model_manifest = _input(args, "model")
    config = _config(args, model_manifest.config)
    params = load_params(model_dir, model_manifest)
    model, identities, _ = _generator(config)
    report = _robustness(config, params, model, identities)
    with _open_run("robustness", config, {"model": _ref(model_dir, model_manifest)}, args.out) as run:
        _save_robustness(run, report)


def _colormap(args, kind):
    if args.colormap:
        return args.colormap
    return "diverging" if kind == "redundancy" else "sequential"


def cmd_plot(args):
    maps_dir, maps_manifest = _input(args, "maps")
    config = _config(args, maps_manifest.config)
    maps = load_maps(maps_dir, maps_manifest)
    if not maps:
        raise MissingInputError(f"run {maps_manifest.run_id} holds no maps")
    with _open_run("plot", config, {"maps": _ref(maps_dir, maps_manifest)}, args.out) as run:
        for family, m in maps:
            name = f"{family}_{m.label()}.svg"
            text = svg_heatmap(m, _colormap(args, m.kind))
            run.manifest.add_text(run.dir, name, "figure", text, family=family, kind=m.kind)
        run.manifest.results["figures"] = len(maps)


def cmd_pipeline(args):
    config = _config(args)
    result = run_planted(config.planted, config.seed)
    model, identities, _ = _generator(config)
    rdms = _rdm(config, result.trialset)
    report = _robustness(config, result.params, model, identities)
    coef_diag = diagnostic_map(result.coefficient_trialset, n_perm=config.planted.n_perm,
                               seed=config.seeds["null"], per_viewpoint=True)
    diag = [result.diagnostic[v] for v in sorted(result.diagnostic)]
    layer = [m for v in sorted(result.layer_maps) for m in result.layer_maps[v]]
    red = [m for v in sorted(result.redundancy_maps) for m in result.redundancy_maps[v]]
    families = [("pixel", diag), ("coef", coef_diag), ("pixel", layer), ("coef", result.coefficient_layer_maps),
                ("pixel", red), ("coef", result.coefficient_redundancy_maps)]
    with _open_run("pipeline", config, {}, args.out) as run:
        save_params(run.manifest, run.dir, result.params)
        run.matrix("test_index.imat", "labels", result.history["test_index"], description="held-out render rows")
        save_trialset(run.manifest, run.dir, result.trialset, "pixel", with_captures=True)
        save_trialset(run.manifest, run.dir, result.coefficient_trialset, "coef", with_captures=True)
        for family, maps in families:
            save_maps(run.manifest, run.dir, maps, family)
        for family, maps in families:
            for m in maps:
                name = f"{family}_{m.label()}.svg"
                run.manifest.add_text(run.dir, name, "figure", svg_heatmap(m, _colormap(args, m.kind)),
                                      family=family, kind=m.kind)
        _save_rdms(run, rdms)
        _save_robustness(run, report)
        summary = result.summary()
        summary.pop("seconds")  # wall-clock time would break byte-for-byte reproducibility
        run.manifest.results["planted"] = summary
        run.manifest.results["history"] = _history_results(result.history)


# ---------------------------------------------------------------- argument parsing

def _proportions(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values or any(not np.isfinite(v) or v < 0 for v in values):
        raise argparse.ArgumentTypeError("proportions must be finite and >= 0")
    return values


def _seed(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be >= 0")
    return value


COMMANDS = {
    "gen": (cmd_gen, "build the generator, identities and noise trial sets", ()),
    "train": (cmd_train, "train the network on the planted task", ()),
    "capture": (cmd_capture, "record layer activations and the target logit", ("trials", "model")),
    "eval": (cmd_eval, "held-out confusion matrix of a trained network", ("model",)),
    "mi-map": (cmd_mi_map, "diagnostic (stimulus-decision MI) maps", ("trials", "capture")),
    "pc-map": (cmd_pc_map, "stimulus-layer PC MI maps", ("trials", "capture")),
    "red-map": (cmd_red_map, "decision-redundancy maps", ("trials", "capture")),
    "rdm": (cmd_rdm, "dissimilarity matrices of layer PC scores", ("trials", "capture")),
    "robustness": (cmd_robustness, "identification accuracy under generative noise", ("model",)),
    "plot": (cmd_plot, "SVG heatmaps of every map in a run", ("maps",)),
    "pipeline": (cmd_pipeline, "every stage end to end in one run directory", ()),
}


def build_parser():
    parser = _Parser(prog="deepinfo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (func, help_text, inputs) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="RunConfig JSON file overlaid on the preset")
        p.add_argument("--preset", choices=sorted(PRESETS), help="base configuration (default: desk)")
        p.add_argument("--seed", type=_seed, help="global seed; every stage seed derives from it")
        p.add_argument("--out", help=f"run directory (default: ${RUNS_ENV}/<command>-<run id>)")
        for flag in inputs:
            p.add_argument(f"--{flag}", metavar="RUN_DIR", help=f"input run directory ({flag})")
        if name in ("robustness", "pipeline"):
            p.add_argument("--proportions", type=_proportions, help="comma-separated noise proportions")
        if name == "capture":
            p.add_argument("--layers", nargs="+", default=["pool"], help="capture points to record")
        if name in ("plot", "pipeline"):
            p.add_argument("--colormap", choices=["sequential", "diverging"],
                           help="override the per-kind default colormap")
    return parser


def _fail(payload, code):
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=_json_default) + "\n")
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except DeepInfoError as exc:
        return _fail(exc.to_dict(), EXIT_CODES.get(exc.kind, EXIT_ERROR))
    except OSError as exc:
        kind = "missing-input" if isinstance(exc, FileNotFoundError) else "io-error"
        return _fail({"error": kind, "message": str(exc)}, EXIT_CODES.get(kind, EXIT_ERROR))
    except Exception as exc:  # noqa: BLE001 - last-resort JSON report
        return _fail({"error": "internal", "message": f"{type(exc).__name__}: {exc}"}, EXIT_INTERNAL)
    return 0


if __name__ == "__main__":
    sys.exit(main())
