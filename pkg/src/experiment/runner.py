"""
Experiment Runner - Train, Extract, Classify, Report
====================================================

Run directory layout (all JSON canonical, all writes atomic):

    <out>/config.json                       config echo
    <out>/splits/split.json                 split spec, provenance, source indices
    <out>/splits/{train,test}.cdff          normalized pixel splits
    <out>/<arch>/<variant>/layer-<k>.json   per-layer checkpoints
    <out>/<arch>/<variant>/model.json       the stacked encoder
    <out>/<arch>/<variant>/{train,test}.cdff  extracted features
    <out>/<arch>/<variant>/predictions.csv  index,label,prediction on the test split
    <out>/<arch>/<variant>/svm.json         one-vs-one SVM
    <out>/<arch>/<variant>/classification.json
    <out>/report.json, table.{txt,json,csv}
    <out>/timings.json                      wall clock, kept out of report.json

Everything except timings.json is a pure function of the config and the
IDX files, so reruns reuse what already exists.
"""

import json
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

import src
from src.data.mnist import (
    PIXELS,
    LabeledSet,
    load_labeled_set,
    load_pool,
    read_feature_file,
    save_labeled_set,
    subset_and_split,
    write_feature_file,
)
from src.experiment.config import VARIANT_NAMES, ExperimentConfig, architecture_tag
from src.experiment.report import (
    ROW_ORDER,
    RunReport,
    VariantResult,
    accuracy_from_predictions,
    write_predictions,
    write_tables,
)
from src.models.autoencoder import AutoEncoderParams
from src.models.multiclass_svm import (
    MulticlassSvm,
    SvmSettings,
    grid_search,
    multiclass_predict,
    multiclass_train,
)
from src.models.stack import StackedModel, StackSpec, extract_features, pretrain
from src.training.gradcheck import GradcheckReport, GradientFn, run_gradcheck
from src.training.trainer import LossReport
from src.utils.errors import ConfigError, DataError, DimensionError, ShapeError
from src.utils.io import (
    PathLike,
    atomic_write_json,
    dumps_canonical,
    read_json,
    sha256_bytes,
    sha256_file,
)
from src.utils.numerics import RNG_ALGORITHM

CHECKPOINT_FORMAT = "cdae-layer-checkpoint"
CLASSIFICATION_FORMAT = "cdae-classification"
MAX_GRADCHECK_DIM = 50


def artifact_versions() -> Dict[str, Any]:
    return {"package": src.__version__, "numpy": np.__version__, "rng_algorithm": RNG_ALGORITHM}


class Timings:
    """Wall-clock seconds per step, merged into <out>/timings.json"""

    def __init__(self, out_dir: PathLike):
        self.path = Path(out_dir) / "timings.json"
        self.entries: Dict[str, float] = read_json(self.path) if self.path.exists() else {}

    @contextmanager
    def measure(self, key: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.entries[key] = round(time.perf_counter() - start, 3)
            atomic_write_json(self.path, self.entries)


def _normalized(document: Any) -> Any:
    """The document as it reads back from disk"""
    return json.loads(dumps_canonical(document))


def variant_dir(out_dir: PathLike, layer_dims: Sequence[int], variant: str) -> Path:
    return Path(out_dir) / architecture_tag(layer_dims) / variant.lower()


def _check_run_config(config: ExperimentConfig) -> Path:
    """A run directory belongs to exactly one config"""
    out = Path(config.out_dir)
    echo = out / "config.json"
    if echo.exists():
        previous = read_json(echo)
        previous.pop("threads", None)
        previous.pop("out_dir", None)
        if previous != _normalized(config.replay_dict()):
            raise ConfigError(f"{out} holds a run with a different config; choose another --out",
                              out_dir=str(out))
    config.save(echo)
    return out


# ---------------------------------------------------------------------------
# dataset split
# ---------------------------------------------------------------------------

def prepare_split(config: ExperimentConfig, debug: bool = False) -> Tuple[LabeledSet, LabeledSet]:
    """Build the balanced train/test split once per run directory and reuse it"""
    split_dir = Path(config.out_dir) / "splits"
    meta_path = split_dir / "split.json"
    if meta_path.exists():
        meta = read_json(meta_path)
        if meta["split"] != _normalized(config.split.to_dict()):
            raise ConfigError(f"{split_dir} was built from a different split spec",
                              expected=config.split.to_dict(), found=meta["split"])
        if debug:
            print(f"📂 Reusing split from {split_dir}")
        train = load_labeled_set(split_dir / "train.cdff")
        test = load_labeled_set(split_dir / "test.cdff")
        for dataset, name in ((train, "train"), (test, "test")):
            dataset.provenance = dict(meta["provenance"], subset=name)
            dataset.source_indices = np.asarray(meta["source_indices"][name], dtype=np.int64)
        return train, test

    if debug:
        print(f"📥 Loading MNIST pool from {config.train_images}")
    raw = load_pool(config.train_images, config.train_labels, pool="train")
    train, test = subset_and_split(raw, config.split)
    save_labeled_set(split_dir / "train.cdff", train)
    save_labeled_set(split_dir / "test.cdff", test)
    atomic_write_json(meta_path, {
        "format": "cdae-split",
        "version": 1,
        "split": config.split.to_dict(),
        "provenance": raw.provenance,
        "sizes": {"train": len(train), "test": len(test)},
        "source_indices": {"train": train.source_indices.tolist(),
                           "test": test.source_indices.tolist()},
    })
    if debug:
        print(f"✅ Split ready: {len(train)} train / {len(test)} test "
              f"({config.split.per_class} per digit each)")
    return train, test


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _checkpoint_path(directory: Path, k: int) -> Path:
    return directory / f"layer-{k}.json"


def _load_checkpoints(directory: Path, spec: StackSpec) -> Tuple[List[AutoEncoderParams], List[LossReport]]:
    layers: List[AutoEncoderParams] = []
    reports: List[LossReport] = []
    for k in range(spec.n_layers):
        path = _checkpoint_path(directory, k)
        if not path.exists():
            break
        doc = read_json(path)
        if (doc.get("format") != CHECKPOINT_FORMAT
                or doc.get("stack_spec") != _normalized(spec.to_dict())):
            raise ConfigError(f"{path} was written for a different stack", path=str(path))
        layers.append(AutoEncoderParams.from_dict(doc["params"]))
        reports.append(LossReport(**doc["report"]))
    return layers, reports


def cmd_train(config: ExperimentConfig, variant: str, layer_dims: Optional[Sequence[int]] = None,
              debug: bool = False) -> StackedModel:
    """
    Pretrain one variant's stack and persist it as model.json

    Every finished layer is checkpointed, so an interrupted run resumes at
    the first missing layer.
    """
    layer_dims = list(layer_dims or config.architectures[0])
    if layer_dims[0] != PIXELS:
        raise ShapeError(f"First layer must take {PIXELS} pixels, got {layer_dims[0]}",
                         expected=PIXELS, found=layer_dims[0])
    spec = config.stack_spec(variant, layer_dims)
    _check_run_config(config)
    directory = variant_dir(config.out_dir, layer_dims, variant)
    model_path = directory / "model.json"

    if model_path.exists():
        model = StackedModel.load(model_path)
        if model.spec is not None and _normalized(model.spec.to_dict()) == _normalized(spec.to_dict()):
            if debug:
                print(f"📂 {variant.upper()} {architecture_tag(layer_dims)} already trained")
            return model
        raise ConfigError(f"{model_path} was written for a different stack", path=str(model_path))

    train, _ = prepare_split(config, debug=debug)
    layers, reports = _load_checkpoints(directory, spec)
    if debug:
        print(f"\n🧠 Training {variant.upper()} stack {architecture_tag(layer_dims)}"
              + (f" (resuming after {len(layers)} layer(s))" if layers else ""))

    def checkpoint(k: int, params: AutoEncoderParams, report: LossReport) -> None:
        atomic_write_json(_checkpoint_path(directory, k), {
            "format": CHECKPOINT_FORMAT,
            "version": 1,
            "layer": k,
            "stack_spec": spec.to_dict(),
            "params": params.to_dict(),
            "report": report.to_dict(),
        })
        if debug:
            print(f"💾 Layer {k + 1} checkpoint saved (loss {report.total:.4f})")

    timings = Timings(config.out_dir)
    with timings.measure(f"{architecture_tag(layer_dims)}/{variant.lower()}/train"):
        model = pretrain(spec, train.images, resume_layers=layers, resume_reports=reports,
                         on_layer_trained=checkpoint, debug=debug)
    model.save(model_path)
    return model


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------

def extract_to_file(model: StackedModel, dataset: LabeledSet, path: PathLike) -> str:
    """Encode a split through the stack and write it as a feature file; returns its sha256"""
    if dataset.images.shape[1] != model.layers[0].d_v:
        raise DimensionError(f"Model expects {model.layers[0].d_v} inputs, split has "
                             f"{dataset.images.shape[1]}", expected=model.layers[0].d_v,
                             found=int(dataset.images.shape[1]))
    features = extract_features(model, dataset.images)
    return sha256_bytes(write_feature_file(path, features, dataset.labels))


def cmd_extract(config: ExperimentConfig, variant: str, layer_dims: Optional[Sequence[int]] = None,
                debug: bool = False) -> Dict[str, Path]:
    """Feature files for both splits from a trained model.json"""
    layer_dims = list(layer_dims or config.architectures[0])
    _check_run_config(config)
    directory = variant_dir(config.out_dir, layer_dims, variant)
    model_path = directory / "model.json"
    if not model_path.exists():
        raise DataError(f"No trained model at {model_path}; run train first", path=str(model_path))
    model = StackedModel.load(model_path)
    train, test = prepare_split(config, debug=debug)

    paths = {"train": directory / "train.cdff", "test": directory / "test.cdff"}
    for name, dataset in (("train", train), ("test", test)):
        digest = extract_to_file(model, dataset, paths[name])
        if debug:
            print(f"🧬 {variant.upper()} {name} features: {len(dataset)} × {model.feature_dim} "
                  f"(sha256 {digest[:12]})")
    return paths


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def cmd_classify(train_path: PathLike, test_path: PathLike, settings: SvmSettings,
                 out_dir: PathLike, seed: int = 0, threads: Optional[int] = None,
                 debug: bool = False) -> Dict[str, Any]:
    """
    Fit the one-vs-one SVM on train features and predict the test split

    Writes predictions.csv, svm.json and classification.json into out_dir.
    The reported accuracy is recomputed from predictions.csv.
    """
    out = Path(out_dir)
    result_path = out / "classification.json"
    digests = {"train": sha256_file(train_path), "test": sha256_file(test_path)}

    if result_path.exists():
        previous = read_json(result_path)
        if (previous.get("feature_sha256") == digests
                and previous.get("requested") == _normalized(settings.to_dict())):
            if debug:
                print(f"📂 Classification in {out} is up to date")
            return previous

    X_train, y_train = read_feature_file(train_path)
    X_test, y_test = read_feature_file(test_path)
    if X_train.shape[1] != X_test.shape[1]:
        raise DimensionError(f"Train features are {X_train.shape[1]}-dimensional, test features "
                             f"{X_test.shape[1]}-dimensional", expected=int(X_train.shape[1]),
                             found=int(X_test.shape[1]))

    grid = []
    used = settings
    if settings.grid_search:
        used, results = grid_search(X_train, y_train, settings, seed=seed, threads=threads, debug=debug)
        grid = [{"C": r.C, "sigma": r.sigma, "accuracy": r.accuracy} for r in results]
        if debug:
            print(f"🔎 Grid search picked C={used.C:g}, sigma={used.sigma:.4g}")

    kernel = used.kernel_spec(X_train.shape[1])
    model: MulticlassSvm = multiclass_train(X_train, y_train, used.C, kernel, tol=used.tol,
                                            max_passes=used.max_passes, seed=seed,
                                            threads=threads, debug=debug)
    predictions = multiclass_predict(model, X_test)

    write_predictions(out / "predictions.csv", y_test, predictions)
    model.save(out / "svm.json")
    scores = accuracy_from_predictions(out / "predictions.csv")
    document = {
        "format": CLASSIFICATION_FORMAT,
        "version": 1,
        "feature_sha256": digests,
        "requested": settings.to_dict(),
        "settings": used.to_dict(),
        "kernel": kernel.to_dict(),
        "grid": grid,
        "pairs": len(model.pairwise_models),
        "support_vectors": sum(len(m.alphas) for m in model.pairwise_models.values()),
        **scores,
    }
    atomic_write_json(result_path, document)
    if debug:
        print(f"📊 Test accuracy {100.0 * scores['accuracy']:.2f}% "
              f"({scores['correct']}/{scores['total']})")
    return document


def classify_variant(config: ExperimentConfig, variant: str, layer_dims: Optional[Sequence[int]] = None,
                     debug: bool = False) -> Dict[str, Any]:
    layer_dims = list(layer_dims or config.architectures[0])
    _check_run_config(config)
    directory = variant_dir(config.out_dir, layer_dims, variant)
    train_path, test_path = directory / "train.cdff", directory / "test.cdff"
    if not (train_path.exists() and test_path.exists()):
        raise DataError(f"No feature files in {directory}; run extract first", path=str(directory))
    timings = Timings(config.out_dir)
    with timings.measure(f"{architecture_tag(layer_dims)}/{variant.lower()}/classify"):
        return cmd_classify(train_path, test_path, config.svm, directory, seed=config.seed,
                            threads=config.threads, debug=debug)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _variant_result(out: Path, layer_dims: Sequence[int], variant: str) -> VariantResult:
    directory = variant_dir(out, layer_dims, variant)
    result = VariantResult(variant=variant.upper(), architecture=architecture_tag(layer_dims))
    model_path = directory / "model.json"
    if model_path.exists():
        model = StackedModel.load(model_path)
        result.loss_traces = [list(r.trace) for r in model.reports]
        result.final_losses = [{"total": r.total, "reconstruction": r.reconstruction,
                                "penalty": r.penalty, "lambda": r.lam} for r in model.reports]
    for name in ("train", "test"):
        path = directory / f"{name}.cdff"
        if path.exists():
            result.feature_sha256[name] = sha256_file(path)
    predictions = directory / "predictions.csv"
    if predictions.exists():
        scores = accuracy_from_predictions(predictions)
        result.accuracy = scores["accuracy"]
        result.correct = scores["correct"]
        result.total = scores["total"]
    classification = directory / "classification.json"
    if classification.exists():
        doc = read_json(classification)
        result.svm = {"settings": doc.get("settings"), "kernel": doc.get("kernel"),
                      "support_vectors": doc.get("support_vectors")}
    return result


def cmd_report(out_dir: PathLike, debug: bool = False) -> Tuple[RunReport, str]:
    """
    Collect every variant of every architecture in a run directory

    Variants that never finished appear as missing rows.
    """
    out = Path(out_dir)
    echo = out / "config.json"
    if not echo.exists():
        raise DataError(f"{out} is not a run directory (no config.json)", path=str(out))
    config = ExperimentConfig.from_dict(read_json(echo))
    results = [_variant_result(out, layer_dims, name)
               for layer_dims in config.architectures
               for name in ROW_ORDER]
    report = RunReport(config=config.replay_dict(), results=results, versions=artifact_versions())
    report.save(out / "report.json")
    paths = write_tables(report, out)
    text = paths["text"].read_text(encoding="utf-8")
    if debug:
        print(f"💾 Report written to {out / 'report.json'}")
    return report, text


# ---------------------------------------------------------------------------
# gradcheck / reproduce
# ---------------------------------------------------------------------------

def cmd_gradcheck(d_v: int = 20, d_h: int = 7, variants: Optional[Sequence[str]] = None,
                  tolerance: float = 1e-6, restarts: int = 25, seed: int = 0,
                  gradient_fn: Optional[GradientFn] = None, debug: bool = False) -> GradcheckReport:
    """Full variant × activation × loss matrix against finite differences"""
    if not 1 <= d_v <= MAX_GRADCHECK_DIM or d_h < 1:
        raise ConfigError(f"Gradient check needs 1 <= d_v <= {MAX_GRADCHECK_DIM} and d_h >= 1",
                          d_v=d_v, d_h=d_h)
    if debug:
        print(f"🔬 Gradient check d_v={d_v}, d_h={d_h}, {restarts} restarts, tol={tolerance:g}")
    return run_gradcheck(d_v=d_v, d_h=d_h, variants=variants, tolerance=tolerance,
                         restarts=restarts, seed=seed, gradient_fn=gradient_fn, debug=debug)


def run_variant(config: ExperimentConfig, variant: str, layer_dims: Sequence[int],
                debug: bool = False) -> Dict[str, Any]:
    """train → extract → classify for one variant, reusing finished steps"""
    directory = variant_dir(config.out_dir, layer_dims, variant)
    cmd_train(config, variant, layer_dims, debug=debug)
    if not ((directory / "train.cdff").exists() and (directory / "test.cdff").exists()):
        cmd_extract(config, variant, layer_dims, debug=debug)
    return classify_variant(config, variant, layer_dims, debug=debug)


def cmd_reproduce(config: ExperimentConfig, variants: Optional[Sequence[str]] = None,
                  debug: bool = False) -> Tuple[RunReport, str]:
    """
    The full comparison: every configured architecture × variant, then the tables

    Results persist per variant, so rerunning after an interruption picks up
    where the previous run stopped.
    """
    names = [v.lower() for v in (variants or config.variant_names)]
    for name in names:
        if name not in VARIANT_NAMES:
            raise ConfigError(f"Unknown variant {name!r}", known=list(VARIANT_NAMES))
    _check_run_config(config)

    if debug:
        print("\n" + "=" * 70)
        print(f"🎓 REPRODUCTION RUN: {len(config.architectures)} architecture(s) × {len(names)} variant(s)")
        print("=" * 70)

    for layer_dims in config.architectures:
        for name in names:
            run_variant(config, name, layer_dims, debug=debug)

    report, text = cmd_report(config.out_dir, debug=debug)
    if debug:
        print("\n" + text)
    return report, text

