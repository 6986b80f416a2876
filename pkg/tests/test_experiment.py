"""Tests for configs, reports, the run directory pipeline and the CLI."""

import json
from pathlib import Path

import numpy as np
import pytest

from src.data.mnist import SplitSpec
from src.experiment.cli import main, parse_architecture
from src.experiment.config import (
    ENV_OUT_DIR,
    ENV_THREADS,
    ENV_TRAIN_IMAGES,
    ExperimentConfig,
    apply_env_overrides,
    load_config,
    preset,
)
from src.experiment.report import (
    RunReport,
    VariantResult,
    accuracy_from_predictions,
    accuracy_table,
    render_text,
    write_predictions,
)
from src.experiment.runner import cmd_report, cmd_reproduce, cmd_train, variant_dir
from src.training.trainer import TrainConfig
from src.utils.errors import ConfigError
from src.utils.numerics import ActivationKind

ARCH = (784, 8, 4)


@pytest.fixture
def small_config(mnist_files, tmp_path):
    """Seconds-scale run over the synthetic IDX files"""
    images_path, labels_path, _, _ = mnist_files

    def make(out="run", **changes):
        config = ExperimentConfig(
            train_images=str(images_path),
            train_labels=str(labels_path),
            split=SplitSpec(per_class=3),
            architectures=(ARCH,),
            train=TrainConfig(learning_rate=0.1, epochs=2, batch_size=10,
                              activation=ActivationKind.SIGMOID),
            out_dir=str(tmp_path / out),
            seed=0,
            threads=1,
        )
        return config.with_overrides(**changes)

    return make


class TestConfig:

    def test_dict_round_trip(self):
        config = preset("full", seed=3)
        assert ExperimentConfig.from_dict(config.to_dict()) == config

    def test_unknown_field(self):
        doc = preset("desk").to_dict()
        doc["momentum"] = 0.9
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(doc)

    def test_schema_version_is_checked(self):
        doc = preset("desk").to_dict()
        doc["schema_version"] = 2
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(doc)

    def test_top_level_seed_drives_everything(self):
        config = ExperimentConfig(seed=7, train=TrainConfig(seed=1), split=SplitSpec(seed=2))
        assert config.train.seed == 7
        assert config.split.seed == 7

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().variant("vae")

    def test_environment_overrides(self):
        config = apply_env_overrides(preset("desk"), {ENV_THREADS: "3", ENV_OUT_DIR: "elsewhere",
                                                      ENV_TRAIN_IMAGES: "/data/images.gz"})
        assert config.threads == 3
        assert config.out_dir == "elsewhere"
        assert config.train_images == "/data/images.gz"
        assert config.train_labels == preset("desk").train_labels

    def test_bad_thread_variable(self):
        with pytest.raises(ConfigError):
            apply_env_overrides(preset("desk"), {ENV_THREADS: "many"})

    def test_load_config_file(self, tmp_path):
        path = tmp_path / "run.json"
        preset("desk", seed=4).save(path)
        assert load_config(path, environ={}).seed == 4

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.json", environ={})

    def test_desk_preset(self):
        config = preset("desk")
        assert config.split.per_class == 200
        assert config.architectures == ((784, 200, 50),)
        assert config.train.learning_rate == 0.01
        assert config.train.epochs == 30
        assert config.train.batch_size == 20
        assert config.train.activation is ActivationKind.TANH
        assert config.variant_names == ["ae", "dae", "cae", "cdae"]
        assert config.variant("cdae").penalty_weight == 0.1

    def test_full_preset(self):
        config = preset("full")
        assert config.split.per_class == 900
        assert config.architectures == ((784, 200, 100), (784, 200, 50))
        assert config.train.epochs == 50
        assert config.train.batch_size == 20

    def test_unknown_scale(self):
        with pytest.raises(ConfigError):
            preset("huge")

    def test_architecture_argument(self):
        assert parse_architecture("784-200-50") == [784, 200, 50]


class TestReport:

    def test_perfect_predictions(self, tmp_path):
        labels = np.arange(10)
        write_predictions(tmp_path / "predictions.csv", labels, labels)
        scores = accuracy_from_predictions(tmp_path / "predictions.csv")
        assert scores == {"correct": 10, "total": 10, "accuracy": 1.0}

    def test_predictions_file_layout(self, tmp_path):
        write_predictions(tmp_path / "p.csv", np.array([3, 1]), np.array([3, 7]))
        assert (tmp_path / "p.csv").read_text() == "index,label,prediction\n0,3,3\n1,1,7\n"

    def test_missing_rows(self):
        report = RunReport(config={}, results=[
            VariantResult("AE", "784-200-50", accuracy=1.0, correct=4, total=4),
            VariantResult("CAE", "784-200-50"),
        ])
        table = accuracy_table(report, "784-200-50")
        assert list(table["Variant"]) == ["AE", "DAE", "CAE", "CDAE"]
        assert list(table["Status"]) == ["ok", "missing", "missing", "missing"]
        text = render_text(report)
        assert "SVM test accuracy, encoder 784-200-50" in text
        assert "100.00%" in text
        assert text.count("missing") == 3


class TestPipeline:

    def test_reproduce_writes_the_run_directory(self, small_config):
        config = small_config()
        report, text = cmd_reproduce(config, debug=False)
        out = variant_dir(config.out_dir, ARCH, "cdae")
        for name in ("model.json", "train.cdff", "test.cdff", "predictions.csv", "svm.json",
                     "classification.json", "layer-0.json", "layer-1.json"):
            assert (out / name).exists(), name
        assert len(report.results) == 4
        for result in report.results:
            assert result.total == 30
            assert 0.0 <= result.accuracy <= 1.0
            assert len(result.loss_traces) == 2
        assert "missing" not in text

    def test_outputs_do_not_depend_on_directory_or_threads(self, small_config):
        first = small_config(out="a", threads=1)
        second = small_config(out="b", threads=2)
        cmd_reproduce(first, variants=["dae", "cdae"], debug=False)
        cmd_reproduce(second, variants=["dae", "cdae"], debug=False)
        for name in ("dae", "cdae"):
            for artifact in ("model.json", "test.cdff", "predictions.csv"):
                a = variant_dir(first.out_dir, ARCH, name) / artifact
                b = variant_dir(second.out_dir, ARCH, name) / artifact
                assert a.read_bytes() == b.read_bytes()
        assert (Path(first.out_dir) / "report.json").read_bytes() == \
            (Path(second.out_dir) / "report.json").read_bytes()

    def test_report_config_replays_the_run(self, small_config, tmp_path):
        original = small_config(out="original")
        cmd_reproduce(original, variants=["cdae"], debug=False)
        echoed = json.loads((Path(original.out_dir) / "report.json").read_text())["config"]
        replay = ExperimentConfig.from_dict(echoed).with_overrides(out_dir=str(tmp_path / "replay"))
        assert replay == original.with_overrides(out_dir=replay.out_dir, threads=replay.threads)
        cmd_reproduce(replay, variants=["cdae"], debug=False)
        for artifact in ("model.json", "test.cdff", "predictions.csv"):
            a = variant_dir(original.out_dir, ARCH, "cdae") / artifact
            b = variant_dir(replay.out_dir, ARCH, "cdae") / artifact
            assert a.read_bytes() == b.read_bytes(), artifact
        assert (Path(original.out_dir) / "report.json").read_bytes() == \
            (Path(replay.out_dir) / "report.json").read_bytes()

    def test_missing_variants_show_in_report(self, small_config):
        config = small_config()
        report, text = cmd_reproduce(config, variants=["ae"], debug=False)
        assert report.result("784-8-4", "AE").complete
        assert not report.result("784-8-4", "CDAE").complete
        assert text.count("missing") == 3

    def test_resume_from_layer_checkpoint(self, small_config):
        config = small_config()
        cmd_train(config, "cae", ARCH)
        directory = variant_dir(config.out_dir, ARCH, "cae")
        expected = (directory / "model.json").read_bytes()
        (directory / "model.json").unlink()
        (directory / "layer-1.json").unlink()
        cmd_train(config, "cae", ARCH)
        assert (directory / "model.json").read_bytes() == expected

    def test_run_directory_belongs_to_one_config(self, small_config):
        cmd_train(small_config(), "ae", ARCH)
        with pytest.raises(ConfigError):
            cmd_train(small_config(seed=5), "ae", ARCH)

    def test_report_recomputes_from_disk(self, small_config):
        config = small_config()
        cmd_reproduce(config, variants=["ae"], debug=False)
        directory = variant_dir(config.out_dir, ARCH, "ae")
        labels = np.arange(30) % 10
        write_predictions(directory / "predictions.csv", labels, labels)
        report, _ = cmd_report(config.out_dir)
        assert report.result("784-8-4", "AE").accuracy == 1.0


class TestCli:

    def test_bad_architecture_writes_error_document(self, small_config, tmp_path, monkeypatch):
        for name in (ENV_THREADS, ENV_OUT_DIR, ENV_TRAIN_IMAGES):
            monkeypatch.delenv(name, raising=False)
        config = small_config()
        config_path = tmp_path / "run.json"
        config.save(config_path)
        out = tmp_path / "cli-run"
        code = main(["train", "--config", str(config_path), "--arch", "700-8",
                     "--out", str(out), "--quiet"])
        assert code == 1
        document = json.loads((out / "error.json").read_text())
        assert document["error"] == "shape_error"
        assert document["details"]["found"] == 700
        assert not (out / "700-8").exists()

    def test_success_removes_stale_error_document(self, small_config, tmp_path, monkeypatch):
        monkeypatch.delenv(ENV_OUT_DIR, raising=False)
        config = small_config()
        config_path = tmp_path / "run.json"
        config.save(config_path)
        out = tmp_path / "cli-run"
        assert main(["train", "--config", str(config_path), "--arch", "700-8",
                     "--out", str(out), "--quiet"]) == 1
        assert main(["train", "--config", str(config_path), "--variant", "ae",
                     "--out", str(out), "--quiet"]) == 0
        assert not (out / "error.json").exists()
        assert (variant_dir(out, ARCH, "ae") / "model.json").exists()

    def test_gradcheck_passes(self, tmp_path, capsys):
        code = main(["gradcheck", "--dv", "6", "--dh", "3", "--restarts", "1",
                     "--out", str(tmp_path), "--quiet"])
        assert code == 0
        assert "PASS" in capsys.readouterr().out
        assert json.loads((tmp_path / "gradcheck.json").read_text())["passed"] is True

    def test_gradcheck_rejects_large_inputs(self, tmp_path):
        code = main(["gradcheck", "--dv", "100", "--out", str(tmp_path), "--quiet"])
        assert code == 1
        assert json.loads((tmp_path / "error.json").read_text())["error"] == "config_error"

    def test_failed_gradcheck_writes_error_document(self, tmp_path):
        code = main(["gradcheck", "--restarts", "1", "--tolerance", "1e-12",
                     "--out", str(tmp_path), "--quiet"])
        assert code == 1
        assert json.loads((tmp_path / "gradcheck.json").read_text())["passed"] is False
        document = json.loads((tmp_path / "error.json").read_text())
        assert document["error"] == "gradcheck_failed"
        assert document["details"]["tolerance"] == 1e-12
        assert document["details"]["worst"]["relative_error"] >= 1e-12
