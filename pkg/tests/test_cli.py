import csv
import json

import pytest

from ratedrivers.cli import main
from ratedrivers.datasets import demo_reviews, write_reviews_jsonl
from ratedrivers.pipeline import ConfigError, load_config

SMALL_CONFIG = """\
[input]
path = reviews.jsonl
format = jsonl

[preprocess]
min_df = 3

[topics]
mode = fixed
k = 4
alpha = 0.2
eta = 0.1
iterations = 80
fold_in_iterations = 15
top_words = 8
window = 110

[sentiment]
provider = lexicon
epsilon = 1e-4

[features]
aggregation = sum

[models]
classifiers = logistic, random_forest, gradient_boosting
folds = 2
rf_trees = 15
rf_depth = 6
gbdt_rounds = 8
gbdt_depth = 3

[explain]
model = gradient_boosting
scheme = three_class

[run]
seed = 13
out = out
"""


@pytest.fixture()
def workdir(tmp_path):
    write_reviews_jsonl(demo_reviews(120, seed=3), tmp_path / "reviews.jsonl")
    (tmp_path / "pipeline.cfg").write_text(SMALL_CONFIG)
    return tmp_path


def cfg_args(workdir, *extra):
    return ["--config", str(workdir / "pipeline.cfg"), *extra]


def test_full_run_emits_all_artifacts(workdir, capsys):
    assert main(["run", *cfg_args(workdir)]) == 0
    out = workdir / "out"
    expected = [
        "reviews_clean.jsonl",
        "sentences.jsonl",
        "vocab.json",
        "model.json",
        "assignments.csv",
        "topics.csv",
        "coherence.csv",
        "topic_labels.csv",
        "sentiment.csv",
        "feature_matrix.csv",
        "cv_kappa.csv",
        "gain.csv",
        "gain_importance.svg",
        "shap_summary.csv",
        "shap_rows.csv",
        "beeswarm_negative.svg",
        "beeswarm_neutral.svg",
        "beeswarm_positive.svg",
        "report.json",
        "manifest.json",
    ]
    for name in expected:
        assert (out / name).exists(), name
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert set(manifest["stages"]) == {
        "ingest", "preprocess", "topics", "sentiment", "features", "train", "explain", "report",
    }
    report = json.loads((out / "report.json").read_text())
    assert len(report["artifacts"]) >= 7


def test_stages_run_individually(workdir):
    for stage in ("ingest", "preprocess", "topics", "sentiment", "features"):
        assert main([stage, *cfg_args(workdir)]) == 0
    with open(workdir / "out" / "assignments.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and {"review_id", "sentence_index", "dominant_topic"} <= set(rows[0])


def test_stage_out_of_order_fails_cleanly(workdir):
    assert main(["train", *cfg_args(workdir)]) == 1


def test_config_with_both_fixed_and_hpo_is_validation_error(workdir, capsys):
    bad = SMALL_CONFIG.replace("mode = fixed", "mode = fixed\nbudget = 20")
    (workdir / "pipeline.cfg").write_text(bad)
    assert main(["run", *cfg_args(workdir)]) == 2
    assert not (workdir / "out").exists()  # validation precedes any work
    assert "exactly one mode" in capsys.readouterr().err


def test_hpo_mode_keys_reject_fixed_params(workdir):
    bad = SMALL_CONFIG.replace("mode = fixed", "mode = hpo")
    (workdir / "pipeline.cfg").write_text(bad)
    with pytest.raises(ConfigError, match="fixed-parameter keys"):
        load_config(workdir / "pipeline.cfg")


def test_empty_input_halts_at_ingest(workdir):
    (workdir / "reviews.jsonl").write_text("")
    assert main(["ingest", *cfg_args(workdir)]) == 1
    manifest = json.loads((workdir / "out" / "manifest.json").read_text())
    assert manifest["status"] == "failed:ingest"


def test_topics_hpo_flag_runs_search(workdir):
    cfg = SMALL_CONFIG.replace("iterations = 80", "iterations = 40")
    cfg = cfg.replace(
        "[sentiment]", "budget = 4\nn_startup = 2\nk_min = 3\nk_max = 5\n\n[sentiment]"
    )
    cfg = cfg.replace("mode = fixed\nk = 4\nalpha = 0.2\neta = 0.1\n", "mode = hpo\n")
    (workdir / "pipeline.cfg").write_text(cfg)
    for stage in ("ingest", "preprocess"):
        assert main([stage, *cfg_args(workdir)]) == 0
    assert main(["topics", *cfg_args(workdir), "--hpo"]) == 0
    with open(workdir / "out" / "hpo_history.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    best = json.loads((workdir / "out" / "hpo_best.json").read_text())
    assert 3 <= best["K"] <= 5


def test_external_sidecar_provider(workdir):
    for stage in ("ingest", "preprocess"):
        assert main([stage, *cfg_args(workdir)]) == 0
    sentences = [
        json.loads(line) for line in (workdir / "out" / "sentences.jsonl").read_text().splitlines()
    ]
    sidecar = workdir / "sidecar.csv"
    with open(sidecar, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["review_id", "sentence_index", "label", "p"])
        for s in sentences[:-2]:  # leave two sentences unknown
            writer.writerow([s["review_id"], s["index"], "POSITIVE", "0.9"])
    cfg = SMALL_CONFIG.replace(
        "provider = lexicon", f"provider = external\nsidecar = {sidecar}"
    )
    (workdir / "pipeline.cfg").write_text(cfg)
    assert main(["sentiment", *cfg_args(workdir)]) == 0
    manifest = json.loads((workdir / "out" / "manifest.json").read_text())
    info = manifest["stages"]["sentiment"]["info"]
    assert info["n_unscored"] == 2
    with open(workdir / "out" / "sentiment.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert all(r["label"] == "POSITIVE" for r in rows)


def test_topic_label_mapping_applied_and_unknown_ignored(workdir, capsys):
    assert main(["run", *cfg_args(workdir)]) == 0
    mapping = workdir / "labels.csv"
    mapping.write_text("topic_id,label\n0,Quality of rooms\n9,Ghost topic\n")
    cfg = SMALL_CONFIG.replace("[run]", "labels = labels.csv\n\n[run]")
    (workdir / "pipeline.cfg").write_text(cfg)
    assert main(["report", *cfg_args(workdir)]) == 0
    err_or_out = capsys.readouterr()
    assert "unknown topic 9" in err_or_out.out
    gain = (workdir / "out" / "gain.csv").read_text()
    assert "Quality of rooms" in gain
    labels = (workdir / "out" / "topic_labels.csv").read_text()
    assert "Topic 2" in labels  # unmapped topics keep defaults


def test_duplicate_topic_labels_accepted_with_warning(workdir, capsys):
    assert main(["run", *cfg_args(workdir)]) == 0
    mapping = workdir / "labels.csv"
    mapping.write_text("topic_id,label\n0,Ambience\n1,Ambience\n")
    cfg = SMALL_CONFIG.replace("[run]", "labels = labels.csv\n\n[run]")
    (workdir / "pipeline.cfg").write_text(cfg)
    assert main(["report", *cfg_args(workdir)]) == 0
    assert "more than one topic" in capsys.readouterr().out
    labels = (workdir / "out" / "topic_labels.csv").read_text()
    assert labels.count("Ambience") == 2


def test_missing_config_file_is_validation_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_unknown_classifier_is_validation_error(workdir):
    cfg = SMALL_CONFIG.replace("logistic, random_forest, gradient_boosting", "svm")
    (workdir / "pipeline.cfg").write_text(cfg)
    assert main(["run", *cfg_args(workdir)]) == 2


def test_seed_and_out_overrides(workdir):
    alt = workdir / "alt_out"
    assert main(["ingest", *cfg_args(workdir, "--seed", "99", "--out", str(alt))]) == 0
    manifest = json.loads((alt / "manifest.json").read_text())
    assert manifest["seed"] == 99
