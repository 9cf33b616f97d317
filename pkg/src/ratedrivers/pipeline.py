"""End-to-end orchestration: staged runs with derived seeds and a digest manifest.

Each stage reads only files produced by earlier stages (plus the config), and
every random choice derives from the global seed through a stage-name-keyed
hash, so identical (config, seed, data) runs produce byte-identical outputs.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import coherence as coh
from . import corpus as cp
from . import explain as ex
from . import features as ft
from . import hpo
from . import lda
from . import models as md
from . import sentiment as st
from . import svgplot

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

STAGES = (
    "ingest",
    "preprocess",
    "topics",
    "sentiment",
    "features",
    "train",
    "explain",
    "report",
)

_DATA_FILES = ("stopwords_en.txt", "lemmas_en.txt", "sentiment_lexicon_en.txt")

# classifier menu: config name -> (model kind, forced hyperparameters);
# the hist entry is the second-booster variant with quantized split search
CLASSIFIER_CHOICES = {
    "logistic": (md.LOGISTIC, {}),
    "random_forest": (md.RANDOM_FOREST, {}),
    "gradient_boosting": (md.GRADIENT_BOOSTING, {}),
    "gradient_boosting_hist": (md.GRADIENT_BOOSTING, {"split_mode": "hist"}),
}

_HPO_ONLY_KEYS = (
    "budget",
    "k_min",
    "k_max",
    "alpha_lo",
    "alpha_hi",
    "eta_lo",
    "eta_hi",
    "gamma",
    "n_startup",
    "n_candidates",
)
_FIXED_ONLY_KEYS = ("k", "alpha", "eta")


class ConfigError(ValueError):
    """Configuration problems; the CLI maps these to exit code 2."""


class StageError(RuntimeError):
    """Stage execution failures; the CLI maps these to exit code 1."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


def derive_seed(global_seed: int, stage: str) -> int:
    payload = f"{global_seed}:{stage}".encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=4).digest(), "big")


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class PipelineConfig:
    input_path: Path
    input_format: str = "jsonl"
    min_df: int = 5
    stopwords_path: Path | None = None
    lemmas_path: Path | None = None
    topics_mode: str = "fixed"
    k: int | None = None
    alpha: float | None = None
    eta: float | None = None
    iterations: int = 300
    fold_in_iterations: int = 30
    top_words: int = 10
    window: int = 110
    hpo_budget: int = 20
    space: hpo.SearchSpace = field(default_factory=hpo.SearchSpace)
    tpe_gamma: float = 0.25
    tpe_startup: int = 5
    tpe_candidates: int = 24
    provider: str = "lexicon"
    lexicon_path: Path | None = None
    sidecar_path: Path | None = None
    epsilon: float = st.DEFAULT_EPSILON
    aggregation: str = "sum"
    classifiers: tuple[str, ...] = ("logistic", "random_forest", "gradient_boosting")
    folds: int = 3
    model_params: dict = field(default_factory=dict)
    explain_model: str = "gradient_boosting"
    explain_scheme: str = ft.THREE_CLASS
    labels_path: Path | None = None
    seed: int = 0
    out_dir: Path = Path("out")
    config_hash: str = ""

    def validate(self) -> None:
        if self.input_format not in ("jsonl", "csv"):
            raise ConfigError(f"input format must be jsonl or csv, got {self.input_format!r}")
        if not Path(self.input_path).exists():
            raise ConfigError(f"input file not found: {self.input_path}")
        for label, path in (
            ("stopwords", self.stopwords_path),
            ("lemmas", self.lemmas_path),
            ("lexicon", self.lexicon_path),
            ("sidecar", self.sidecar_path),
            ("labels", self.labels_path),
        ):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{label} file not found: {path}")
        if self.topics_mode not in ("fixed", "hpo"):
            raise ConfigError(f"topics mode must be fixed or hpo, got {self.topics_mode!r}")
        if self.topics_mode == "fixed":
            missing = [n for n, v in (("k", self.k), ("alpha", self.alpha), ("eta", self.eta)) if v is None]
            if missing:
                raise ConfigError(f"fixed topics mode needs {missing} in [topics]")
        if self.provider not in ("lexicon", "external"):
            raise ConfigError(f"sentiment provider must be lexicon or external, got {self.provider!r}")
        if self.provider == "external" and self.sidecar_path is None:
            raise ConfigError("external sentiment provider needs sidecar = <path> in [sentiment]")
        if self.aggregation not in ft.AGGREGATIONS:
            raise ConfigError(f"aggregation must be one of {ft.AGGREGATIONS}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        for name in self.classifiers:
            if name not in CLASSIFIER_CHOICES:
                raise ConfigError(f"unknown classifier {name!r}")
        if self.explain_model not in self.classifiers:
            raise ConfigError(f"explain model {self.explain_model!r} is not among the classifiers")
        if CLASSIFIER_CHOICES[self.explain_model][0] == md.LOGISTIC:
            raise ConfigError("explain model must be a tree model (gain importance needs one)")
        if self.explain_scheme not in (ft.FIVE_CLASS, ft.THREE_CLASS):
            raise ConfigError(f"unknown scheme {self.explain_scheme!r}")
        # building the specs revalidates hyperparameters
        for name in self.classifiers:
            self.spec_for(name)

    def spec_for(self, name: str) -> md.ClassifierSpec:
        kind, forced = CLASSIFIER_CHOICES[name]
        try:
            return md.ClassifierSpec(
                kind=kind,
                seed=derive_seed(self.seed, f"train:{name}"),
                params={**self.model_params.get(kind, {}), **forced},
            )
        except md.ModelsError as exc:
            raise ConfigError(str(exc)) from exc

    def preprocess_config(self) -> cp.PreprocessConfig:
        stopwords = (
            frozenset(cp.read_wordlist(self.stopwords_path))
            if self.stopwords_path
            else cp.default_stopwords()
        )
        lemmas = (
            dict(cp.parse_lemma_lines(cp.read_wordlist(self.lemmas_path)))
            if self.lemmas_path
            else cp.default_lemmas()
        )
        return cp.PreprocessConfig(stopwords=stopwords, min_df=self.min_df, lemma_overrides=lemmas)


def _get_typed(section, key, convert, default=None):
    if key not in section:
        return default
    raw = section[key]
    try:
        return convert(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


_MODEL_PARAM_KEYS = {
    "logistic_l2": (md.LOGISTIC, "l2", float),
    "logistic_tol": (md.LOGISTIC, "tol", float),
    "logistic_max_iter": (md.LOGISTIC, "max_iter", int),
    "rf_trees": (md.RANDOM_FOREST, "n_trees", int),
    "rf_depth": (md.RANDOM_FOREST, "max_depth", int),
    "rf_min_leaf": (md.RANDOM_FOREST, "min_samples_leaf", int),
    "gbdt_rounds": (md.GRADIENT_BOOSTING, "n_rounds", int),
    "gbdt_depth": (md.GRADIENT_BOOSTING, "max_depth", int),
    "gbdt_learning_rate": (md.GRADIENT_BOOSTING, "learning_rate", float),
    "gbdt_lambda": (md.GRADIENT_BOOSTING, "reg_lambda", float),
    "gbdt_gamma": (md.GRADIENT_BOOSTING, "gamma_split", float),
    "gbdt_min_leaf": (md.GRADIENT_BOOSTING, "min_samples_leaf", int),
    "gbdt_split_mode": (md.GRADIENT_BOOSTING, "split_mode", str),
    "gbdt_bins": (md.GRADIENT_BOOSTING, "n_bins", int),
}


def load_config(path, seed_override=None, out_override=None) -> PipelineConfig:
    """Parse and validate the declarative key = value config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if "input" not in parser or "path" not in parser["input"]:
        raise ConfigError("config needs [input] path = <reviews file>")

    base = path.parent

    def respath(raw):
        p = Path(raw)
        return p if p.is_absolute() else base / p

    inp = parser["input"]
    pre = parser["preprocess"] if "preprocess" in parser else {}
    top = parser["topics"] if "topics" in parser else {}
    sen = parser["sentiment"] if "sentiment" in parser else {}
    fea = parser["features"] if "features" in parser else {}
    mod = parser["models"] if "models" in parser else {}
    expl = parser["explain"] if "explain" in parser else {}
    run = parser["run"] if "run" in parser else {}

    mode = top.get("mode", "fixed")
    if mode == "fixed":
        foreign = [k for k in _HPO_ONLY_KEYS if k in top]
        if foreign:
            raise ConfigError(
                f"[topics] declares fixed parameters and search keys {foreign}; pick exactly one mode"
            )
    elif mode == "hpo":
        foreign = [k for k in _FIXED_ONLY_KEYS if k in top]
        if foreign:
            raise ConfigError(
                f"[topics] declares hpo mode but fixed-parameter keys {foreign}; pick exactly one mode"
            )

    try:
        space = hpo.SearchSpace(
            k_min=_get_typed(top, "k_min", int, 3),
            k_max=_get_typed(top, "k_max", int, 15),
            alpha_lo=_get_typed(top, "alpha_lo", float, 0.01),
            alpha_hi=_get_typed(top, "alpha_hi", float, 5.0),
            eta_lo=_get_typed(top, "eta_lo", float, 0.01),
            eta_hi=_get_typed(top, "eta_hi", float, 5.0),
        )
    except hpo.HpoError as exc:
        raise ConfigError(str(exc)) from exc

    model_params: dict[str, dict] = {}
    for key, (kind, name, convert) in _MODEL_PARAM_KEYS.items():
        if key in mod:
            model_params.setdefault(kind, {})[name] = _get_typed(mod, key, convert)

    classifiers = tuple(
        c.strip() for c in mod.get("classifiers", "logistic,random_forest,gradient_boosting").split(",")
    )
    for c in classifiers:
        if c not in CLASSIFIER_CHOICES:
            raise ConfigError(f"unknown classifier {c!r} in [models] classifiers")

    seed = seed_override if seed_override is not None else _get_typed(run, "seed", int, 0)
    out_dir = Path(out_override) if out_override is not None else respath(run.get("out", "out"))

    cfg = PipelineConfig(
        input_path=respath(inp["path"]),
        input_format=inp.get("format", "jsonl"),
        min_df=_get_typed(pre, "min_df", int, 5),
        stopwords_path=respath(pre["stopwords"]) if "stopwords" in pre else None,
        lemmas_path=respath(pre["lemmas"]) if "lemmas" in pre else None,
        topics_mode=mode,
        k=_get_typed(top, "k", int),
        alpha=_get_typed(top, "alpha", float),
        eta=_get_typed(top, "eta", float),
        iterations=_get_typed(top, "iterations", int, 300),
        fold_in_iterations=_get_typed(top, "fold_in_iterations", int, 30),
        top_words=_get_typed(top, "top_words", int, 10),
        window=_get_typed(top, "window", int, 110),
        hpo_budget=_get_typed(top, "budget", int, 20),
        space=space,
        tpe_gamma=_get_typed(top, "gamma", float, 0.25),
        tpe_startup=_get_typed(top, "n_startup", int, 5),
        tpe_candidates=_get_typed(top, "n_candidates", int, 24),
        provider=sen.get("provider", "lexicon"),
        lexicon_path=respath(sen["lexicon"]) if "lexicon" in sen else None,
        sidecar_path=respath(sen["sidecar"]) if "sidecar" in sen else None,
        epsilon=_get_typed(sen, "epsilon", float, st.DEFAULT_EPSILON),
        aggregation=fea.get("aggregation", "sum"),
        classifiers=classifiers,
        folds=_get_typed(mod, "folds", int, 3),
        model_params=model_params,
        explain_model=expl.get("model", "gradient_boosting"),
        explain_scheme=expl.get("scheme", ft.THREE_CLASS),
        labels_path=respath(expl["labels"]) if "labels" in expl else None,
        seed=seed,
        out_dir=out_dir,
        config_hash=hashlib.sha256(path.read_bytes()).hexdigest(),
    )
    cfg.validate()
    return cfg


class Manifest:
    """Per-stage seeds, output digests and timings for one pipeline run."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.path = Path(cfg.out_dir) / MANIFEST_NAME
        if self.path.exists():
            self.data = json.loads(self.path.read_text("utf-8"))
        else:
            self.data = {
                "format_version": MANIFEST_VERSION,
                "config_hash": cfg.config_hash,
                "seed": cfg.seed,
                "data_versions": {
                    name: hashlib.sha256(
                        resources.files("ratedrivers.data").joinpath(name).read_bytes()
                    ).hexdigest()
                    for name in _DATA_FILES
                },
                "stages": {},
                "status": "ok",
            }
        self.data["config_hash"] = cfg.config_hash
        self.data["seed"] = cfg.seed

    def record(self, stage: str, outputs: list[Path], seconds: float, info: dict) -> None:
        self.data["stages"][stage] = {
            "seed": derive_seed(self.cfg.seed, stage),
            "outputs": {Path(p).name: _sha256_file(p) for p in sorted(outputs, key=lambda p: Path(p).name)},
            "seconds": round(seconds, 3),
            "info": info,
        }
        self.data["status"] = "ok"
        self.data.pop("failure", None)
        self._write()

    def mark_failure(self, stage: str, message: str) -> None:
        self.data["status"] = f"failed:{stage}"
        self.data["failure"] = {"stage": stage, "message": message}
        self._write()

    def _write(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n", "utf-8")

    def output_digests(self) -> dict:
        return {
            stage: entry["outputs"] for stage, entry in sorted(self.data["stages"].items())
        }


def _out(cfg: PipelineConfig, name: str) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _run_stage(cfg: PipelineConfig, manifest: Manifest, name: str, fn) -> dict:
    start = time.perf_counter()
    try:
        outputs, info = fn(cfg)
    except StageError:
        raise
    except Exception as exc:
        manifest.mark_failure(name, str(exc))
        raise StageError(name, str(exc)) from exc
    manifest.record(name, outputs, time.perf_counter() - start, info)
    return info


# ---------------------------------------------------------------- stages


def stage_ingest(cfg: PipelineConfig):
    reviews = cp.load_reviews(cfg.input_path, cfg.input_format)
    if len(reviews) == 0:
        raise ValueError(f"no usable reviews in {cfg.input_path} (skipped {reviews.n_skipped})")
    path = _out(cfg, "reviews_clean.jsonl")
    with open(path, "w", encoding="utf-8") as fh:
        for r in reviews:
            row = {"review_id": r.review_id, "hotel_id": r.hotel_id, "rating": r.rating, "text": r.text}
            if r.state is not None:
                row["state"] = r.state
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return [path], {"n_reviews": len(reviews), "n_skipped": reviews.n_skipped}


def _read_reviews_clean(cfg) -> list[cp.Review]:
    path = Path(cfg.out_dir) / "reviews_clean.jsonl"
    if not path.exists():
        raise ValueError("missing reviews_clean.jsonl; run the ingest stage first")
    reviews = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            reviews.append(
                cp.Review(
                    review_id=row["review_id"],
                    hotel_id=row["hotel_id"],
                    rating=row["rating"],
                    text=row["text"],
                    state=row.get("state"),
                )
            )
    return reviews


def stage_preprocess(cfg: PipelineConfig):
    reviews = _read_reviews_clean(cfg)
    pconfig = cfg.preprocess_config()
    sentences: list[cp.Sentence] = []
    for review in reviews:
        sentences.extend(cp.preprocess_review(review, pconfig))
    vocab = cp.build_vocabulary(sentences, pconfig)
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty after rare-word filtering; lower min_df?")
    spath = _out(cfg, "sentences.jsonl")
    with open(spath, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(
                json.dumps(
                    {"review_id": s.review_id, "index": s.index, "raw": s.raw, "tokens": list(s.tokens)},
                    ensure_ascii=False,
                )
                + "\n"
            )
    vpath = _out(cfg, "vocab.json")
    vpath.write_text(json.dumps(vocab.to_dict()), "utf-8")
    return [spath, vpath], {"n_sentences": len(sentences), "vocab_size": len(vocab)}


def _read_sentences(cfg) -> list[cp.Sentence]:
    path = Path(cfg.out_dir) / "sentences.jsonl"
    if not path.exists():
        raise ValueError("missing sentences.jsonl; run the preprocess stage first")
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            out.append(cp.Sentence(row["review_id"], row["index"], row["raw"], tuple(row["tokens"])))
    return out


def _read_vocab(cfg) -> cp.Vocabulary:
    path = Path(cfg.out_dir) / "vocab.json"
    if not path.exists():
        raise ValueError("missing vocab.json; run the preprocess stage first")
    return cp.Vocabulary.from_dict(json.loads(path.read_text("utf-8")))


def _read_labels(cfg, k: int) -> list[str]:
    """Display label per topic: the mapping file where provided, Topic k otherwise."""
    labels = [f"Topic {i + 1}" for i in range(k)]
    if cfg.labels_path is None:
        return labels
    seen: dict[str, int] = {}
    with open(cfg.labels_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or row[0].strip().lower() == "topic_id":
                continue
            try:
                tid = int(row[0])
            except ValueError:
                continue
            if not (0 <= tid < k):
                print(f"warning: label mapping names unknown topic {tid}; ignored")
                continue
            label = row[1].strip()
            if label in seen and seen[label] != tid:
                print(f"warning: label {label!r} applied to more than one topic")
            seen[label] = tid
            labels[tid] = label
    return labels


def stage_topics(cfg: PipelineConfig, force_hpo: bool = False):
    sentences = _read_sentences(cfg)
    vocab = _read_vocab(cfg)
    docs = [cp.to_bow(s, vocab) for s in sentences]
    token_lists = [list(s.tokens) for s in sentences]
    stage_seed = derive_seed(cfg.seed, "topics")
    outputs = []
    info: dict = {}

    use_hpo = force_hpo or cfg.topics_mode == "hpo"
    if use_hpo:
        nonempty = [d for d in docs if d.counts]

        def objective(params: hpo.TrialParams, seed: int) -> float:
            model = lda.train_lda(
                nonempty, vocab, params.k, params.alpha, params.eta,
                iterations=cfg.iterations, seed=seed,
            )
            return coh.cv_report(model, token_lists, top_n=cfg.top_words, window=cfg.window).aggregate

        tpe = hpo.TpeConfig(
            gamma=cfg.tpe_gamma,
            n_startup=cfg.tpe_startup,
            n_candidates=cfg.tpe_candidates,
            seed=stage_seed,
        )
        best, history = hpo.optimize(objective, cfg.space, cfg.hpo_budget, tpe)
        hist_path = _out(cfg, "hpo_history.csv")
        hpo.history_to_csv(history, hist_path)
        best_path = _out(cfg, "hpo_best.json")
        hpo.best_trial_to_json(best, best_path)
        outputs += [hist_path, best_path]
        info["hpo_best"] = {"K": best.params.k, "alpha": best.params.alpha, "eta": best.params.eta}
        k, alpha, eta, train_seed = best.params.k, best.params.alpha, best.params.eta, best.seed
    else:
        k, alpha, eta, train_seed = cfg.k, cfg.alpha, cfg.eta, stage_seed

    nonempty = [d for d in docs if d.counts]
    model = lda.train_lda(nonempty, vocab, k, alpha, eta, iterations=cfg.iterations, seed=train_seed)
    mpath = _out(cfg, "model.json")
    model.save(mpath)
    outputs.append(mpath)

    assignments = lda.assign_topics(
        model, docs, fold_in_iterations=cfg.fold_in_iterations, seed=derive_seed(cfg.seed, "assign")
    )
    apath = _out(cfg, "assignments.csv")
    with open(apath, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["review_id", "sentence_index", "dominant_topic"])
        for a in assignments:
            writer.writerow([a.review_id, a.index, "" if a.dominant is None else a.dominant])
    outputs.append(apath)

    tpath = _out(cfg, "topics.csv")
    with open(tpath, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic_id", "rank", "word", "probability"])
        for topic in range(model.K):
            for rank, (word, prob) in enumerate(lda.top_words(model, topic, cfg.top_words)):
                writer.writerow([topic, rank + 1, word, f"{prob:.6f}"])
    outputs.append(tpath)

    report = coh.cv_report(model, token_lists, top_n=cfg.top_words, window=cfg.window)
    cpath = _out(cfg, "coherence.csv")
    report.to_csv(cpath)
    outputs.append(cpath)
    info["coherence_cv_mean"] = round(report.aggregate, 6)
    info["K"] = model.K

    lpath = _out(cfg, "topic_labels.csv")
    labels = _read_labels(cfg, model.K)
    with open(lpath, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic_id", "label"])
        for tid, label in enumerate(labels):
            writer.writerow([tid, label])
    outputs.append(lpath)
    return outputs, info


def _read_model(cfg) -> lda.LdaModel:
    path = Path(cfg.out_dir) / "model.json"
    if not path.exists():
        raise ValueError("missing model.json; run the topics stage first")
    return lda.LdaModel.load(path)


def stage_sentiment(cfg: PipelineConfig):
    sentences = _read_sentences(cfg)
    if cfg.provider == "lexicon":
        lexicon = st.load_lexicon(cfg.lexicon_path) if cfg.lexicon_path else st.default_lexicon()
        provider = st.LexiconProvider(lexicon)
    else:
        provider = st.ExternalScoresProvider(st.load_external_scores(cfg.sidecar_path))
    path = _out(cfg, "sentiment.csv")
    n_scored = 0
    n_unscored = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["review_id", "sentence_index", "label", "p", "score"])
        for s in sentences:
            try:
                pred = provider.predict(s)
            except st.NoSentimentError:
                n_unscored += 1
                continue
            score = st.logit_score(pred, epsilon=cfg.epsilon, key=s.key)
            writer.writerow([s.review_id, s.index, pred.label, f"{pred.p:.6f}", f"{score.value:.6f}"])
            n_scored += 1
    return [path], {"n_scored": n_scored, "n_unscored": n_unscored}


def stage_features(cfg: PipelineConfig):
    reviews = _read_reviews_clean(cfg)
    model = _read_model(cfg)
    out_dir = Path(cfg.out_dir)

    assign_path = out_dir / "assignments.csv"
    if not assign_path.exists():
        raise ValueError("missing assignments.csv; run the topics stage first")
    topic_of: dict[tuple[str, int], int | None] = {}
    with open(assign_path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["review_id"], int(row["sentence_index"]))
            topic_of[key] = int(row["dominant_topic"]) if row["dominant_topic"] != "" else None

    senti_path = out_dir / "sentiment.csv"
    if not senti_path.exists():
        raise ValueError("missing sentiment.csv; run the sentiment stage first")
    score_of: dict[tuple[str, int], float] = {}
    with open(senti_path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            score_of[(row["review_id"], int(row["sentence_index"]))] = float(row["score"])

    by_review: dict[str, list[tuple[int | None, float | None]]] = {}
    for (rid, idx), topic in topic_of.items():
        by_review.setdefault(rid, []).append((topic, score_of.get((rid, idx))))

    vectors = []
    n_dropped = 0
    for review in reviews:
        records = by_review.get(review.review_id)
        if not records:
            n_dropped += 1  # no parsed sentences at all
            continue
        vectors.append(
            ft.assemble(review.review_id, records, review.rating, model.K, cfg.aggregation)
        )
    feature_names = _read_labels(cfg, model.K)
    matrix = ft.build_matrix(vectors, cfg.explain_scheme, feature_names=feature_names)

    mpath = _out(cfg, "feature_matrix.csv")
    matrix.to_csv(mpath)
    dpath = _out(cfg, "design_matrix.json")
    dpath.write_text(
        json.dumps(
            {
                "X": matrix.X.tolist(),
                "review_ids": matrix.review_ids,
                "ratings": matrix.ratings,
                "feature_names": matrix.feature_names,
            }
        ),
        "utf-8",
    )
    dist = {k: round(v, 4) for k, v in matrix.class_distribution().items()}
    return [mpath, dpath], {
        "n_rows": matrix.n_rows,
        "n_dropped": n_dropped,
        "class_distribution": dist,
    }


def _read_design_matrix(cfg, scheme: str) -> ft.DesignMatrix:
    path = Path(cfg.out_dir) / "design_matrix.json"
    if not path.exists():
        raise ValueError("missing design_matrix.json; run the features stage first")
    data = json.loads(path.read_text("utf-8"))
    return ft.DesignMatrix(
        X=np.asarray(data["X"], dtype=np.float64),
        review_ids=data["review_ids"],
        ratings=data["ratings"],
        scheme=scheme,
        feature_names=data["feature_names"],
    )


def _model_artifact_name(kind: str, scheme: str) -> str:
    return f"model_{kind}_{scheme}.json"


def stage_train(cfg: PipelineConfig):
    rows = []
    outputs = []
    info: dict = {}
    cv_seed = derive_seed(cfg.seed, "cv")
    for scheme in (ft.FIVE_CLASS, ft.THREE_CLASS):
        matrix = _read_design_matrix(cfg, scheme)
        for name in cfg.classifiers:
            result = md.cross_validate(matrix, cfg.spec_for(name), folds=cfg.folds, seed=cv_seed)
            rows.append((name, scheme, result))
            info[f"kappa_{name}_{scheme}"] = round(result.mean_kappa, 4)
    kpath = _out(cfg, "cv_kappa.csv")
    md.cv_report_to_csv(rows, kpath)
    outputs.append(kpath)
    # final fits on the explain scheme back the attribution stage
    matrix = _read_design_matrix(cfg, cfg.explain_scheme)
    for name in cfg.classifiers:
        model = md.train(matrix, cfg.spec_for(name))
        path = _out(cfg, _model_artifact_name(name, cfg.explain_scheme))
        md.save_model(model, path)
        outputs.append(path)
    return outputs, info


def _explain_artifacts(cfg: PipelineConfig):
    """Gain and Shapley artifacts for the configured model; used by explain and report."""
    matrix = _read_design_matrix(cfg, cfg.explain_scheme)
    model_path = Path(cfg.out_dir) / _model_artifact_name(cfg.explain_model, cfg.explain_scheme)
    if not model_path.exists():
        raise ValueError(f"missing {model_path.name}; run the train stage first")
    model = md.load_model(model_path)
    labels = _read_labels(cfg, len(matrix.feature_names))
    matrix.feature_names = labels
    model.feature_names = labels  # reports show current display labels

    outputs = []
    importance = ex.gain_importance(model)
    gpath = _out(cfg, "gain.csv")
    importance.to_csv(gpath)
    outputs.append(gpath)
    gsvg = _out(cfg, "gain_importance.svg")
    svgplot.bar_chart(
        importance.ranked(),
        gsvg,
        title="Overall feature importance (gain)",
        x_label="total split gain",
    )
    outputs.append(gsvg)

    shap = ex.shap_matrix(model, matrix.X)
    rpath = _out(cfg, "shap_rows.csv")
    ex.shap_rows_to_csv(shap, matrix.review_ids, rpath)
    outputs.append(rpath)
    summaries = {label: ex.shap_summary(shap, label, matrix.X) for label in model.classes}
    spath = _out(cfg, "shap_summary.csv")
    ex.shap_summary_to_csv(summaries, spath)
    outputs.append(spath)
    for label in model.classes:
        bpath = _out(cfg, f"beeswarm_{label.lower()}.svg")
        svgplot.beeswarm(summaries[label], bpath, title=f"Feature importance for class {label}")
        outputs.append(bpath)
    top = importance.ranked()[0][0] if importance.ranked() else ""
    return outputs, {"top_feature_by_gain": top}


def stage_explain(cfg: PipelineConfig):
    return _explain_artifacts(cfg)


REPORT_ARTIFACTS = (
    "topics.csv",
    "coherence.csv",
    "topic_labels.csv",
    "feature_matrix.csv",
    "cv_kappa.csv",
    "gain_importance.svg",
    "beeswarm",  # one per class, matched by prefix
)


def stage_report(cfg: PipelineConfig):
    outputs, info = _explain_artifacts(cfg)
    out_dir = Path(cfg.out_dir)
    model = _read_model(cfg)
    lpath = _out(cfg, "topic_labels.csv")
    with open(lpath, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic_id", "label"])
        for tid, label in enumerate(_read_labels(cfg, model.K)):
            writer.writerow([tid, label])
    outputs.append(lpath)
    artifact_index = {}
    for name in REPORT_ARTIFACTS:
        if name == "beeswarm":
            matched = sorted(out_dir.glob("beeswarm_*.svg"))
            if not matched:
                raise ValueError("no beeswarm figures found; run the explain stage first")
            for p in matched:
                artifact_index[p.name] = _sha256_file(p)
            continue
        p = out_dir / name
        if not p.exists():
            raise ValueError(f"missing report artifact {name}; run earlier stages first")
        artifact_index[name] = _sha256_file(p)
    rpath = _out(cfg, "report.json")
    rpath.write_text(json.dumps({"artifacts": artifact_index}, indent=2, sort_keys=True) + "\n", "utf-8")
    outputs.append(rpath)
    info["n_artifacts"] = len(artifact_index)
    return outputs, info


_STAGE_FNS = {
    "ingest": stage_ingest,
    "preprocess": stage_preprocess,
    "topics": stage_topics,
    "sentiment": stage_sentiment,
    "features": stage_features,
    "train": stage_train,
    "explain": stage_explain,
    "report": stage_report,
}


def run_stage(cfg: PipelineConfig, name: str, force_hpo: bool = False) -> dict:
    if name not in _STAGE_FNS:
        raise ConfigError(f"unknown stage {name!r}")
    manifest = Manifest(cfg)
    fn = _STAGE_FNS[name]
    if name == "topics":
        return _run_stage(cfg, manifest, name, lambda c: stage_topics(c, force_hpo=force_hpo))
    return _run_stage(cfg, manifest, name, fn)


def run_pipeline(cfg: PipelineConfig, force_hpo: bool = False) -> Manifest:
    """Execute every stage in order; halts at the first failing stage."""
    manifest = Manifest(cfg)
    for name in STAGES:
        if name == "topics":
            _run_stage(cfg, manifest, name, lambda c: stage_topics(c, force_hpo=force_hpo))
        else:
            _run_stage(cfg, manifest, name, _STAGE_FNS[name])
    return manifest
