"""Deterministic pipeline orchestration with hashed artifact manifests.

Stages follow the training recipe: one LM per monolingual corpus, dev-set
weight estimation, static combination, optional entropy pruning, then
perplexity/OOV evaluation. Lexicon and dialect-mapping workflows reuse the
same artifact and manifest conventions. Reruns with identical inputs and
parameters produce byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

from asrlm import dialectmap, lexg2p, scorer
from asrlm.mixture import (
    InterpolationWeights,
    em_weights,
    interpolate_static,
    perplexity_mixture,
    save_weights,
)
from asrlm.ngramcore import (
    count_ngrams,
    estimate_discounts,
    oov_rate,
    perplexity,
    train_mkn,
    write_arpa,
)
from asrlm.pruner import prune_entropy
from asrlm.textcorpus import build_vocabulary, load_corpus, word_frequencies


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: str):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


@dataclass
class PipelineConfig:
    """Flat pipeline configuration; file keys `corpus.<id>=<path>` add corpora."""

    language: str = "und"
    corpora: tuple[tuple[str, str], ...] = ()
    dev: str = ""
    test: str | None = None
    order: int = 4
    min_count: int = 1
    max_size: int | None = None
    theta: float | None = None
    oov_policy: str = "exclude"
    lowercase: bool = False
    strip_punct: bool = False
    em_tol: float = 1e-6
    em_max_iter: int = 100
    seed: int = 0
    seed_lexicon: str | None = None
    medical_lexicon: str | None = None
    word_list: str | None = None
    g2p_order: int = 3
    g2p_max_letters: int = 2
    g2p_max_phones: int = 2
    g2p_em_iters: int = 5
    g2p_beam: int = 100
    mapping: str | None = None
    map_eval_text: bool = True
    refs: str | None = None
    hyps: str | None = None
    out_dir: str = "pipeline-out"

    def validate(self) -> None:
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not self.corpora:
            raise ValueError("at least one corpus is required (corpus.<id> = <path>)")
        if not self.dev:
            raise ValueError("a dev corpus is required")
        paths = [p for _, p in self.corpora] + [self.dev]
        for opt in (self.test, self.seed_lexicon, self.medical_lexicon,
                    self.word_list, self.mapping, self.refs, self.hyps):
            if opt:
                paths.append(opt)
        dupes = {p for p in paths if paths.count(p) > 1}
        if dupes:
            raise ValueError(f"referenced paths must be distinct: {sorted(dupes)}")
        for p in paths:
            if not os.access(p, os.R_OK):
                raise ValueError(f"cannot read {p}")

    def input_paths(self) -> dict[str, str]:
        named = {f"corpus.{cid}": path for cid, path in self.corpora}
        named["dev"] = self.dev
        for key in ("test", "seed_lexicon", "medical_lexicon", "word_list",
                    "mapping", "refs", "hyps"):
            value = getattr(self, key)
            if value:
                named[key] = value
        return named


_BOOL_KEYS = {"lowercase", "strip_punct", "map_eval_text"}
_INT_KEYS = {"order", "min_count", "max_size", "em_max_iter", "seed", "g2p_order",
             "g2p_max_letters", "g2p_max_phones", "g2p_em_iters", "g2p_beam"}
_FLOAT_KEYS = {"theta", "em_tol"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if key in _INT_KEYS:
        return int(raw) if raw else None
    if key in _FLOAT_KEYS:
        return float(raw) if raw else None
    return raw or None


def parse_config(path: str | Path | None = None, overrides=()) -> PipelineConfig:
    """Read `key = value` lines (# comments allowed) plus key=value overrides."""
    known = {f.name for f in fields(PipelineConfig)} - {"corpora"}
    corpora: list[tuple[str, str]] = []
    values: dict = {}

    def absorb(key: str, raw: str, where: str):
        key = key.strip()
        if key.startswith("corpus."):
            cid = key[len("corpus."):]
            if not cid or any(cid == c for c, _ in corpora):
                raise ValueError(f"{where}: bad or duplicate corpus id {cid!r}")
            corpora.append((cid, raw.strip()))
            return
        if key not in known:
            raise ValueError(f"{where}: unknown configuration key {key!r}")
        values[key] = _parse_value(key, raw)

    if path is not None:
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = stripped.split("=", 1)
            absorb(key, raw, f"{path}:{lineno}")
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        absorb(key, raw, f"override {item!r}")
    return PipelineConfig(corpora=tuple(corpora), **values)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Run:
    """Tracks stages and artifacts and writes the manifest."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out_dir = Path(config.out_dir)
        self.stages: list[str] = []
        self.artifacts: list[str] = []

    def artifact_path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out_dir / name

    def parameters(self) -> dict:
        params = {}
        for f in fields(PipelineConfig):
            if f.name == "out_dir":
                continue  # self-referential, not an input
            value = getattr(self.config, f.name)
            if f.name == "corpora":
                value = [list(pair) for pair in value]
            params[f.name] = value
        return params

    def write_manifest(self, status: str, failed_stage: str | None = None) -> None:
        manifest = {
            "status": status,
            "seed": self.config.seed,
            "parameters": self.parameters(),
            "inputs": {
                name: _sha256(Path(path))
                for name, path in sorted(self.config.input_paths().items())
            },
            "stages": self.stages,
            "artifacts": {
                name: _sha256(self.out_dir / name)
                for name in sorted(set(self.artifacts))
                if (self.out_dir / name).exists()
            },
        }
        if failed_stage:
            manifest["failed_stage"] = failed_stage
        payload = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        (self.out_dir / "manifest.json").write_text(payload, encoding="utf-8")


def _ppl_line(model_id: str, eval_id: str, report) -> str:
    return (
        f"{model_id}\t{eval_id}\t{report.sentences}\t{report.scored_tokens}\t"
        f"{report.oov_tokens}\t{report.log10_prob_sum:.6f}\t{report.ppl:.6f}\n"
    )


def run_lm_pipeline(config: PipelineConfig) -> dict[str, Path]:
    """Train, combine, prune and evaluate; returns artifact name -> path."""
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise PipelineError("lock", f"{lock} exists; another run owns {out_dir}")
    os.write(fd, str(os.getpid()).encode())
    os.close(fd)
    run = _Run(config)
    stage = "load"
    try:
        corpora = [
            load_corpus(path, lowercase=config.lowercase, strip_punct=config.strip_punct,
                        corpus_id=cid)
            for cid, path in config.corpora
        ]
        dev = load_corpus(config.dev, lowercase=config.lowercase,
                          strip_punct=config.strip_punct, corpus_id="dev")
        test = None
        if config.test:
            test = load_corpus(config.test, lowercase=config.lowercase,
                               strip_punct=config.strip_punct, corpus_id="test")
        run.stages.append(stage)

        stage = "vocab"
        vocab = build_vocabulary(corpora, min_count=config.min_count, max_size=config.max_size)
        vocab.save(run.artifact_path("vocab.txt"))
        run.stages.append(stage)

        stage = "train"
        lms = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for corpus in corpora:
                counts = count_ngrams(corpus, config.order, vocab)
                lm = train_mkn(counts, estimate_discounts(counts))
                write_arpa(lm, run.artifact_path(f"lm.{corpus.id}.arpa"))
                lms.append(lm)
        run.stages.append(stage)

        stage = "weights"
        if len(lms) > 1:
            weights = em_weights(lms, dev, tol=config.em_tol, max_iter=config.em_max_iter)
        else:
            weights = InterpolationWeights(
                lm_ids=(corpora[0].id,), lambdas=(1.0,),
                dev_log10_likelihood=float("nan"),
            )
        save_weights(weights, run.artifact_path("weights.tsv"))
        run.stages.append(stage)

        stage = "merge"
        combined = interpolate_static(lms, weights)
        write_arpa(combined, run.artifact_path("lm.combined.arpa"))
        run.stages.append(stage)

        stage = "prune"
        final_lm = combined
        if config.theta is not None:
            final_lm, report = prune_entropy(combined, config.theta)
            write_arpa(final_lm, run.artifact_path("lm.pruned.arpa"))
            run.artifact_path("prune_report.txt").write_text(report.format(), encoding="utf-8")
        run.stages.append(stage)

        stage = "evaluate"
        eval_sets = [("dev", dev)] + ([("test", test)] if test is not None else [])
        ppl_lines = ["model\teval\tsentences\tscored\toov\tlog10_sum\tppl\n"]
        scored_models = [(corpus.id, lm) for corpus, lm in zip(corpora, lms)]
        scored_models.append(("combined", combined))
        if config.theta is not None:
            scored_models.append(("pruned", final_lm))
        for eval_id, corpus in eval_sets:
            for model_id, lm in scored_models:
                ppl_lines.append(
                    _ppl_line(model_id, eval_id, perplexity(lm, corpus, config.oov_policy))
                )
            if len(lms) > 1:
                mix_report = perplexity_mixture(lms, weights, corpus, config.oov_policy)
                ppl_lines.append(_ppl_line("mixture", eval_id, mix_report))
        run.artifact_path("ppl_report.tsv").write_text("".join(ppl_lines), encoding="utf-8")
        oov_lines = ["eval\toov_rate\n"]
        for eval_id, corpus in eval_sets:
            oov_lines.append(f"{eval_id}\t{oov_rate(vocab, corpus):.8f}\n")
        run.artifact_path("oov_report.tsv").write_text("".join(oov_lines), encoding="utf-8")
        run.stages.append(stage)

        run.write_manifest("ok")
        return {name: out_dir / name for name in run.artifacts} | {
            "manifest.json": out_dir / "manifest.json"
        }
    except PipelineError:
        raise
    except Exception as exc:
        run.write_manifest("failed", failed_stage=stage)
        raise PipelineError(stage, str(exc)) from exc
    finally:
        lock.unlink(missing_ok=True)


def run_lexicon_pipeline(config: PipelineConfig) -> dict[str, Path]:
    """Train G2P on the seed lexicon, extend with corpus OOV words, merge addon."""
    config.validate()
    if not config.seed_lexicon:
        raise PipelineError("lexicon-load", "seed_lexicon is required")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(config)
    stage = "lexicon-load"
    try:
        seed = lexg2p.load_lexicon(config.seed_lexicon)
        corpora = [
            load_corpus(path, lowercase=config.lowercase, strip_punct=config.strip_punct,
                        corpus_id=cid)
            for cid, path in config.corpora
        ]
        run.stages.append(stage)

        stage = "g2p-train"
        model = lexg2p.train_g2p(
            seed,
            order=config.g2p_order,
            max_letters=config.g2p_max_letters,
            max_phones=config.g2p_max_phones,
            em_iters=config.g2p_em_iters,
        )
        lexg2p.save_g2p_model(model, run.artifact_path("g2p_model.json"))
        run.stages.append(stage)

        stage = "extend"
        if config.word_list:
            wanted = [w for w in Path(config.word_list).read_text(encoding="utf-8").split() if w]
        else:
            counts: dict[str, int] = {}
            for corpus in corpora:
                for word, count in word_frequencies(corpus):
                    counts[word] = counts.get(word, 0) + count
            wanted = [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]
        missing = [w for w in wanted if w not in seed.entries]
        extended, report = lexg2p.extend_lexicon(seed, missing, model, beam=config.g2p_beam)
        lexg2p.save_lexicon(extended, run.artifact_path("training_lexicon.tsv"))
        run.stages.append(stage)

        stage = "merge-addon"
        final = extended
        if config.medical_lexicon:
            addon = lexg2p.load_lexicon(config.medical_lexicon)
            final = lexg2p.merge_lexicons(extended, addon, policy="union")
        lexg2p.save_lexicon(final, run.artifact_path("recognition_lexicon.tsv"))
        run.stages.append(stage)

        stage = "lexicon-report"
        lines = [
            f"seed_entries\t{len(seed)}",
            f"extended_entries\t{len(extended)}",
            f"final_entries\t{len(final)}",
            f"g2p_added\t{len(report.added)}",
            f"g2p_failed\t{len(report.failed)}",
            "",
            "provisional (machine-generated, review loanwords):",
        ]
        lines.extend(report.provisional)
        if report.failed:
            lines.append("")
            lines.append("failures:")
            lines.extend(f"{w}\t{why}" for w, why in sorted(report.failed.items()))
        run.artifact_path("lexicon_report.txt").write_text(
            "\n".join(lines) + "\n", encoding="utf-8"
        )
        run.stages.append(stage)
        run.write_manifest("ok")
        return {name: out_dir / name for name in run.artifacts} | {
            "manifest.json": out_dir / "manifest.json"
        }
    except PipelineError:
        raise
    except Exception as exc:
        run.write_manifest("failed", failed_stage=stage)
        raise PipelineError(stage, str(exc)) from exc


def run_dialect_pipeline(config: PipelineConfig) -> dict[str, Path]:
    """Before/after perplexity (and optional WER) for a dialect mapping."""
    config.validate()
    if not config.mapping:
        raise PipelineError("dialect-load", "mapping file is required")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(config)
    stage = "dialect-load"
    try:
        table = dialectmap.load_mapping(config.mapping)
        corpora = [
            load_corpus(path, lowercase=config.lowercase, strip_punct=config.strip_punct,
                        corpus_id=cid)
            for cid, path in config.corpora
        ]
        dev = load_corpus(config.dev, lowercase=config.lowercase,
                          strip_punct=config.strip_punct, corpus_id="dev")
        run.stages.append(stage)

        stage = "dialect-eval"
        cfg = dialectmap.DialectEvalConfig(
            order=config.order,
            interpolate=len(corpora) > 1,
            min_count=config.min_count,
            max_size=config.max_size,
            oov_policy=config.oov_policy,
            map_eval_text=config.map_eval_text,
            em_tol=config.em_tol,
            em_max_iter=config.em_max_iter,
        )
        before, after = dialectmap.mapped_lm_eval(corpora, dev, table, cfg)
        lines = ["condition\tsentences\tscored\toov\tlog10_sum\tppl\n"]
        for cond, report in (("before", before), ("after", after)):
            lines.append(
                f"{cond}\t{report.sentences}\t{report.scored_tokens}\t{report.oov_tokens}\t"
                f"{report.log10_prob_sum:.6f}\t{report.ppl:.6f}\n"
            )
        run.artifact_path("dialect_ppl.tsv").write_text("".join(lines), encoding="utf-8")
        run.stages.append(stage)

        if config.refs and config.hyps:
            stage = "dialect-score"
            refs = scorer.read_trn(config.refs)
            hyps = scorer.read_trn(config.hyps)
            mapped_refs = {
                utt: tuple(table.pairs.get(t, t) for t in tokens)
                for utt, tokens in refs.items()
            }
            out = ["references\twer%\n"]
            out.append(f"original\t{100.0 * scorer.wer(refs, hyps).wer:.4f}\n")
            out.append(f"mapped\t{100.0 * scorer.wer(mapped_refs, hyps).wer:.4f}\n")
            run.artifact_path("dialect_wer.tsv").write_text("".join(out), encoding="utf-8")
            run.stages.append(stage)

        run.write_manifest("ok")
        return {name: out_dir / name for name in run.artifacts} | {
            "manifest.json": out_dir / "manifest.json"
        }
    except PipelineError:
        raise
    except Exception as exc:
        run.write_manifest("failed", failed_stage=stage)
        raise PipelineError(stage, str(exc)) from exc
