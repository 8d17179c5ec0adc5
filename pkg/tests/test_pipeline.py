import json
from pathlib import Path

import pytest

from asrlm.cli import main
from asrlm.ngramcore import read_arpa
from asrlm.pipeline import PipelineConfig, PipelineError, parse_config, run_lm_pipeline

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def write_corpus(path: Path, text: str) -> str:
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def small_setup(tmp_path):
    c1 = write_corpus(tmp_path / "c1.txt", "a b a\nb c a\na a b\nc b\n")
    c2 = write_corpus(tmp_path / "c2.txt", "c c b\nb c\nc a c\nb b c\n")
    dev = write_corpus(tmp_path / "dev.txt", "a b c\nc b\n")
    return c1, c2, dev, tmp_path


def test_parse_config_file_and_overrides(tmp_path):
    cfg_file = tmp_path / "p.cfg"
    cfg_file.write_text(
        "# comment\nlanguage = xx\ncorpus.one = a.txt\ncorpus.two = b.txt\n"
        "dev = dev.txt\norder = 3\ntheta = 0.5\nlowercase = true\n",
        encoding="utf-8",
    )
    config = parse_config(cfg_file, overrides=["order=2", "seed=9"])
    assert config.language == "xx"
    assert config.corpora == (("one", "a.txt"), ("two", "b.txt"))
    assert config.order == 2
    assert config.theta == 0.5
    assert config.lowercase is True
    assert config.seed == 9


def test_parse_config_rejects_unknown_keys(tmp_path):
    cfg_file = tmp_path / "p.cfg"
    cfg_file.write_text("nonsense = 1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="nonsense"):
        parse_config(cfg_file)


def test_config_validation_distinct_paths(small_setup):
    c1, c2, dev, tmp = small_setup
    config = PipelineConfig(corpora=(("a", c1), ("b", c1)), dev=dev, out_dir=str(tmp / "o"))
    with pytest.raises(ValueError, match="distinct"):
        config.validate()
    config = PipelineConfig(corpora=(("a", c1),), dev=str(tmp / "nope.txt"), out_dir=str(tmp / "o"))
    with pytest.raises(ValueError, match="cannot read"):
        config.validate()


def test_single_corpus_combined_equals_component(small_setup):
    c1, _, dev, tmp = small_setup
    config = PipelineConfig(
        corpora=(("solo", c1),), dev=dev, order=3, out_dir=str(tmp / "out")
    )
    artifacts = run_lm_pipeline(config)
    solo = (tmp / "out" / "lm.solo.arpa").read_bytes()
    combined = (tmp / "out" / "lm.combined.arpa").read_bytes()
    assert solo == combined
    weights = (tmp / "out" / "weights.tsv").read_text(encoding="utf-8")
    assert weights.splitlines()[0].startswith("solo\t")


def test_pipeline_artifacts_and_manifest(small_setup):
    c1, c2, dev, tmp = small_setup
    config = PipelineConfig(
        corpora=(("first", c1), ("second", c2)),
        dev=dev,
        order=2,
        theta=1e-3,
        out_dir=str(tmp / "out"),
    )
    artifacts = run_lm_pipeline(config)
    expected = {
        "vocab.txt", "lm.first.arpa", "lm.second.arpa", "weights.tsv",
        "lm.combined.arpa", "lm.pruned.arpa", "prune_report.txt",
        "ppl_report.tsv", "oov_report.tsv", "manifest.json",
    }
    assert expected <= set(artifacts)
    manifest = json.loads((tmp / "out" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "ok"
    assert set(manifest["inputs"]) == {"corpus.first", "corpus.second", "dev"}
    for name, digest in manifest["artifacts"].items():
        assert len(digest) == 64
    # The combined model is a valid ARPA file of the right order.
    lm = read_arpa(tmp / "out" / "lm.combined.arpa")
    assert lm.order == 2
    # The pruned model is no larger than the combined one.
    pruned = read_arpa(tmp / "out" / "lm.pruned.arpa")
    assert pruned.total_ngrams() <= lm.total_ngrams()
    # Weights are simplex-valid.
    lines = (tmp / "out" / "weights.tsv").read_text(encoding="utf-8").splitlines()
    lambdas = [float(l.split("\t")[1]) for l in lines]
    assert all(l >= 0 for l in lambdas)
    assert sum(lambdas) == pytest.approx(1.0, abs=1e-9)


def test_pipeline_rerun_is_byte_identical(small_setup):
    c1, c2, dev, tmp = small_setup
    base = dict(corpora=(("first", c1), ("second", c2)), dev=dev, order=2, theta=1e-3)
    run_lm_pipeline(PipelineConfig(out_dir=str(tmp / "o1"), **base))
    run_lm_pipeline(PipelineConfig(out_dir=str(tmp / "o2"), **base))
    names = sorted(p.name for p in (tmp / "o1").iterdir())
    assert names == sorted(p.name for p in (tmp / "o2").iterdir())
    for name in names:
        assert (tmp / "o1" / name).read_bytes() == (tmp / "o2" / name).read_bytes(), name


def test_pipeline_stage_failure_reported(small_setup, tmp_path):
    c1, _, dev, tmp = small_setup
    bad = tmp_path / "bad.txt"
    bad.write_bytes(b"\xff\xfe broken\n")
    config = PipelineConfig(
        corpora=(("bad", str(bad)),), dev=dev, out_dir=str(tmp / "out-bad")
    )
    with pytest.raises(PipelineError, match="load"):
        run_lm_pipeline(config)
    manifest = json.loads((tmp / "out-bad" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "failed"
    assert manifest["failed_stage"] == "load"


def test_pipeline_lock_prevents_concurrent_runs(small_setup):
    c1, _, dev, tmp = small_setup
    out = tmp / "locked"
    out.mkdir()
    (out / ".lock").write_text("held", encoding="utf-8")
    config = PipelineConfig(corpora=(("a", c1),), dev=dev, out_dir=str(out))
    with pytest.raises(PipelineError, match="lock"):
        run_lm_pipeline(config)


def test_cli_lm_train_and_ppl(small_setup, capsys):
    c1, _, dev, tmp = small_setup
    arpa = str(tmp / "m.arpa")
    assert main(["lm", "train", "--corpus", c1, "--order", "2", "--out", arpa]) == 0
    assert main(["lm", "ppl", "--lm", arpa, "--corpus", dev]) == 0
    out = capsys.readouterr().out
    assert "ppl=" in out


def test_cli_score_wer(tmp_path, capsys):
    ref = tmp_path / "ref.tsv"
    hyp = tmp_path / "hyp.tsv"
    ref.write_text("u1\tthe cat sat\n", encoding="utf-8")
    hyp.write_text("u1\tthe cat\n", encoding="utf-8")
    assert main(["score", "wer", "--ref", str(ref), "--hyp", str(hyp)]) == 0
    out = capsys.readouterr().out
    assert "TOTAL\t0\t1\t0\t3\t33.33" in out


def test_cli_score_cer(tmp_path, capsys):
    ref = tmp_path / "ref.tsv"
    hyp = tmp_path / "hyp.tsv"
    ref.write_text("u1\tab cd\n", encoding="utf-8")
    hyp.write_text("u1\tabcd\n", encoding="utf-8")
    assert main(["score", "cer", "--ref", str(ref), "--hyp", str(hyp)]) == 0
    assert "0.00" in capsys.readouterr().out


def test_cli_error_exit_code(tmp_path, capsys):
    missing = str(tmp_path / "missing.arpa")
    assert main(["lm", "ppl", "--lm", missing, "--corpus", missing]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_dialect_and_g2p_round_trip(tmp_path, capsys):
    lex = tmp_path / "lex.tsv"
    lex.write_text("ab\ta b\nba\tb a\naa\ta a\n", encoding="utf-8")
    model = str(tmp_path / "g2p.json")
    assert main([
        "g2p", "train", "--lexicon", str(lex), "--order", "2",
        "--max-letters", "1", "--max-phones", "1", "--em-iters", "3",
        "--out", model,
    ]) == 0
    words = tmp_path / "words.txt"
    words.write_text("bb\n", encoding="utf-8")
    assert main(["g2p", "apply", "--model", model, "--words", str(words)]) == 0
    out = capsys.readouterr().out
    assert "bb\tb b" in out
    extended = str(tmp_path / "ext.tsv")
    assert main([
        "lexicon", "extend", "--lexicon", str(lex), "--model", model,
        "--words", str(words), "--out", extended,
    ]) == 0
    assert "bb\tb b" in Path(extended).read_text(encoding="utf-8")


def test_cli_fixture_pipeline_smoke(tmp_path):
    out = str(tmp_path / "out")
    code = main([
        "pipeline", "run", "--config", str(FIXTURES / "pipeline.cfg"),
        "--set", f"corpus.news={FIXTURES / 'news.txt'}",
        "--out-dir", out,
    ])
    # corpus.news override duplicates the id from the config file.
    assert code == 1


def test_fixture_paths_resolve():
    config = parse_config(FIXTURES / "pipeline.cfg")
    assert len(config.corpora) == 4
    assert config.mapping
