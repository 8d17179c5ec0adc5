import math
import random

import pytest

from asrlm.ngramcore import ArpaError, read_arpa, write_arpa
from asrlm.textcorpus import BOS, EOS
from tests.conftest import corpus_of, random_corpus, train_on


def models_equal_within(lm1, lm2, tol=1e-6):
    if lm1.order != lm2.order:
        return False
    for k in range(1, lm1.order + 1):
        t1, t2 = lm1.tables.get(k, {}), lm2.tables.get(k, {})
        if set(t1) != set(t2):
            return False
        for gram, (p1, b1) in t1.items():
            p2, b2 = t2[gram]
            if abs(p1 - p2) > tol:
                return False
            if (b1 or 0.0) - (b2 or 0.0) and abs((b1 or 0.0) - (b2 or 0.0)) > tol:
                return False
    return True


def test_round_trip_preserves_values(tmp_path):
    lm = train_on(corpus_of("a b a\nb c a\nc"), 3)
    p = tmp_path / "m.arpa"
    write_arpa(lm, p)
    assert models_equal_within(lm, read_arpa(p))


def test_write_read_write_byte_identical(tmp_path):
    rng = random.Random(5)
    for i in range(4):
        lm = train_on(random_corpus(rng, max_sentences=20, max_vocab=10), 2 + i % 3)
        p1 = tmp_path / f"m{i}a.arpa"
        p2 = tmp_path / f"m{i}b.arpa"
        write_arpa(lm, p1)
        write_arpa(read_arpa(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


def test_read_hand_written_unigram_file(tmp_path):
    p = tmp_path / "uni.arpa"
    p.write_text(
        "\\data\\\nngram 1=2\n\n\\1-grams:\n-0.30103\ta\n-0.4\t</s>\n\n\\end\\\n",
        encoding="utf-8",
    )
    lm = read_arpa(p)
    assert lm.order == 1
    assert lm.tables[1][("a",)] == (-0.30103, None)
    assert lm.tables[1][(EOS,)] == (-0.4, None)


def test_header_count_mismatch_names_both_numbers(tmp_path):
    p = tmp_path / "bad.arpa"
    p.write_text(
        "\\data\\\nngram 1=3\n\n\\1-grams:\n-0.3\ta\n-0.4\tb\n\n\\end\\\n",
        encoding="utf-8",
    )
    with pytest.raises(ArpaError, match=r"3.*2"):
        read_arpa(p)


def test_missing_end_marker(tmp_path):
    p = tmp_path / "bad.arpa"
    p.write_text("\\data\\\nngram 1=1\n\n\\1-grams:\n-0.3\ta\n", encoding="utf-8")
    with pytest.raises(ArpaError, match="end"):
        read_arpa(p)


def test_malformed_entry_reports_line_number(tmp_path):
    p = tmp_path / "bad.arpa"
    p.write_text(
        "\\data\\\nngram 1=1\n\n\\1-grams:\nnot-a-number\ta\n\n\\end\\\n",
        encoding="utf-8",
    )
    with pytest.raises(ArpaError, match=":5:"):
        read_arpa(p)


def test_backoff_omitted_for_eos_and_top_order(tmp_path):
    lm = train_on(corpus_of("a b a\nb a"), 2)
    p = tmp_path / "m.arpa"
    write_arpa(lm, p)
    in_bigrams = False
    for line in p.read_text(encoding="utf-8").splitlines():
        if line.startswith("\\2-grams"):
            in_bigrams = True
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            continue
        if in_bigrams:
            assert len(fields) == 2
        elif fields[1] == EOS:
            assert len(fields) == 2


def test_written_probs_have_seven_significant_digits(tmp_path):
    lm = train_on(corpus_of("a b a\nb c a"), 2)
    p = tmp_path / "m.arpa"
    write_arpa(lm, p)
    reread = read_arpa(p)
    for gram, (logp, _) in lm.tables[1].items():
        assert math.isclose(reread.tables[1][gram][0], logp, abs_tol=1e-6)
