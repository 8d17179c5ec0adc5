#!/usr/bin/env python3
"""Regenerate the bundled synthetic fixtures (deterministic, seeded).

The fixtures emulate the shape of a conversational-ASR text setup: three
monolingual corpora with different word distributions, dev/test sets, a seed
pronunciation lexicon, a medical-term addon lexicon, a dialect corpus with a
hand-written mapping, scoring files, and a pipeline configuration.
"""

from __future__ import annotations

import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"

BASE_WORDS = [
    "ja", "nein", "gut", "heute", "morgen", "schmerz", "kopf", "arm", "bein",
    "fieber", "husten", "arzt", "termin", "bitte", "danke", "wasser", "essen",
    "schlafen", "hier", "dort", "stark", "leicht", "seit", "tagen", "wochen",
]
MEDICAL_WORDS = ["tablette", "infusion", "roentgen", "allergie", "diagnose", "rezept"]
DIALECT_OF = {"heute": "heit", "gut": "guat", "nein": "naa", "kopf": "schaedel"}
PHONES = set("abcdefghijklmnoprstuvwz")


def sentence(rng: random.Random, words, lo=2, hi=9) -> str:
    return " ".join(rng.choice(words) for _ in range(rng.randint(lo, hi)))


def corpus_text(rng, words, n, bias=()) -> str:
    pool = list(words) + list(bias) * 3
    return "\n".join(sentence(rng, pool) for _ in range(n)) + "\n"


def naive_pron(word: str) -> str:
    return " ".join(ch for ch in word if ch in PHONES)


def main() -> None:
    rng = random.Random(2024)
    ROOT.mkdir(exist_ok=True)

    (ROOT / "news.txt").write_text(
        corpus_text(rng, BASE_WORDS, 120, bias=["heute", "morgen", "termin"]),
        encoding="utf-8",
    )
    (ROOT / "medical.txt").write_text(
        corpus_text(rng, BASE_WORDS + MEDICAL_WORDS, 100, bias=MEDICAL_WORDS),
        encoding="utf-8",
    )
    (ROOT / "dialogue.txt").write_text(
        corpus_text(rng, BASE_WORDS, 140, bias=["ja", "nein", "bitte", "danke"]),
        encoding="utf-8",
    )
    # A couple of words never seen in training keep the OOV rate nonzero.
    rare = ["xylometazolin", "otoskopie"]
    (ROOT / "dev.txt").write_text(
        corpus_text(rng, BASE_WORDS + MEDICAL_WORDS + rare, 30), encoding="utf-8"
    )
    (ROOT / "test.txt").write_text(
        corpus_text(rng, BASE_WORDS + MEDICAL_WORDS + rare, 30), encoding="utf-8"
    )

    # Dialect corpus: base-language sentences with dialect variants mixed in.
    dialect_lines = []
    for _ in range(90):
        toks = sentence(rng, BASE_WORDS).split()
        dialect_lines.append(
            " ".join(DIALECT_OF.get(t, t) if rng.random() < 0.7 else t for t in toks)
        )
    (ROOT / "dialect.txt").write_text("\n".join(dialect_lines) + "\n", encoding="utf-8")
    (ROOT / "mapping.tsv").write_text(
        "".join(f"{d}\t{w}\tmanual\n" for w, d in sorted(DIALECT_OF.items(), key=lambda kv: kv[1])),
        encoding="utf-8",
    )

    # Seed lexicon covers the base words; medical terms arrive via the addon.
    seed_lines = [f"{w}\t{naive_pron(w)}\n" for w in sorted(BASE_WORDS)]
    (ROOT / "seed_lexicon.tsv").write_text("".join(seed_lines), encoding="utf-8")
    addon_lines = [f"{w}\t{naive_pron(w)}\n" for w in sorted(MEDICAL_WORDS)]
    (ROOT / "medical_lexicon.tsv").write_text("".join(addon_lines), encoding="utf-8")
    (ROOT / "phonemes.txt").write_text(
        "".join(p + "\n" for p in sorted(PHONES)), encoding="utf-8"
    )

    # Scoring fixtures: the references keep dialect forms, the hypotheses come
    # from a mapped system and use base forms, plus a few injected errors.
    refs, hyps = [], []
    for i in range(12):
        toks = sentence(rng, BASE_WORDS, 3, 8).split()
        hyp = list(toks)
        if rng.random() < 0.5 and hyp:
            hyp[rng.randrange(len(hyp))] = rng.choice(BASE_WORDS)
        if rng.random() < 0.3 and len(hyp) > 1:
            hyp.pop(rng.randrange(len(hyp)))
        ref = [DIALECT_OF.get(t, t) if rng.random() < 0.5 else t for t in toks]
        refs.append(f"utt{i:03d}\t{' '.join(ref)}\n")
        hyps.append(f"utt{i:03d}\t{' '.join(hyp)}\n")
    (ROOT / "refs.tsv").write_text("".join(refs), encoding="utf-8")
    (ROOT / "hyps.tsv").write_text("".join(hyps), encoding="utf-8")

    (ROOT / "pipeline.cfg").write_text(
        "# Synthetic multi-corpus pipeline configuration\n"
        "language = synth\n"
        "corpus.news = fixtures/news.txt\n"
        "corpus.medical = fixtures/medical.txt\n"
        "corpus.dialogue = fixtures/dialogue.txt\n"
        "corpus.dialect = fixtures/dialect.txt\n"
        "dev = fixtures/dev.txt\n"
        "test = fixtures/test.txt\n"
        "order = 4\n"
        "min_count = 1\n"
        "theta = 1e-4\n"
        "oov_policy = exclude\n"
        "seed = 0\n"
        "seed_lexicon = fixtures/seed_lexicon.tsv\n"
        "medical_lexicon = fixtures/medical_lexicon.tsv\n"
        "g2p_order = 2\n"
        "g2p_em_iters = 3\n"
        "mapping = fixtures/mapping.tsv\n"
        "refs = fixtures/refs.tsv\n"
        "hyps = fixtures/hyps.tsv\n"
        "out_dir = pipeline-out\n",
        encoding="utf-8",
    )
    print(f"fixtures written to {ROOT}")


if __name__ == "__main__":
    main()
