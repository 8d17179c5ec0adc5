"""Perplexity and out-of-vocabulary evaluation."""

from __future__ import annotations

from dataclasses import dataclass

from asrlm.ngramcore.model import BackoffLM
from asrlm.textcorpus import BOS, EOS, UNK, Corpus, Vocabulary

OOV_POLICIES = ("exclude", "as_unk")


@dataclass(frozen=True)
class PerplexityReport:
    log10_prob_sum: float
    scored_tokens: int
    oov_tokens: int
    sentences: int
    ppl: float

    def format(self) -> str:
        return (
            f"sentences={self.sentences} scored_tokens={self.scored_tokens} "
            f"oov_tokens={self.oov_tokens} log10_prob_sum={self.log10_prob_sum:.6f} "
            f"ppl={self.ppl:.4f}"
        )


def iter_positions(corpus: Corpus, vocab: Vocabulary):
    """Yield (history_tokens, token, is_oov) for every predicted position.

    Histories carry the `<s>` pad and map OOV words to `<unk>`; predicted
    positions are every word plus one `</s>` per sentence.
    """
    for sent in corpus.sentences:
        history: list[str] = [BOS]
        for tok in sent:
            oov = tok not in vocab
            yield tuple(history), tok, oov
            history.append(UNK if oov else tok)
        yield tuple(history), EOS, False


def score_positions(position_log10_probs, oov_flags, sentences: int, oov_policy: str) -> PerplexityReport:
    """Aggregate per-position scores into a report under the given OOV policy."""
    if oov_policy not in OOV_POLICIES:
        raise ValueError(f"unknown OOV policy {oov_policy!r}")
    total = 0.0
    scored = 0
    oov = 0
    for logp, is_oov in zip(position_log10_probs, oov_flags):
        if is_oov and oov_policy == "exclude":
            oov += 1
            continue
        total += logp
        scored += 1
    if scored == 0:
        raise ValueError("no scorable positions (all-OOV corpus under exclude policy)")
    return PerplexityReport(
        log10_prob_sum=total,
        scored_tokens=scored,
        oov_tokens=oov,
        sentences=sentences,
        ppl=10.0 ** (-total / scored),
    )


def perplexity(lm: BackoffLM, corpus: Corpus, oov_policy: str = "exclude") -> PerplexityReport:
    """Corpus perplexity. `exclude` skips OOV positions (counting them);
    `as_unk` scores them as `<unk>`."""
    if len(corpus) == 0:
        raise ValueError(f"corpus {corpus.id!r} is empty")
    logps = []
    flags = []
    for history, token, is_oov in iter_positions(corpus, lm.vocab):
        flags.append(is_oov)
        if is_oov and oov_policy == "exclude":
            logps.append(0.0)
        else:
            logps.append(lm.log_prob(token, history))
    return score_positions(logps, flags, len(corpus), oov_policy)


def oov_rate(vocab: Vocabulary, corpus: Corpus) -> float:
    """Fraction of word tokens absent from the vocabulary (`</s>` not counted)."""
    if corpus.token_count == 0:
        raise ValueError(f"corpus {corpus.id!r} has no tokens")
    oov = 0
    for sent in corpus.sentences:
        for tok in sent:
            if tok not in vocab:
                oov += 1
    return oov / corpus.token_count
