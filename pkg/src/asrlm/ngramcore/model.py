"""Back-off n-gram model structure and probability lookup."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from asrlm.textcorpus import BOS, EOS, Vocabulary

NGram = tuple[str, ...]
# Stored per n-gram: (log10 probability, log10 back-off weight or None).
Entry = tuple[float, float | None]

# Conventional stand-in log10 probability for the never-predicted `<s>` entry.
BOS_LOG10_PROB = -99.0


@dataclass
class BackoffLM:
    """ARPA-style back-off model: per order, n-gram -> (log10 p, log10 bow).

    The back-off weight is absent (None) for the highest order and for
    n-grams that never occur as the context of a stored higher-order n-gram.
    Instances are treated as immutable after construction; concurrent reads
    are safe.
    """

    order: int
    tables: dict[int, dict[NGram, Entry]]
    vocab: Vocabulary
    metadata: dict = field(default_factory=dict)

    def ngrams(self, k: int) -> dict[NGram, Entry]:
        return self.tables.get(k, {})

    def size_by_order(self) -> dict[int, int]:
        return {k: len(self.tables.get(k, {})) for k in range(1, self.order + 1)}

    def total_ngrams(self) -> int:
        return sum(len(t) for t in self.tables.values())

    def stored_log_prob(self, gram: NGram) -> float | None:
        entry = self.tables.get(len(gram), {}).get(gram)
        return entry[0] if entry is not None else None

    def stored_backoff(self, gram: NGram) -> float:
        entry = self.tables.get(len(gram), {}).get(gram)
        if entry is None or entry[1] is None:
            return 0.0
        return entry[1]

    def log_prob(self, word: str, history=()) -> float:
        """log10 p(word | history) via the standard back-off recursion.

        Unknown words (in `word` or `history`) are mapped to `<unk>` first;
        the history is truncated to the model order.
        """
        w = self.vocab.map_token(word)
        hist = tuple(self.vocab.map_token(t) for t in history)
        if self.order > 1:
            hist = hist[-(self.order - 1):]
        else:
            hist = ()
        acc = 0.0
        while True:
            entry = self.tables.get(len(hist) + 1, {}).get(hist + (w,))
            if entry is not None:
                return acc + entry[0]
            if not hist:
                raise KeyError(f"no unigram entry for {w!r}")
            acc += self.stored_backoff(hist)
            hist = hist[1:]

    def clone(self) -> "BackoffLM":
        return BackoffLM(
            order=self.order,
            tables={k: dict(t) for k, t in self.tables.items()},
            vocab=self.vocab,
            metadata=dict(self.metadata),
        )


def sequence_log_prob(lm: BackoffLM, tokens, bos_substitute: bool = True) -> float:
    """log10 of the joint probability of a token sequence via the chain rule.

    Used as the history marginal in pruning. When the sequence starts with
    `<s>`, its dummy unigram probability is replaced by p(`</s>`), the usual
    convention that keeps sentence-initial contexts at a realistic weight.
    """
    total = 0.0
    for i, tok in enumerate(tokens):
        if i == 0 and tok == BOS and bos_substitute:
            total += lm.log_prob(EOS)
        else:
            total += lm.log_prob(tok, tokens[:i])
    return total


def context_probability_sums(lm: BackoffLM):
    """Yield (context, sum over predicted vocab of p(w|context)) for every stored context.

    The empty context (unigram distribution) is included. `<s>` is excluded
    from the summation because it is never predicted.
    """
    predicted = lm.vocab.predicted_words()
    contexts: list[NGram] = [()]
    for k in range(2, lm.order + 1):
        seen: dict[NGram, None] = {}
        for gram in lm.tables.get(k, {}):
            seen.setdefault(gram[:-1])
        contexts.extend(seen.keys())
    for ctx in contexts:
        total = 0.0
        for w in predicted:
            total += 10.0 ** lm.log_prob(w, ctx)
        yield ctx, total


def rebuild_backoffs(lm: BackoffLM) -> None:
    """Recompute every back-off weight so all stored contexts normalize to 1.

    For a context h with stored continuations W: bow(h) = (1 - sum_{w in W}
    p(w|h)) / (1 - sum_{w in W} p(w|h minus first word)), the lower-order
    probabilities evaluated through the model's own recursion. Contexts with
    no stored continuation lose their back-off weight. Processed from short
    contexts to long ones so lower-order weights are final before they are
    referenced.
    """
    for ctx_len in range(1, lm.order):
        ctx_table = lm.tables.get(ctx_len, {})
        children: dict[NGram, list[NGram]] = {}
        for gram in lm.tables.get(ctx_len + 1, {}):
            children.setdefault(gram[:-1], []).append(gram)
        for ctx, entry in ctx_table.items():
            grams = children.get(ctx)
            if not grams:
                if entry[1] is not None:
                    ctx_table[ctx] = (entry[0], None)
                continue
            stored_sum = 0.0
            lower_sum = 0.0
            for gram in grams:
                stored_sum += 10.0 ** lm.tables[ctx_len + 1][gram][0]
                lower_sum += 10.0 ** lm.log_prob(gram[-1], gram[1:-1])
            num = 1.0 - stored_sum
            den = 1.0 - lower_sum
            if num <= 0.0 or den <= 0.0:
                # Context fully covered by stored mass; the weight is unused.
                bow = 0.0
            else:
                bow = math.log10(num) - math.log10(den)
            ctx_table[ctx] = (entry[0], bow)
