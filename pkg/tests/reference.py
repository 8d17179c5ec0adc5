"""Independent brute-force reference implementations used as test oracles.

Everything here recomputes results directly from first principles (plain
dicts, recursive definitions, exhaustive enumeration) and deliberately shares
no code with the package under test.
"""

from __future__ import annotations


BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


class BruteForceMKN:
    """Direct evaluation of interpolated modified Kneser-Ney probabilities.

    Counts are recomputed from the raw sentences; every conditional is
    evaluated recursively from the defining equations each time it is asked
    for, with no back-off weights or shared tables.
    """

    def __init__(self, sentences, order, vocab_words, discounts=None):
        self.order = order
        self.vocab = set(vocab_words) | {UNK, BOS, EOS}
        self.predicted = sorted(self.vocab - {BOS})
        padded = []
        for sent in sentences:
            mapped = [t if t in self.vocab else UNK for t in sent]
            padded.append([BOS] + mapped + [EOS])
        # Raw counts: unigrams at predicted positions, higher orders as windows.
        self.raw = {k: {} for k in range(1, order + 1)}
        for p in padded:
            for tok in p[1:]:
                self.raw[1][(tok,)] = self.raw[1].get((tok,), 0) + 1
            for k in range(2, order + 1):
                for i in range(len(p) - k + 1):
                    g = tuple(p[i : i + k])
                    self.raw[k][g] = self.raw[k].get(g, 0) + 1
        # Effective counts: continuation counts below the top order, raw for
        # <s>-initial k-grams and at the top order.
        self.eff = {order: dict(self.raw[order])}
        for k in range(1, order):
            lefts = {}
            for g in self.raw[k + 1]:
                lefts.setdefault(g[1:], set()).add(g[0])
            self.eff[k] = {}
            for g, c in self.raw[k].items():
                self.eff[k][g] = c if g[0] == BOS else len(lefts.get(g, ()))
        if discounts is None:
            discounts = {k: self._order_discounts(k) for k in range(1, order + 1)}
        self.discounts = discounts
        # Per-context totals and count-of-count bins, aggregated once.
        self.ctx_stats = {}
        for k in range(1, order + 1):
            stats = {}
            for g, c in self.eff[k].items():
                denom, n1, n2, n3 = stats.get(g[:-1], (0, 0, 0, 0))
                stats[g[:-1]] = (
                    denom + c,
                    n1 + (c == 1),
                    n2 + (c == 2),
                    n3 + (c >= 3),
                )
            self.ctx_stats[k] = stats

    def _order_discounts(self, k):
        cc = {}
        for c in self.eff[k].values():
            cc[c] = cc.get(c, 0) + 1
        n1, n2, n3, n4 = (cc.get(i, 0) for i in (1, 2, 3, 4))
        if 0 in (n1, n2, n3, n4):
            return (0.5, 0.5, 0.5)
        y = n1 / (n1 + 2 * n2)
        trio = (1 - 2 * y * n2 / n1, 2 - 3 * y * n3 / n2, 3 - 4 * y * n4 / n3)
        if any(d <= 0 for d in trio):
            return (0.5, 0.5, 0.5)
        return tuple(min(d, cap) for d, cap in zip(trio, (1.0, 2.0, 3.0)))

    def _discount(self, k, count):
        if count <= 0:
            return 0.0
        d1, d2, d3 = self.discounts[k]
        return d1 if count == 1 else d2 if count == 2 else d3

    def prob(self, word, history=()):
        """p(word | history) by the interpolated recursion, base case uniform."""
        history = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        return self._prob(len(history) + 1, history, word)

    def _prob(self, k, history, word):
        if k == 0:
            return 1.0 / len(self.predicted)
        lower = self._prob(k - 1, history[1:], word)
        stats = self.ctx_stats[k].get(history)
        if stats is None:
            return lower
        denom, n1, n2, n3 = stats
        d1, d2, d3 = self.discounts[k]
        gamma = (d1 * n1 + d2 * n2 + d3 * n3) / denom
        c = self.eff[k].get(history + (word,), 0)
        return max(c - self._discount(k, c), 0.0) / denom + gamma * lower


def brute_edit_distance(ref, hyp):
    """Minimal unit-cost edit distance, full two-row dynamic program."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        cur = [i]
        for j, h in enumerate(hyp, start=1):
            cur.append(min(
                prev[j - 1] + (r != h),  # substitution / match
                prev[j] + 1,             # deletion
                cur[j - 1] + 1,          # insertion
            ))
        prev = cur
    return prev[-1]


def exhaustive_g2p(model, word):
    """Enumerate every graphone segmentation of `word`, score it with the
    model's own conditionals, and rank distinct pronunciations by their best
    segmentation score (lexicographic phoneme tie-break)."""
    by_grapheme = {}
    for gid, g in enumerate(model.graphones):
        by_grapheme.setdefault(g.graphemes, []).append(gid)

    results = []

    def walk(pos, ids):
        if pos == len(word):
            if ids:
                results.append(tuple(ids))
            return
        for length in range(1, model.max_letters + 1):
            piece = word[pos : pos + length]
            if len(piece) < length:
                break
            for gid in by_grapheme.get(piece, ()):
                walk(pos + length, ids + [gid])

    walk(0, [])
    best = {}
    for ids in results:
        score = model.sequence_log10(ids)
        phones = tuple(p for gid in ids for p in model.graphones[gid].phonemes)
        if phones not in best or score > best[phones]:
            best[phones] = score
    return sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
