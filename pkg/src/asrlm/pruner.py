"""Relative-entropy pruning of back-off n-gram models.

An n-gram is removed when dropping it (and redistributing its mass through
the recomputed back-off weight) would raise the model's training-set
perplexity by less than a relative threshold theta. This is the standard
criterion for shrinking back-off models and gives theta-monotone retained
sets: raising theta never retains an n-gram that a lower theta removed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from asrlm.ngramcore.model import BackoffLM, rebuild_backoffs, sequence_log_prob


@dataclass(frozen=True)
class PruneReport:
    theta: float
    removed_by_order: dict[int, int]
    size_before: dict[int, int]
    size_after: dict[int, int]

    def format(self) -> str:
        lines = [f"theta={self.theta!r}", "order\tbefore\tremoved\tafter"]
        for k in sorted(self.size_before):
            lines.append(
                f"{k}\t{self.size_before[k]}\t{self.removed_by_order.get(k, 0)}\t{self.size_after[k]}"
            )
        total_before = sum(self.size_before.values())
        total_after = sum(self.size_after.values())
        lines.append(f"total\t{total_before}\t{total_before - total_after}\t{total_after}")
        return "\n".join(lines) + "\n"


def prune_entropy(lm: BackoffLM, theta: float) -> tuple[BackoffLM, PruneReport]:
    """Remove n-grams of order >= 2 whose relative perplexity increase is < theta.

    Orders are processed highest first; an n-gram serving as the context of a
    retained higher-order n-gram is never removed. Back-off weights are
    recomputed afterwards so the pruned model still normalizes. Unigrams are
    never touched. A negative theta is a no-op with a warning.
    """
    size_before = lm.size_by_order()
    if theta < 0:
        warnings.warn(f"negative pruning threshold {theta!r}; model left unchanged", stacklevel=2)
        return lm.clone(), PruneReport(
            theta=theta,
            removed_by_order={k: 0 for k in size_before},
            size_before=size_before,
            size_after=size_before,
        )

    pruned = lm.clone()
    removed_by_order: dict[int, int] = {k: 0 for k in size_before}
    for k in range(lm.order, 1, -1):
        # Deltas come from the original model: removals at higher orders do
        # not touch the stored probabilities, weights or marginals they use.
        protected = {g[:-1] for g in pruned.tables.get(k + 1, {})}
        table = pruned.tables[k]
        siblings: dict[tuple, list[tuple]] = {}
        for gram in table:
            siblings.setdefault(gram[:-1], []).append(gram)
        to_remove = []
        for history in sorted(siblings):
            log_bow = lm.stored_backoff(history)
            num = 1.0
            den = 1.0
            cached_lower = {}
            for gram in siblings[history]:
                num -= 10.0 ** table[gram][0]
                lower = lm.log_prob(gram[-1], gram[1:-1])
                cached_lower[gram] = lower
                den -= 10.0 ** lower
            h_marginal = 10.0 ** sequence_log_prob(lm, history)
            for gram in siblings[history]:
                if gram in protected:
                    continue
                logp = table[gram][0]
                p = 10.0 ** logp
                log_plower = cached_lower[gram]
                new_log_bow = math.log10(num + p) - math.log10(den + 10.0 ** log_plower)
                delta_logp = log_plower + new_log_bow - logp
                delta_entropy = -h_marginal * (p * delta_logp + num * (new_log_bow - log_bow))
                if 10.0 ** delta_entropy - 1.0 < theta:
                    to_remove.append(gram)
        for gram in to_remove:
            del table[gram]
        removed_by_order[k] = len(to_remove)
    rebuild_backoffs(pruned)
    pruned.metadata["pruned_theta"] = theta
    return pruned, PruneReport(
        theta=theta,
        removed_by_order=removed_by_order,
        size_before=size_before,
        size_after=pruned.size_by_order(),
    )
