"""Edit-distance alignment, WER/CER scoring and relative error-rate reduction."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

# Backtrace preference at equal cost, best first.
_MATCH, _SUB, _DEL, _INS = "match", "sub", "del", "ins"


@dataclass(frozen=True)
class EditAlignment:
    substitutions: int
    deletions: int
    insertions: int
    hits: int
    ref_length: int
    ops: tuple[tuple[str, str | None, str | None], ...]

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "EditAlignment") -> "EditAlignment":
        return EditAlignment(
            substitutions=self.substitutions + other.substitutions,
            deletions=self.deletions + other.deletions,
            insertions=self.insertions + other.insertions,
            hits=self.hits + other.hits,
            ref_length=self.ref_length + other.ref_length,
            ops=self.ops + other.ops,
        )


EMPTY_ALIGNMENT = EditAlignment(0, 0, 0, 0, 0, ())


@dataclass(frozen=True)
class ScoreReport:
    """Aggregate and per-utterance alignment counts.

    The rate is computed over aggregate counts, (S+D+I)/N, never as a mean of
    per-utterance rates, and may exceed 1 when insertions dominate.
    """

    per_utterance: dict[str, EditAlignment]
    aggregate: EditAlignment
    wer: float | None = None
    cer: float | None = None
    missing_hyps: tuple[str, ...] = ()

    def rate(self) -> float:
        return self.wer if self.wer is not None else self.cer


def align(ref, hyp) -> EditAlignment:
    """Minimal unit-cost alignment of two token sequences.

    Among minimal-cost alignments the one with the fewest substitutions (most
    matches) is chosen, realized by minimizing (cost, substitutions)
    lexicographically; remaining ties during backtrace prefer match >
    substitution > deletion > insertion. This keeps alignments deterministic
    and makes swapping ref and hyp exchange deletions with insertions while
    preserving substitutions.
    """
    ref = tuple(ref)
    hyp = tuple(hyp)
    n, m = len(ref), len(hyp)
    # Pack (cost, substitutions) into one int; subs can never reach BIG.
    big = n + m + 1
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i * big
    for j in range(1, m + 1):
        dist[0][j] = j * big
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        r = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (0 if r == hyp[j - 1] else big + 1)
            row[j] = min(diag, prev[j] + big, row[j - 1] + big)
    ops: list[tuple[str, str | None, str | None]] = []
    i, j = n, m
    s = d = ins = h = 0
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and here == dist[i - 1][j - 1]:
            ops.append((_MATCH, ref[i - 1], hyp[j - 1]))
            h += 1
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and ref[i - 1] != hyp[j - 1] and here == dist[i - 1][j - 1] + big + 1:
            ops.append((_SUB, ref[i - 1], hyp[j - 1]))
            s += 1
            i -= 1
            j -= 1
        elif i > 0 and here == dist[i - 1][j] + big:
            ops.append((_DEL, ref[i - 1], None))
            d += 1
            i -= 1
        else:
            ops.append((_INS, None, hyp[j - 1]))
            ins += 1
            j -= 1
    ops.reverse()
    return EditAlignment(
        substitutions=s,
        deletions=d,
        insertions=ins,
        hits=h,
        ref_length=n,
        ops=tuple(ops),
    )


def _score(refs: dict, hyps: dict, transform) -> tuple[dict, EditAlignment, tuple[str, ...]]:
    unknown = sorted(set(hyps) - set(refs))
    if unknown:
        raise ValueError(f"hypothesis ids without a reference: {unknown}")
    per_utt: dict[str, EditAlignment] = {}
    total = EMPTY_ALIGNMENT
    missing = []
    for utt_id in sorted(refs):
        ref = transform(refs[utt_id])
        if utt_id in hyps:
            hyp = transform(hyps[utt_id])
        else:
            hyp = ()
            missing.append(utt_id)
        alignment = align(ref, hyp)
        per_utt[utt_id] = alignment
        total = total + alignment
    return per_utt, total, tuple(missing)


def wer(refs: dict, hyps: dict) -> ScoreReport:
    """Word error rate over a keyed set of utterances.

    A reference without a hypothesis is scored against the empty sequence
    (all deletions) and listed in the report.
    """
    per_utt, total, missing = _score(refs, hyps, tuple)
    if total.ref_length == 0:
        raise ValueError("total reference length is zero")
    return ScoreReport(
        per_utterance=per_utt,
        aggregate=total,
        wer=total.errors / total.ref_length,
        missing_hyps=missing,
    )


def cer(refs: dict, hyps: dict) -> ScoreReport:
    """Character error rate: tokens are joined without separators before
    character-level alignment, so segmentation differences cost nothing."""

    def to_chars(tokens) -> tuple[str, ...]:
        return tuple("".join(tokens))

    per_utt, total, missing = _score(refs, hyps, to_chars)
    if total.ref_length == 0:
        raise ValueError("total reference length is zero")
    return ScoreReport(
        per_utterance=per_utt,
        aggregate=total,
        cer=total.errors / total.ref_length,
        missing_hyps=missing,
    )


def relative_reduction(base: float, improved: float) -> float:
    """Percent reduction 100*(base - improved)/base; negative when worse."""
    if base <= 0:
        raise ValueError("base rate must be positive")
    return 100.0 * (base - improved) / base


def read_trn(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Read `utt_id<TAB>token token ...` lines; duplicate ids are an error."""
    out: dict[str, tuple[str, ...]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0]:
            raise ValueError(f"{path}:{lineno}: expected 'utt_id<TAB>tokens'")
        if fields[0] in out:
            raise ValueError(f"{path}:{lineno}: duplicate utterance id {fields[0]!r}")
        out[fields[0]] = tuple(fields[1].split())
    return out


def format_report(report: ScoreReport, label: str = "wer") -> str:
    """Human-readable per-utterance and aggregate table."""
    lines = [f"utt_id\tS\tD\tI\tN\t{label}%"]
    for utt_id in sorted(report.per_utterance):
        a = report.per_utterance[utt_id]
        rate = 100.0 * a.errors / a.ref_length if a.ref_length else float("nan")
        lines.append(
            f"{utt_id}\t{a.substitutions}\t{a.deletions}\t{a.insertions}\t{a.ref_length}\t{rate:.2f}"
        )
    a = report.aggregate
    lines.append(
        f"TOTAL\t{a.substitutions}\t{a.deletions}\t{a.insertions}\t{a.ref_length}\t{100.0 * report.rate():.2f}"
    )
    if report.missing_hyps:
        lines.append("missing hypotheses: " + " ".join(report.missing_hyps))
    return "\n".join(lines) + "\n"
