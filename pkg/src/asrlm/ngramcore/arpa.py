"""ARPA back-off file reading and writing.

Format: `\\data\\` header with `ngram k=COUNT` lines, one `\\k-grams:` section
per order with `LOGPROB<TAB>w1 .. wk[<TAB>LOGBACKOFF]` entries, `\\end\\`
footer. UTF-8, LF endings, log10 values at 7 significant digits. The back-off
field is omitted at the highest order and for n-grams ending in `</s>`.
"""

from __future__ import annotations

from pathlib import Path

from asrlm.ngramcore.model import BackoffLM, Entry, NGram
from asrlm.textcorpus import EOS, Vocabulary


class ArpaError(ValueError):
    """Malformed ARPA file."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


def format_log10(value: float) -> str:
    if value == 0.0:  # avoid "-0"
        value = 0.0
    return format(value, ".7g")


def write_arpa(lm: BackoffLM, path: str | Path) -> None:
    lines = ["\\data\\"]
    for k in range(1, lm.order + 1):
        lines.append(f"ngram {k}={len(lm.tables.get(k, {}))}")
    lines.append("")
    for k in range(1, lm.order + 1):
        lines.append(f"\\{k}-grams:")
        table = lm.tables.get(k, {})
        for gram in sorted(table):
            logp, bow = table[gram]
            line = f"{format_log10(logp)}\t{' '.join(gram)}"
            if k < lm.order and gram[-1] != EOS and bow is not None:
                line += f"\t{format_log10(bow)}"
            lines.append(line)
        lines.append("")
    lines.append("\\end\\")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_arpa(path: str | Path) -> BackoffLM:
    path = Path(path)
    declared: dict[int, int] = {}
    tables: dict[int, dict[NGram, Entry]] = {}
    state = "preamble"
    current_k = 0
    lines = path.read_text(encoding="utf-8").split("\n")
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\r")
        if state == "preamble":
            if line.strip() == "\\data\\":
                state = "counts"
            continue
        if state == "counts":
            if not line.strip():
                continue
            if line.startswith("ngram "):
                try:
                    spec_part = line[len("ngram "):]
                    k_str, count_str = spec_part.split("=")
                    declared[int(k_str)] = int(count_str)
                except ValueError as exc:
                    raise ArpaError(path, lineno, f"bad count line {line!r}") from exc
                continue
            state = "sections"
        if state == "sections" and line.startswith("\\") and line.endswith("-grams:"):
            try:
                current_k = int(line[1:-len("-grams:")])
            except ValueError as exc:
                raise ArpaError(path, lineno, f"bad section header {line!r}") from exc
            if current_k not in declared:
                raise ArpaError(path, lineno, f"section {current_k} not declared in header")
            tables[current_k] = {}
            state = "entries"
            continue
        if state == "entries":
            if not line.strip():
                continue
            if line.startswith("\\") and line.endswith("-grams:"):
                state = "sections"
                try:
                    current_k = int(line[1:-len("-grams:")])
                except ValueError as exc:
                    raise ArpaError(path, lineno, f"bad section header {line!r}") from exc
                if current_k not in declared:
                    raise ArpaError(path, lineno, f"section {current_k} not declared in header")
                tables[current_k] = {}
                state = "entries"
                continue
            if line.strip() == "\\end\\":
                state = "done"
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise ArpaError(path, lineno, f"expected 2 or 3 tab-separated fields, got {len(fields)}")
            try:
                logp = float(fields[0])
            except ValueError as exc:
                raise ArpaError(path, lineno, f"bad log-probability {fields[0]!r}") from exc
            gram = tuple(fields[1].split(" "))
            if len(gram) != current_k or any(not w for w in gram):
                raise ArpaError(path, lineno, f"expected a {current_k}-gram, got {fields[1]!r}")
            bow: float | None = None
            if len(fields) == 3:
                try:
                    bow = float(fields[2])
                except ValueError as exc:
                    raise ArpaError(path, lineno, f"bad back-off weight {fields[2]!r}") from exc
            if gram in tables[current_k]:
                raise ArpaError(path, lineno, f"duplicate n-gram {fields[1]!r}")
            tables[current_k][gram] = (logp, bow)
            continue
    if state != "done":
        raise ArpaError(path, len(lines), "missing \\end\\ footer")
    if not declared:
        raise ArpaError(path, len(lines), "missing \\data\\ header")
    order = max(declared)
    for k in range(1, order + 1):
        if k not in declared:
            raise ArpaError(path, len(lines), f"missing 'ngram {k}=' declaration")
        actual = len(tables.get(k, {}))
        if actual != declared[k]:
            raise ArpaError(
                path, len(lines),
                f"header declares ngram {k}={declared[k]} but section has {actual} entries",
            )
    vocab = Vocabulary(w for (w,) in sorted(tables.get(1, {})))
    return BackoffLM(order=order, tables=tables, vocab=vocab, metadata={"source": str(path)})
