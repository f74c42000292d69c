"""Tagged Terms-of-Service corpus handling.

A corpus document is a UTF-8 text file with inline clause annotations of the
form ``<SYMLVL>...</SYMLVL>``, where SYM is one of eight clause-category
symbols and LVL is a fairness level in 1..3.  This module strips the tags,
segments the plain text into sentences, tokenizes them, and projects the
clause spans onto sentences as (category, level) labels.
"""

from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence


class ClauseCategory(Enum):
    """The eight annotated clause categories and their tag symbols."""

    ARBITRATION = "a"
    UNILATERAL_CHANGE = "ch"
    CONTENT_REMOVAL = "cr"
    JURISDICTION = "j"
    CHOICE_OF_LAW = "law"
    LIMITATION_OF_LIABILITY = "ltd"
    UNILATERAL_TERMINATION = "ter"
    CONTRACT_BY_USING = "use"

    @property
    def symbol(self) -> str:
        return self.value

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]


_DISPLAY_NAMES = {
    ClauseCategory.ARBITRATION: "Arbitration",
    ClauseCategory.UNILATERAL_CHANGE: "Unilateral change",
    ClauseCategory.CONTENT_REMOVAL: "Content removal",
    ClauseCategory.JURISDICTION: "Jurisdiction",
    ClauseCategory.CHOICE_OF_LAW: "Choice of law",
    ClauseCategory.LIMITATION_OF_LIABILITY: "Limitation of liability",
    ClauseCategory.UNILATERAL_TERMINATION: "Unilateral termination",
    ClauseCategory.CONTRACT_BY_USING: "Contract by using",
}

CATEGORY_BY_SYMBOL = {c.symbol: c for c in ClauseCategory}

FAIRNESS_LEVELS = (1, 2, 3)

#: Levels counted as "potentially unfair" when projecting detection labels.
POSITIVE_LEVELS = (2, 3)


class CorpusError(ValueError):
    """Base class for corpus-format problems."""


class TagError(CorpusError):
    """Annotation-grammar violation, located at a line/column of the raw file."""

    def __init__(self, message: str, line: int, column: int, filename: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.filename = filename
        where = f"{filename}: " if filename else ""
        super().__init__(f"{where}{message} (line {line}, column {column})")

    def with_filename(self, filename: str) -> "TagError":
        return type(self)(self.message, self.line, self.column, filename)


class UnknownTag(TagError):
    pass


class UnbalancedTag(TagError):
    pass


class CrossedNesting(TagError):
    pass


class EmptyTagSpan(TagError):
    pass


class EmptyCorpus(CorpusError):
    pass


@dataclass(frozen=True)
class TagSpan:
    """One annotated clause: category, fairness level, and a half-open
    character range into the tag-stripped text."""

    category: ClauseCategory
    level: int
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.level not in FAIRNESS_LEVELS:
            raise ValueError(f"fairness level must be 1..3, got {self.level}")
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span range [{self.start}, {self.end})")


@dataclass(frozen=True)
class Sentence:
    """A sentence of the plain text: char range, the substring, its tokens."""

    start: int
    end: int
    text: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class LabeledSentence:
    sentence: Sentence
    labels: frozenset[tuple[ClauseCategory, int]]
    detection_label: bool

    def __post_init__(self) -> None:
        expected = any(level in POSITIVE_LEVELS for _, level in self.labels)
        if self.detection_label != expected:
            raise ValueError("detection_label inconsistent with labels")

    @classmethod
    def from_labels(
        cls, sentence: Sentence, labels: Iterable[tuple[ClauseCategory, int]]
    ) -> "LabeledSentence":
        labels = frozenset(labels)
        positive = any(level in POSITIVE_LEVELS for _, level in labels)
        return cls(sentence=sentence, labels=labels, detection_label=positive)

    def positive_categories(self, levels: Sequence[int] = POSITIVE_LEVELS) -> frozenset[ClauseCategory]:
        return frozenset(c for c, l in self.labels if l in levels)


@dataclass(frozen=True)
class Document:
    name: str
    sentences: tuple[LabeledSentence, ...]
    spans: tuple[TagSpan, ...]
    plain_text: str


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]

    @property
    def M(self) -> int:
        return len(self.documents)

    @property
    def N(self) -> int:
        return sum(len(d.sentences) for d in self.documents)

    def document(self, name: str) -> Document:
        for d in self.documents:
            if d.name == name:
                return d
        raise KeyError(name)

    def all_sentences(self) -> list[LabeledSentence]:
        out: list[LabeledSentence] = []
        for d in self.documents:
            out.extend(d.sentences)
        return out


# ---------------------------------------------------------------------------
# Tag parsing
# ---------------------------------------------------------------------------

def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    last_nl = text.rfind("\n", 0, offset)
    return line, offset - last_nl  # column is 1-based


def _scan_tag(raw: str, pos: int) -> tuple[bool, str, str, int] | None:
    """Try to read a tag candidate ``</?letters digits?>`` starting at ``pos``
    (which must point at '<').  Returns (closing, symbol, level_str, end_pos)
    or None when the text at pos is not tag-shaped and should stay literal."""
    i = pos + 1
    closing = False
    if i < len(raw) and raw[i] == "/":
        closing = True
        i += 1
    sym_start = i
    while i < len(raw) and raw[i].isalpha():
        i += 1
    if i == sym_start:
        return None
    sym = raw[sym_start:i]
    lvl_start = i
    while i < len(raw) and raw[i].isdigit():
        i += 1
    lvl = raw[lvl_start:i]
    if i >= len(raw) or raw[i] != ">":
        return None
    return closing, sym, lvl, i + 1


def parse_tagged_text(raw: str, lenient: bool = False) -> tuple[str, list[TagSpan]]:
    """Strip clause tags from ``raw`` and return the plain text together with
    one TagSpan per open/close pair, in opening-tag order.

    Offsets in the returned spans index the plain text.  With ``lenient`` set,
    an opening tag that repeats the currently open (category, level) is
    accepted as its closer — some released annotations contain this artifact.
    """
    plain_parts: list[str] = []
    plain_len = 0
    spans: list[TagSpan | None] = []
    # stack entries: (category, level, plain_start, slot in `spans`, raw_offset)
    stack: list[tuple[ClauseCategory, int, int, int, int]] = []

    pos = 0
    n = len(raw)
    while pos < n:
        lt = raw.find("<", pos)
        if lt < 0:
            plain_parts.append(raw[pos:])
            plain_len += n - pos
            break
        if lt > pos:
            plain_parts.append(raw[pos:lt])
            plain_len += lt - pos
        scanned = _scan_tag(raw, lt)
        if scanned is None:
            # a lone '<' that cannot start a tag stays literal text
            plain_parts.append("<")
            plain_len += 1
            pos = lt + 1
            continue
        closing, sym, lvl, after = scanned
        line, col = _line_col(raw, lt)
        category = CATEGORY_BY_SYMBOL.get(sym)
        if category is None:
            raise UnknownTag(f"unknown tag symbol {sym!r}", line, col)
        if len(lvl) != 1 or int(lvl) not in FAIRNESS_LEVELS:
            raise UnknownTag(f"bad fairness level {lvl!r} on tag <{sym}{lvl}>", line, col)
        level = int(lvl)

        if not closing and lenient and stack and stack[-1][0] is category and stack[-1][1] == level:
            closing = True  # repeated opener closes the innermost identical tag

        if not closing:
            stack.append((category, level, plain_len, len(spans), lt))
            spans.append(None)
        else:
            if not stack:
                raise UnbalancedTag(f"closing </{sym}{lvl}> without matching open tag", line, col)
            top_cat, top_lvl, start, slot, _ = stack[-1]
            if top_cat is not category or top_lvl != level:
                if any(c is category and l == level for c, l, *_ in stack):
                    raise CrossedNesting(
                        f"closing </{sym}{lvl}> crosses inner <{top_cat.symbol}{top_lvl}>", line, col
                    )
                raise UnbalancedTag(f"closing </{sym}{lvl}> without matching open tag", line, col)
            stack.pop()
            if plain_len == start:
                raise EmptyTagSpan(f"tag <{sym}{lvl}> encloses no text", line, col)
            spans[slot] = TagSpan(category=category, level=level, start=start, end=plain_len)
        pos = after

    if stack:
        cat, lvl_open, _, _, raw_off = stack[-1]
        line, col = _line_col(raw, raw_off)
        raise UnbalancedTag(f"tag <{cat.symbol}{lvl_open}> never closed", line, col)

    assert all(s is not None for s in spans)
    return "".join(plain_parts), [s for s in spans if s is not None]


def reinsert_tags(plain: str, spans: Sequence[TagSpan]) -> str:
    """Inverse of parse_tagged_text: put the tags back at their span offsets.

    Closes are emitted before opens at the same position; spans closing at the
    same position unwind innermost-first.
    """
    opens: dict[int, list[int]] = defaultdict(list)
    closes: dict[int, list[int]] = defaultdict(list)
    for idx, s in enumerate(spans):
        opens[s.start].append(idx)
        closes[s.end].append(idx)
    out: list[str] = []
    for p in range(len(plain) + 1):
        for idx in sorted(closes.get(p, ()), reverse=True):
            s = spans[idx]
            out.append(f"</{s.category.symbol}{s.level}>")
        for idx in opens.get(p, ()):
            s = spans[idx]
            out.append(f"<{s.category.symbol}{s.level}>")
        if p < len(plain):
            out.append(plain[p])
    return "".join(out)


# ---------------------------------------------------------------------------
# Sentence segmentation and tokenization
# ---------------------------------------------------------------------------

# Tokens (lowercased, trailing period included) that never end a sentence.
ABBREVIATIONS = frozenset({
    "e.g.", "i.e.", "etc.", "cf.", "viz.", "vs.", "v.", "al.", "et.",
    "no.", "nos.", "art.", "arts.", "sec.", "secs.", "para.", "paras.",
    "ch.", "chs.", "fig.", "figs.", "vol.", "vols.", "pp.", "p.", "pt.",
    "inc.", "ltd.", "llc.", "llp.", "plc.", "co.", "corp.", "bros.",
    "mr.", "mrs.", "ms.", "dr.", "prof.", "rev.", "hon.", "jr.", "sr.",
    "st.", "ave.", "blvd.", "rd.", "dept.", "dist.", "div.", "est.",
    "approx.", "appx.", "misc.", "min.", "max.", "tel.", "ext.", "attn.",
    "a.m.", "p.m.", "u.s.", "u.s.a.", "u.k.", "e.u.", "n.b.", "ph.d.",
    "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.",
    "sept.", "oct.", "nov.", "dec.", "mon.", "tue.", "wed.", "thu.",
    "fri.", "sat.", "sun.", "govt.", "acct.", "assn.", "esq.",
})

_TERMINALS = ".!?"
_QUOTES = "\"'“”‘’«»"


def _abbreviation_before(plain: str, dot: int, start: int) -> bool:
    """Whether the token ending at the period at ``dot`` is an abbreviation."""
    w = dot
    while w > start and not plain[w - 1].isspace():
        w -= 1
    word = plain[w : dot + 1].lower()
    while word and not word[0].isalnum():
        word = word[1:]
    return word in ABBREVIATIONS


def segment_sentences(plain: str) -> list[Sentence]:
    """Rule-based sentence segmenter.

    Any newline terminates the current sentence (paragraph break).  A '.', '!'
    or '?' terminates it when followed by whitespace whose next non-whitespace
    character is an uppercase letter, a digit, or a quote — unless the token
    preceding a period is a known abbreviation.
    """
    sentences: list[Sentence] = []
    n = len(plain)
    i = 0
    while i < n:
        while i < n and plain[i].isspace():
            i += 1
        if i >= n:
            break
        start = i
        j = i
        end = n
        resume = n
        while j < n:
            c = plain[j]
            if c == "\n":
                end = j
                resume = j + 1
                break
            if c in _TERMINALS:
                k = j + 1
                while k < n and plain[k].isspace():
                    k += 1
                if k == j + 1 and k < n:
                    pass  # punctuation not followed by whitespace
                elif k >= n:
                    end = resume = j + 1
                    break
                else:
                    nxt = plain[k]
                    boundary = nxt.isupper() or nxt.isdigit() or nxt in _QUOTES
                    if boundary and c == "." and _abbreviation_before(plain, j, start):
                        boundary = False
                    if boundary:
                        end = resume = j + 1
                        break
            j += 1
        while end > start and plain[end - 1].isspace():
            end -= 1
        if end > start:
            text = plain[start:end]
            sentences.append(Sentence(start=start, end=end, text=text, tokens=tuple(tokenize(text))))
        i = resume
    return sentences


def tokenize(sentence_text: str) -> list[str]:
    """Lowercased tokens: alphanumeric runs, with every punctuation mark a
    standalone token.  "twitter.com/tos" -> [twitter, ., com, /, tos]."""
    tokens: list[str] = []
    cur: list[str] = []
    for ch in sentence_text:
        if ch.isspace():
            if cur:
                tokens.append("".join(cur).lower())
                cur = []
        elif ch.isalnum():
            cur.append(ch)
        else:
            if cur:
                tokens.append("".join(cur).lower())
                cur = []
            tokens.append(ch.lower())
    if cur:
        tokens.append("".join(cur).lower())
    return tokens


# ---------------------------------------------------------------------------
# Label projection and corpus loading
# ---------------------------------------------------------------------------

def _overlaps_nonspace(sentence: Sentence, span: TagSpan) -> bool:
    a = max(sentence.start, span.start)
    b = min(sentence.end, span.end)
    if a >= b:
        return False
    window = sentence.text[a - sentence.start : b - sentence.start]
    return any(not ch.isspace() for ch in window)


def project_labels(spans: Sequence[TagSpan], sentences: Sequence[Sentence]) -> list[LabeledSentence]:
    """Attach (category, level) labels to every sentence whose range overlaps
    the span by at least one non-whitespace character.  A span covering
    several sentences labels each of them."""
    out: list[LabeledSentence] = []
    for sent in sentences:
        labels = {
            (span.category, span.level)
            for span in spans
            if _overlaps_nonspace(sent, span)
        }
        out.append(LabeledSentence.from_labels(sent, labels))
    return out


def parse_document(name: str, raw: str, lenient: bool = False) -> Document:
    try:
        plain, spans = parse_tagged_text(raw, lenient=lenient)
    except TagError as err:
        raise err.with_filename(name) from None
    sentences = segment_sentences(plain)
    labeled = project_labels(spans, sentences)
    return Document(name=name, sentences=tuple(labeled), spans=tuple(spans), plain_text=plain)


def load_corpus(directory: str | Path, lenient: bool = False) -> Corpus:
    """Load every tagged .txt file under ``directory`` (sorted by filename)."""
    directory = Path(directory)
    files = sorted(directory.glob("*.txt"))
    if not files:
        raise EmptyCorpus(f"no .txt documents found in {directory}")
    documents = []
    seen: set[str] = set()
    for path in files:
        name = path.stem
        if name in seen:
            raise CorpusError(f"duplicate document name {name!r}")
        seen.add(name)
        raw = path.read_text(encoding="utf-8")
        documents.append(parse_document(name, raw, lenient=lenient))
    return Corpus(documents=tuple(documents))


def corpus_fingerprint(directory: str | Path) -> str:
    """Stable hash of the corpus directory contents (filenames + bytes)."""
    directory = Path(directory)
    h = hashlib.sha256()
    for path in sorted(directory.glob("*.txt")):
        h.update(path.name.encode("utf-8"))
        h.update(b"\x00")
        h.update(hashlib.sha256(path.read_bytes()).digest())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Corpus statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CategoryStats:
    category: ClauseCategory
    clause_count: int
    document_count: int


@dataclass(frozen=True)
class StatsTable:
    per_category: tuple[CategoryStats, ...]
    n_documents: int
    total_sentences: int
    positive_sentences: int
    min_rate_document: str
    min_rate: float
    max_rate_document: str
    max_rate: float
    positive_levels: tuple[int, ...] = POSITIVE_LEVELS

    @property
    def positive_fraction(self) -> float:
        if self.total_sentences == 0:
            return 0.0
        return self.positive_sentences / self.total_sentences


def corpus_stats(corpus: Corpus, positive_levels: Sequence[int] = POSITIVE_LEVELS) -> StatsTable:
    """Per-category clause/document counts plus sentence-level positive rates.

    ``positive_levels`` selects which fairness levels count as potentially
    unfair (default: 2 and 3).
    """
    positive_levels = tuple(positive_levels)
    per_category = []
    for category in ClauseCategory:
        clause_count = 0
        document_count = 0
        for doc in corpus.documents:
            in_doc = sum(
                1 for s in doc.spans if s.category is category and s.level in positive_levels
            )
            clause_count += in_doc
            if in_doc:
                document_count += 1
        per_category.append(CategoryStats(category, clause_count, document_count))

    def is_positive(ls: LabeledSentence) -> bool:
        return any(l in positive_levels for _, l in ls.labels)

    total = corpus.N
    positives = sum(1 for ls in corpus.all_sentences() if is_positive(ls))

    min_doc, min_rate = "", 0.0
    max_doc, max_rate = "", 0.0
    rates = [
        (doc.name, sum(1 for ls in doc.sentences if is_positive(ls)) / len(doc.sentences))
        for doc in corpus.documents
        if doc.sentences
    ]
    if rates:
        min_doc, min_rate = min(rates, key=lambda r: (r[1], r[0]))
        max_doc, max_rate = max(rates, key=lambda r: (r[1], r[0]))

    return StatsTable(
        per_category=tuple(per_category),
        n_documents=corpus.M,
        total_sentences=total,
        positive_sentences=positives,
        min_rate_document=min_doc,
        min_rate=min_rate,
        max_rate_document=max_doc,
        max_rate=max_rate,
        positive_levels=positive_levels,
    )
