"""Penn-style bracketed constituency trees and treebank files.

A treebank file holds one bracketed tree per line, with a blank line between
documents; groups align 1:1 with corpus documents in order, and within a
group lines align with that document's sentences.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator, Sequence


class TreeParseError(ValueError):
    pass


class UnbalancedParens(TreeParseError):
    pass


class EmptyNode(TreeParseError):
    pass


class TrailingInput(TreeParseError):
    pass


class TreeBankMismatch(ValueError):
    """Treebank groups do not line up with corpus documents/sentences."""


class ParseTree:
    """Labeled ordered tree.  A leaf has no children and its label is the
    word; a preterminal has exactly one leaf child."""

    __slots__ = ("label", "children")

    def __init__(self, label: str, children: Sequence["ParseTree"] = ()):
        self.label = label
        self.children = tuple(children)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def is_preterminal(self) -> bool:
        return len(self.children) == 1 and self.children[0].is_leaf

    def production(self) -> tuple[str, tuple[str, ...]] | None:
        """Label plus ordered child labels; None for a leaf."""
        if not self.children:
            return None
        return self.label, tuple(c.label for c in self.children)

    def nodes(self) -> Iterator["ParseTree"]:
        """All nodes, preorder."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def internal_nodes(self) -> list["ParseTree"]:
        return [n for n in self.nodes() if n.children]

    def preterminals(self) -> list["ParseTree"]:
        return [n for n in self.nodes() if n.is_preterminal]

    def n_nodes(self) -> int:
        return sum(1 for _ in self.nodes())

    def to_bracketed(self) -> str:
        """Canonical single-space bracketed form."""
        if self.is_leaf:
            return self.label
        inner = " ".join(c.to_bracketed() for c in self.children)
        return f"({self.label} {inner})"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ParseTree)
            and self.label == other.label
            and self.children == other.children
        )

    def __hash__(self) -> int:
        return hash((self.label, self.children))

    def __repr__(self) -> str:
        return f"ParseTree({self.to_bracketed()!r})"


def _lex(text: str) -> list[str]:
    tokens: list[str] = []
    cur: list[str] = []
    for ch in text:
        if ch in "()":
            if cur:
                tokens.append("".join(cur))
                cur = []
            tokens.append(ch)
        elif ch.isspace():
            if cur:
                tokens.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if cur:
        tokens.append("".join(cur))
    return tokens


def parse_bracketed(text: str) -> ParseTree:
    """Parse one bracketed expression such as "(S (A a) (B b))"."""
    tokens = _lex(text)
    if not tokens:
        raise UnbalancedParens("empty input")
    pos = 0

    def parse_node() -> ParseTree:
        nonlocal pos
        if tokens[pos] != "(":
            raise UnbalancedParens(f"expected '(' but found {tokens[pos]!r}")
        pos += 1
        if pos >= len(tokens):
            raise UnbalancedParens("unexpected end of input after '('")
        label = tokens[pos]
        if label in "()":
            raise EmptyNode("node is missing a label")
        pos += 1
        children: list[ParseTree] = []
        while True:
            if pos >= len(tokens):
                raise UnbalancedParens("unexpected end of input; missing ')'")
            tok = tokens[pos]
            if tok == ")":
                pos += 1
                break
            if tok == "(":
                children.append(parse_node())
            else:
                children.append(ParseTree(tok))
                pos += 1
        if not children:
            raise EmptyNode(f"node {label!r} has no children and no token")
        return ParseTree(label, children)

    tree = parse_node()
    if pos != len(tokens):
        raise TrailingInput(f"unexpected trailing input starting at {tokens[pos]!r}")
    return tree


# ---------------------------------------------------------------------------
# Treebank files
# ---------------------------------------------------------------------------

def read_treebank_groups(path: str | Path) -> list[list[ParseTree]]:
    """Blank-line-separated groups of one-tree-per-line."""
    groups: list[list[ParseTree]] = []
    current: list[ParseTree] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        stripped = line.strip()
        if not stripped:
            if current:
                groups.append(current)
                current = []
            continue
        current.append(parse_bracketed(stripped))
    if current:
        groups.append(current)
    return groups


def write_treebank_groups(groups: Sequence[Sequence[ParseTree]], path: str | Path) -> None:
    blocks = ["\n".join(t.to_bracketed() for t in group) for group in groups]
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")


def align_treebank(groups: Sequence[Sequence[ParseTree]], corpus) -> dict[str, list[ParseTree]]:
    """Bind treebank groups to corpus documents by order, validating counts."""
    if len(groups) != corpus.M:
        raise TreeBankMismatch(
            f"treebank has {len(groups)} document groups, corpus has {corpus.M} documents"
        )
    treebank: dict[str, list[ParseTree]] = {}
    for doc, group in zip(corpus.documents, groups):
        if len(group) != len(doc.sentences):
            raise TreeBankMismatch(
                f"document {doc.name!r} has {len(doc.sentences)} sentences "
                f"but its treebank group has {len(group)} trees"
            )
        treebank[doc.name] = list(group)
    return treebank


def load_treebank(path: str | Path, corpus) -> dict[str, list[ParseTree]]:
    return align_treebank(read_treebank_groups(path), corpus)
