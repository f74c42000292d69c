"""Self-contained HTML report of an analyzed document.

The document body is rendered verbatim (HTML-escaped, whitespace preserved);
flagged sentences are wrapped in <mark> elements carrying the category names
and scores in data attributes.  Stripping the markup inside the document
container and unescaping reproduces the input text exactly.
"""

from __future__ import annotations

import html
from pathlib import Path

from .analyze import AnalysisResult

_STYLE = """
body { font-family: Georgia, serif; margin: 2rem auto; max-width: 50rem; color: #222; }
h1 { font-size: 1.3rem; }
.meta { color: #666; font-size: 0.85rem; margin-bottom: 1rem; }
.doc { white-space: pre-wrap; line-height: 1.5; border: 1px solid #ddd; padding: 1rem; }
mark.flag { background: #ffd6d6; border-bottom: 2px solid #c0392b; }
""".strip()


def _format_scores(scores: dict[str, float]) -> str:
    return ";".join(f"{k}:{v:.6f}" for k, v in sorted(scores.items()))


def render_report_html(result: AnalysisResult) -> str:
    parts: list[str] = []
    pos = 0
    for s in result.sentences:
        if s.start > pos:
            parts.append(html.escape(result.text[pos : s.start], quote=False))
        body = html.escape(result.text[s.start : s.end], quote=False)
        if s.detection:
            cats = html.escape(",".join(s.categories), quote=True)
            scores = html.escape(_format_scores(s.scores), quote=True)
            parts.append(
                f'<mark class="flag" data-categories="{cats}" data-scores="{scores}">{body}</mark>'
            )
        else:
            parts.append(body)
        pos = s.end
    if pos < len(result.text):
        parts.append(html.escape(result.text[pos:], quote=False))
    doc = "".join(parts)

    n_flagged = sum(1 for s in result.sentences if s.detection)
    warnings = "".join(
        f"<p class=\"meta\">warning: {html.escape(w, quote=False)}</p>" for w in result.warnings
    )
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        "<title>Clause analysis</title>\n"
        f"<style>\n{_STYLE}\n</style>\n</head>\n<body>\n"
        "<h1>Clause analysis</h1>\n"
        f'<p class="meta">model: {html.escape(result.model_kind)} &middot; '
        f"{len(result.sentences)} sentences &middot; {n_flagged} flagged</p>\n"
        f"{warnings}"
        f'<div class="doc">{doc}</div>\n'
        "</body>\n</html>\n"
    )


def render_report(result: AnalysisResult, out: str | Path) -> None:
    Path(out).write_text(render_report_html(result), encoding="utf-8")
