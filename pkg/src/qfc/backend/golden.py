"""Comparison of C listings up to identifier renaming and layout."""

from __future__ import annotations

import re

_TOKEN = re.compile(r"""
    (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?[fFuUlL]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\+\+|--|->|<=|>=|==|!=|&&|\|\||[-+*/%<>=!&|^~?:;,.(){}\[\]])
  | (?P<space>\s+)
""", re.VERBOSE)

C_KEYWORDS = frozenset("""
    auto break case char const continue default do double else enum extern float for goto
    if inline int long register restrict return short signed sizeof static struct switch
    typedef union unsigned void volatile while bool int32_t uint32_t true false
""".split())


def _strip(text: str) -> str:
    text = re.sub(r"/\*.*?\*/", " ", text, flags=re.DOTALL)
    text = re.sub(r"//[^\n]*", " ", text)
    return "\n".join(line for line in text.splitlines() if not line.lstrip().startswith("#"))


def c_tokens(text: str) -> list[tuple[str, str]]:
    """``(kind, text)`` tokens with comments, preprocessor lines and
    float suffixes removed."""
    out = []
    text = _strip(text)
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"unexpected character {text[pos]!r} in C text")
        pos = m.end()
        kind = m.lastgroup
        if kind == "space":
            continue
        tok = m.group()
        if kind == "num":
            tok = tok.rstrip("fFuUlL")
        elif kind == "ident" and tok in C_KEYWORDS:
            kind = "kw"
        out.append((kind, tok))  # type: ignore[arg-type]
    return out


def c_alpha_equal(a: str, b: str) -> bool:
    """Equal token streams up to a bijective renaming of identifiers."""
    ta, tb = c_tokens(a), c_tokens(b)
    if len(ta) != len(tb):
        return False
    fwd: dict[str, str] = {}
    back: dict[str, str] = {}
    for (ka, xa), (kb, xb) in zip(ta, tb):
        if ka != kb:
            return False
        if ka == "ident":
            if fwd.setdefault(xa, xb) != xb or back.setdefault(xb, xa) != xa:
                return False
        elif ka == "num":
            if float(xa) != float(xb):
                return False
        elif xa != xb:
            return False
    return True
