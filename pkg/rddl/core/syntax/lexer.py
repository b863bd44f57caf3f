"""Tokenizer shared by the formula, script and model-file parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List

from ..errors import RddlSyntaxError

__all__ = ["Token", "tokenize", "KEYWORDS"]

KEYWORDS = frozenset({"true", "false", "forall", "rdd", "exit", "post"})

# Longest operators first so that "<=" wins over "<".
_SYMBOLS = ("<=", ">=", "->", "++", "||", "'", "=", "<", ">", "+", "-", "*", "/", "^",
            "(", ")", "[", "]", "{", "}", ",", ";", "&", "|", "!", "?", ".", ":")

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>%[^\n]*)"
    r"|(?P<number>\d+(?:\.\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*#?)"
    r"|(?P<string>\"[^\"\n]*\")"
    r"|(?P<symbol>" + "|".join(re.escape(s) for s in _SYMBOLS) + r")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | string | symbol | eof
    text: str
    position: int

    def is_(self, text: str) -> bool:
        return self.kind in ("symbol", "ident") and self.text == text


def tokenize(source: str) -> List[Token]:
    """Split ``source`` into tokens; ``%`` starts a comment that runs to end of line."""
    tokens: List[Token] = []
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise RddlSyntaxError(pos, ["a token"], source[pos])
        kind = match.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(Token("eof", "", len(source)))
    return tokens
