"""
Tokenizer for .dtp problem files.

Line-oriented, UTF-8, '#' starts a comment running to the end of the line.
Every token records the 1-based line and column it starts at and whether it
is the first token on its line (statements start there).
"""

import enum
import re
from dataclasses import dataclass
from typing import Iterator, List


class TokenType(enum.Enum):
    IDENTIFIER = "identifier"
    NUMBER = "number"
    STRING = "string"
    ARROW = "'->'"
    LBRACE = "'{'"
    RBRACE = "'}'"
    LPAREN = "'('"
    RPAREN = "')'"
    COMMA = "','"
    COLON = "':'"
    EQUALS = "'='"
    PIPE = "'|'"
    AMPERSAND = "'&'"
    STAR = "'*'"
    NEWLINE = "newline"
    WHITESPACE = "whitespace"
    COMMENT = "comment"
    ERROR = "invalid character"
    EOF = "end of file"


@dataclass(frozen=True)
class Token:
    type: TokenType
    text: str
    line: int
    column: int
    first_on_line: bool = False

    def __str__(self) -> str:
        if self.type == TokenType.EOF:
            return "end of file"
        return repr(self.text)


KEYWORDS = frozenset({
    "problem", "object", "edge", "obsedge", "mechroot", "value",
    "mechedge", "cpd", "utility", "prior", "canonical_obs",
})

TAGS = ("physical", "logical", "both")

_PATTERNS = [
    (TokenType.NEWLINE, r"\r?\n"),
    (TokenType.WHITESPACE, r"[ \t\f]+"),
    (TokenType.COMMENT, r"#[^\n]*"),
    (TokenType.STRING, r'"[^"\n]*"'),
    (TokenType.NUMBER, r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"),
    (TokenType.IDENTIFIER, r"[A-Za-z_][A-Za-z0-9_]*"),
    (TokenType.ARROW, r"->"),
    (TokenType.LBRACE, r"\{"),
    (TokenType.RBRACE, r"\}"),
    (TokenType.LPAREN, r"\("),
    (TokenType.RPAREN, r"\)"),
    (TokenType.COMMA, r","),
    (TokenType.COLON, r":"),
    (TokenType.EQUALS, r"="),
    (TokenType.PIPE, r"\|"),
    (TokenType.AMPERSAND, r"&"),
    (TokenType.STAR, r"\*"),
    (TokenType.ERROR, r"."),
]

_REGEX = re.compile("|".join(f"(?P<{t.name}>{p})" for t, p in _PATTERNS))

_IGNORE = {TokenType.WHITESPACE, TokenType.COMMENT, TokenType.NEWLINE}


def lex(code: str) -> Iterator[Token]:
    """Yield every token of ``code``, whitespace and comments included, then EOF."""
    line, line_start = 1, 0
    first = True
    for match in _REGEX.finditer(code):
        token_type = TokenType[match.lastgroup]
        text = match.group(0)
        column = match.start() - line_start + 1
        yield Token(token_type, text, line, column, first and token_type not in _IGNORE)
        if token_type == TokenType.NEWLINE:
            line += 1
            line_start = match.end()
            first = True
        elif token_type not in _IGNORE:
            first = False
    yield Token(TokenType.EOF, "", line, len(code) - line_start + 1, True)


def tokenize(code: str) -> List[Token]:
    """The significant tokens of ``code``, ending with EOF."""
    return [token for token in lex(code) if token.type not in _IGNORE]
