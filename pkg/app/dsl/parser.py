"""
Recursive-descent parser for .dtp problem files.

    problem "<name>"
    object <Name> : decision|chance|utility { <label>, ... }     # utility lists <label>=<number>
    edge <Parent> -> <Child>
    obsedge <Parent> -> <Decision>
    mechroot <Name> { <label>, ... } [physical|logical|both]
    value <id> : <ObjectVar> = { <outcome>: <prob>, ... }   or   { (<parent outcomes>) -> { ... } ... }
    mechedge <M1> -> <M2> [physical|logical|both]
    cpd <MechVar> [| <parents>] [physical|logical|both] { (<parent outcomes>) -> { <key>: <prob>, ... } ... }
    utility <UVar> | <parents> { (<outcomes>) = <label or number> ... }
    prior <DecisionMech> = uniform | { <rule spec>: <prob>, ... }
    canonical_obs { <Var>=<outcome>, ... }

A syntax error skips to the next line that starts with a statement keyword,
so one pass reports every error in the file.
"""

import logging
from typing import List, Optional, Tuple, Union

from app.causal.errors import Diagnostic, ProblemDefinitionError
from app.decision.problems import DecisionProblem
from app.dsl.compiler import build_problem
from app.dsl.description import (
    CpdDecl,
    EdgeDecl,
    Entry,
    Item,
    MechRootDecl,
    ObjectDecl,
    Position,
    PriorDecl,
    ProblemDescription,
    Row,
    RuleRef,
    UtilityDecl,
    UtilityRow,
    ValueDecl,
)
from app.dsl.lexer import KEYWORDS, TAGS, Token, TokenType, tokenize
from app.dsl.wellformed import check_well_defined, well_defined_diagnostics

Expected = Union[TokenType, str]

_KINDS = ("decision", "chance", "utility")
_RULE_TOKENS = {TokenType.IDENTIFIER, TokenType.EQUALS, TokenType.AMPERSAND,
                TokenType.ARROW, TokenType.COMMA, TokenType.STAR}


class DtpSyntaxError(Exception):
    def __init__(self, token: Token, message: str):
        self.token = token
        super().__init__(message)


class TokenStream:
    def __init__(self, code: str):
        self.tokens = tokenize(code)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def consume(self) -> Token:
        token = self.current
        if token.type != TokenType.EOF:
            self.index += 1
        return token

    def accept(self, expected: Expected) -> Optional[Token]:
        if self._matches(self.current, expected):
            return self.consume()
        return None

    def check(self, expected: Expected) -> bool:
        return self._matches(self.current, expected)

    def expect(self, expected: Expected, what: Optional[str] = None) -> Token:
        token = self.accept(expected)
        if token is None:
            wanted = what or (expected.value if isinstance(expected, TokenType) else repr(expected))
            raise DtpSyntaxError(self.current, f"expected {wanted}, found {self.current}")
        return token

    def recover(self) -> None:
        """Skip to the next statement keyword that starts a line."""
        self.consume()
        while self.current.type != TokenType.EOF and not (
                self.current.first_on_line and self.current.text in KEYWORDS):
            self.consume()

    @staticmethod
    def _matches(token: Token, expected: Expected) -> bool:
        if isinstance(expected, TokenType):
            return token.type == expected
        return token.type == TokenType.IDENTIFIER and token.text == expected


def _position(token: Token) -> Position:
    return Position(token.line, token.column)


# ---------------------------------------------------------------------- #
# Pieces
# ---------------------------------------------------------------------- #
def _identifier(stream: TokenStream, what: str) -> Token:
    return stream.expect(TokenType.IDENTIFIER, what)


def _number(stream: TokenStream, what: str = "a number") -> float:
    return float(stream.expect(TokenType.NUMBER, what).text)


def _tag(stream: TokenStream) -> str:
    if stream.current.type == TokenType.IDENTIFIER and stream.current.text in TAGS \
            and not stream.current.first_on_line:
        return stream.consume().text
    return "both"


def _rule_ref(stream: TokenStream) -> RuleRef:
    """A parenthesised rule spec, kept as text for later lookup."""
    start = stream.expect(TokenType.LPAREN)
    parts = []
    while stream.current.type in _RULE_TOKENS:
        parts.append(stream.consume().text)
    stream.expect(TokenType.RPAREN, "')' closing the rule spec")
    return RuleRef("(" + "".join(parts) + ")", _position(start))


def _item(stream: TokenStream) -> Item:
    if stream.check(TokenType.LPAREN):
        return _rule_ref(stream)
    return _identifier(stream, "an outcome, value id or rule spec").text


def _separated(stream: TokenStream, parse, close: TokenType) -> list:
    """Comma-separated items up to ``close`` (consumed); trailing comma allowed."""
    items = []
    while not stream.check(close):
        items.append(parse(stream))
        if not stream.accept(TokenType.COMMA):
            break
    stream.expect(close)
    return items


def _entry(stream: TokenStream) -> Entry:
    start = stream.current
    key = _item(stream)
    stream.expect(TokenType.COLON)
    return Entry(key, _number(stream, "a probability"), _position(start))


def _distribution(stream: TokenStream) -> List[Entry]:
    stream.expect(TokenType.LBRACE)
    return _separated(stream, _entry, TokenType.RBRACE)


def _row_outcomes(stream: TokenStream) -> Tuple[Item, ...]:
    stream.expect(TokenType.LPAREN)
    return tuple(_separated(stream, _item, TokenType.RPAREN))


def _closing_paren(stream: TokenStream) -> int:
    depth, offset = 0, 0
    while True:
        token = stream.peek(offset)
        if token.type == TokenType.LPAREN:
            depth += 1
        elif token.type == TokenType.RPAREN:
            depth -= 1
            if depth == 0:
                return offset
        elif token.type == TokenType.EOF:
            return offset
        offset += 1


def _is_row_block(stream: TokenStream) -> bool:
    """``{ (..) -> {..} }`` rather than ``{ key: p }`` (a key may itself be a parenthesised rule)."""
    if not stream.check(TokenType.LBRACE) or stream.peek().type != TokenType.LPAREN:
        return False
    stream.index += 1
    try:
        return stream.peek(_closing_paren(stream) + 1).type == TokenType.ARROW
    finally:
        stream.index -= 1


def _rows(stream: TokenStream) -> List[Row]:
    """Either a rows block or a single unconditional distribution."""
    start = stream.current
    if not _is_row_block(stream):
        return [Row(None, _distribution(stream), _position(start))]
    stream.expect(TokenType.LBRACE)
    rows = []
    while not stream.check(TokenType.RBRACE):
        row_start = stream.current
        outcomes = _row_outcomes(stream)
        stream.expect(TokenType.ARROW)
        rows.append(Row(outcomes, _distribution(stream), _position(row_start)))
        stream.accept(TokenType.COMMA)
        if stream.check(TokenType.EOF):
            break
    stream.expect(TokenType.RBRACE)
    return rows


def _names(stream: TokenStream) -> List[str]:
    names = [_identifier(stream, "a variable name").text]
    while stream.accept(TokenType.COMMA):
        names.append(_identifier(stream, "a variable name").text)
    return names


def _edge(stream: TokenStream) -> Tuple[str, str]:
    parent = _identifier(stream, "a parent variable").text
    stream.expect(TokenType.ARROW)
    return parent, _identifier(stream, "a child variable").text


# ---------------------------------------------------------------------- #
# Statements
# ---------------------------------------------------------------------- #
def _problem(stream: TokenStream, desc: ProblemDescription, start: Token) -> None:
    if stream.check(TokenType.STRING):
        desc.name = stream.consume().text[1:-1]
    else:
        desc.name = _identifier(stream, "a problem name").text
    desc.position = _position(start)


def _object(stream: TokenStream, desc: ProblemDescription, start: Token) -> None:
    name = _identifier(stream, "a variable name").text
    stream.expect(TokenType.COLON)
    kind_token = _identifier(stream, "decision, chance or utility")
    if kind_token.text not in _KINDS:
        raise DtpSyntaxError(kind_token, f"expected decision, chance or utility, found {kind_token}")
    stream.expect(TokenType.LBRACE)
    if kind_token.text == "utility":
        def labelled(s: TokenStream) -> Tuple[str, float]:
            label = _identifier(s, "a utility label").text
            s.expect(TokenType.EQUALS)
            return label, _number(s, "a utility value")

        pairs = _separated(stream, labelled, TokenType.RBRACE)
        desc.objects.append(ObjectDecl(name, kind_token.text, [l for l, _ in pairs], dict(pairs), _position(start)))
    else:
        labels = _separated(stream, lambda s: _identifier(s, "an outcome label").text, TokenType.RBRACE)
        desc.objects.append(ObjectDecl(name, kind_token.text, labels, None, _position(start)))


def _edge_statement(level: str):
    def parse(stream: TokenStream, desc: ProblemDescription, start: Token) -> None:
        parent, child = _edge(stream)
        tag = _tag(stream) if level == "mechanism" else "both"
        desc.edges.append(EdgeDecl(parent, child, level, tag, _position(start)))
    return parse


def _mechroot(stream: TokenStream, desc: ProblemDescription, start: Token) -> None:
    name = _identifier(stream, "a mechanism variable name").text
    stream.expect(TokenType.LBRACE)
    labels = _separated(stream, lambda s: _identifier(s, "an outcome label").text, TokenType.RBRACE)
    desc.mechanism_roots.append(MechRootDecl(name, labels, _tag(stream), _position(start)))


def _value(stream: TokenStream, desc: ProblemDescription, start: Token) -> None:
    value_id = _identifier(stream, "a value id").text
    stream.expect(TokenType.COLON)
    target = _identifier(stream, "an object variable").text
    stream.expect(TokenType.EQUALS)
    desc.values.append(ValueDecl(value_id, target, _rows(stream), _position(start)))


def _cpd(stream: TokenStream, desc: ProblemDescription, start: Token) -> None:
    mechanism = _identifier(stream, "a mechanism variable").text
    parents = _names(stream) if stream.accept(TokenType.PIPE) else []
    tag = _tag(stream)
    desc.cpds.append(CpdDecl(mechanism, parents, _rows(stream), tag, _position(start)))


def _utility_row(stream: TokenStream) -> UtilityRow:
    start = stream.current
    stream.expect(TokenType.LPAREN)
    outcomes = tuple(_separated(stream, lambda s: _identifier(s, "an outcome").text, TokenType.RPAREN))
    stream.expect(TokenType.EQUALS)
    if stream.check(TokenType.NUMBER):
        payoff: Union[str, float] = _number(stream)
    else:
        payoff = _identifier(stream, "a utility label or number").text
    return UtilityRow(outcomes, payoff, _position(start))


def _utility(stream: TokenStream, desc: ProblemDescription, start: Token) -> None:
    name = _identifier(stream, "a utility variable").text
    parents = _names(stream) if stream.accept(TokenType.PIPE) else []
    stream.expect(TokenType.LBRACE)
    rows = []
    while not stream.check(TokenType.RBRACE) and not stream.check(TokenType.EOF):
        rows.append(_utility_row(stream))
        stream.accept(TokenType.COMMA)
    stream.expect(TokenType.RBRACE)
    desc.utilities.append(UtilityDecl(name, parents, rows, _position(start)))


def _prior(stream: TokenStream, desc: ProblemDescription, start: Token) -> None:
    mechanism = _identifier(stream, "a decision mechanism").text
    stream.expect(TokenType.EQUALS)
    if stream.accept("uniform"):
        desc.priors.append(PriorDecl(mechanism, True, [], _position(start)))
        return
    if not stream.check(TokenType.LBRACE):
        raise DtpSyntaxError(stream.current, f"expected 'uniform' or '{{', found {stream.current}")
    desc.priors.append(PriorDecl(mechanism, False, _distribution(stream), _position(start)))


def _canonical_obs(stream: TokenStream, desc: ProblemDescription, start: Token) -> None:
    def assignment(s: TokenStream) -> Tuple[str, str]:
        var = _identifier(s, "an observed variable").text
        s.expect(TokenType.EQUALS)
        return var, _identifier(s, "an outcome").text

    stream.expect(TokenType.LBRACE)
    desc.canonical_observation = dict(_separated(stream, assignment, TokenType.RBRACE))
    desc.canonical_position = _position(start)


_STATEMENTS = {
    "problem": _problem,
    "object": _object,
    "edge": _edge_statement("object"),
    "obsedge": _edge_statement("information"),
    "mechroot": _mechroot,
    "value": _value,
    "mechedge": _edge_statement("mechanism"),
    "cpd": _cpd,
    "utility": _utility,
    "prior": _prior,
    "canonical_obs": _canonical_obs,
}


def _statement(stream: TokenStream, desc: ProblemDescription) -> None:
    start = stream.current
    if start.type != TokenType.IDENTIFIER or start.text not in _STATEMENTS:
        raise DtpSyntaxError(start, f"expected a statement keyword, found {start}")
    if not start.first_on_line:
        raise DtpSyntaxError(start, f"statement {start.text!r} must start a new line")
    stream.consume()
    _STATEMENTS[start.text](stream, desc, start)
    if not stream.current.first_on_line:
        raise DtpSyntaxError(stream.current, f"unexpected {stream.current} after {start.text} statement")


# ---------------------------------------------------------------------- #
# Entry points
# ---------------------------------------------------------------------- #
def parse_description(text: str) -> ProblemDescription:
    """
    Parse problem-file text into a ProblemDescription without checking it.

    Raises:
        ProblemDefinitionError: carrying every syntax error, with positions.
    """
    stream = TokenStream(text)
    desc = ProblemDescription()
    diagnostics: List[Diagnostic] = []
    while stream.current.type != TokenType.EOF:
        try:
            _statement(stream, desc)
        except DtpSyntaxError as e:
            diagnostics.append(Diagnostic(e.token.line, e.token.column, "syntax", str(e)))
            stream.recover()
    if not desc.name and not diagnostics:
        diagnostics.append(Diagnostic(1, 1, "syntax", "missing 'problem' statement"))
    if diagnostics:
        logging.debug(f"{len(diagnostics)} syntax error(s) in problem file")
        raise ProblemDefinitionError(diagnostics)
    return desc


def parse_problem(text: str) -> DecisionProblem:
    """
    Parse, check and build a DecisionProblem from problem-file text.

    Args:
        text: Content of a .dtp file.

    Returns:
        The validated DecisionProblem.

    Raises:
        ProblemDefinitionError: carrying every syntax, well-definedness or
            semantic error found, each with its line and column.
    """
    desc = parse_description(text)
    report = check_well_defined(desc)
    if not report.well_defined:
        raise ProblemDefinitionError(well_defined_diagnostics(desc, report))
    return build_problem(desc)
