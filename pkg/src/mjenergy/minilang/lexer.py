import re
from dataclasses import dataclass

from ..errors import MJSyntaxError

KEYWORDS = {
    "class", "public", "void", "int", "float", "bool", "boolean", "char",
    "if", "else", "for", "while", "break", "return", "new", "null", "this",
    "true", "false", "List", "Buffer",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<float>(?:\d+\.\d*(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\.\d+(?:[eE][+-]?\d+)?)[fF]?|\d+[fF])
  | (?P<int>\d+)
  | (?P<char>'(?:\\.|[^'\\\n])')
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\+\+|--|\+=|-=|\*=|/=|%=|==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){}\[\];,.])
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"n": "\n", "t": "\t", "0": "\0", "'": "'", "\\": "\\", "r": "\r"}


@dataclass(frozen=True)
class Token:
    kind: str  # 'int', 'float', 'char', 'ident', 'kw', 'op', 'eof'
    text: str
    line: int
    col: int
    value: object = None


def tokenize(source, filename=None):
    tokens = []
    pos = 0
    line, line_start = 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise MJSyntaxError(f"unexpected character {source[pos]!r}", line, col, filename=filename)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            value = None
            if kind == "int":
                value = int(text)
            elif kind == "float":
                value = float(text.rstrip("fF"))
            elif kind == "char":
                body = text[1:-1]
                if body.startswith("\\"):
                    if body[1] not in _ESCAPES:
                        raise MJSyntaxError(f"bad escape {body!r}", line, col, filename=filename)
                    value = _ESCAPES[body[1]]
                else:
                    value = body
            elif kind == "ident" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, line, col, value))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
