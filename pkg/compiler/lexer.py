"""
PLY tokenizer for mini-G.
"""

import logging

import ply.lex as lex

from compiler.errors import MiniGSyntaxError

logger = logging.getLogger(__name__)


def find_column(text: str, lexpos: int) -> int:
    """1-based column of a character offset."""
    return lexpos - text.rfind("\n", 0, lexpos)


class MiniGLexer:
    """Class-based ply.lex lexer; ``build()`` before use."""

    reserved = {
        "int": "INT",
        "if": "IF",
        "else": "ELSE",
        "while": "WHILE",
        "return": "RETURN",
        "exit": "EXIT",
    }

    tokens = [
        "ID", "NUMBER",
        "LPAREN", "RPAREN", "LBRACE", "RBRACE", "LBRACKET", "RBRACKET",
        "SEMI", "COMMA", "ASSIGN",
        "PLUS", "MINUS", "STAR", "AMP", "PIPE", "SHL",
        "EQ", "NE", "LT", "GT", "LE", "GE",
    ] + list(reserved.values())

    t_ignore = " \t\r"

    t_LPAREN = r"\("
    t_RPAREN = r"\)"
    t_LBRACE = r"\{"
    t_RBRACE = r"\}"
    t_LBRACKET = r"\["
    t_RBRACKET = r"\]"
    t_SEMI = r";"
    t_COMMA = r","
    t_SHL = r"<<"
    t_EQ = r"=="
    t_NE = r"!="
    t_LE = r"<="
    t_GE = r">="
    t_LT = r"<"
    t_GT = r">"
    t_ASSIGN = r"="
    t_PLUS = r"\+"
    t_MINUS = r"-"
    t_STAR = r"\*"
    t_AMP = r"&"
    t_PIPE = r"\|"

    def __init__(self):
        self.lexer = None
        self.text = ""

    def t_BLOCKCOMMENT(self, t):
        r"/\*(.|\n)*?\*/"
        t.lexer.lineno += t.value.count("\n")

    def t_COMMENT(self, t):
        r"//[^\n]*"
        pass

    def t_NUMBER(self, t):
        r"0[xX][0-9a-fA-F]+|\d+"
        t.value = int(t.value, 16) if t.value[:2].lower() == "0x" else int(t.value, 10)
        return t

    def t_ID(self, t):
        r"[A-Za-z_][A-Za-z0-9_]*"
        t.type = self.reserved.get(t.value, "ID")
        return t

    def t_newline(self, t):
        r"\n+"
        t.lexer.lineno += len(t.value)

    def t_error(self, t):
        raise MiniGSyntaxError(
            f"illegal character {t.value[0]!r}",
            line=t.lexer.lineno,
            column=find_column(self.text, t.lexpos),
        )

    def build(self, **kwargs) -> "MiniGLexer":
        self.lexer = lex.lex(module=self, **kwargs)
        return self

    def input(self, text: str) -> None:
        self.text = text
        self.lexer.lineno = 1
        self.lexer.input(text)

    def token(self):
        return self.lexer.token()

    def tokenize(self, text: str) -> list:
        """All tokens of ``text`` as a list (used by tests and diagnostics)."""
        self.input(text)
        found = []
        while True:
            tok = self.token()
            if tok is None:
                return found
            found.append(tok)
