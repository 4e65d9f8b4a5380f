"""
LALR parser for mini-G built with ply.yacc.

Grammar (C precedence, lowest first):
    program    : function+
    function   : 'int' ID '(' params? ')' block
    param      : 'int' ID | 'int' '*' ID
    block      : '{' statement* '}'
    statement  : decl ';' | expr '=' expr ';' | expr ';'
               | 'if' '(' expr ')' statement ('else' statement)?
               | 'while' '(' expr ')' statement
               | 'return' expr ';' | 'exit' '(' expr ')' ';' | block
    decl       : 'int' ID ('=' expr)? | 'int' ID '[' NUMBER ']' | 'int' '*' ID ('=' expr)?
    expr       : expr OP expr | '-' expr | '*' expr | '&' expr | postfix
    postfix    : primary | postfix '[' expr ']' | ID '(' args? ')'
    primary    : ID | NUMBER | '(' expr ')'
"""

import logging
import threading

import ply.yacc as yacc

from compiler.errors import MiniGSyntaxError
from compiler.lexer import MiniGLexer, find_column
from compiler.syntax import (
    AddrOf,
    Assign,
    Binary,
    Block,
    Call,
    Decl,
    DeclKind,
    Deref,
    Exit,
    ExprStmt,
    Function,
    If,
    Index,
    Neg,
    Num,
    Param,
    Program,
    Return,
    Var,
    While,
)

logger = logging.getLogger(__name__)

LVALUE_TYPES = (Var, Index, Deref)


class MiniGParser:
    """Holds the ply lexer and LALR tables; ``parse`` is serialized by a lock."""

    tokens = MiniGLexer.tokens

    precedence = (
        ("nonassoc", "IFX"),
        ("nonassoc", "ELSE"),
        ("left", "PIPE"),
        ("left", "AMP"),
        ("left", "EQ", "NE"),
        ("left", "LT", "GT", "LE", "GE"),
        ("left", "SHL"),
        ("left", "PLUS", "MINUS"),
        ("left", "STAR"),
        ("right", "UMINUS", "DEREF", "ADDR"),
    )

    def __init__(self):
        self.lexer = MiniGLexer().build()
        self.parser = yacc.yacc(
            module=self,
            start="program",
            debug=False,
            write_tables=False,
            errorlog=yacc.NullLogger(),
        )
        self._lock = threading.Lock()

    def parse(self, source: str) -> Program:
        with self._lock:
            self.lexer.input(source)
            return self.parser.parse(source, lexer=self.lexer)

    # Top level

    def p_program(self, p):
        """program : function
                   | program function"""
        if len(p) == 2:
            p[0] = Program(functions=[p[1]])
        else:
            p[1].functions.append(p[2])
            p[0] = p[1]

    def p_function(self, p):
        """function : INT ID LPAREN params RPAREN block"""
        p[0] = Function(name=p[2], params=p[4], body=p[6], line=p.lineno(2))

    def p_params_empty(self, p):
        """params : """
        p[0] = []

    def p_params(self, p):
        """params : param_list"""
        p[0] = p[1]

    def p_param_list(self, p):
        """param_list : param
                      | param_list COMMA param"""
        p[0] = [p[1]] if len(p) == 2 else p[1] + [p[3]]

    def p_param(self, p):
        """param : INT ID
                 | INT STAR ID"""
        if len(p) == 3:
            p[0] = Param(name=p[2], line=p.lineno(2))
        else:
            p[0] = Param(name=p[3], is_pointer=True, line=p.lineno(3))

    # Statements

    def p_block(self, p):
        """block : LBRACE statements RBRACE"""
        p[0] = Block(statements=p[2], line=p.lineno(1))

    def p_statements(self, p):
        """statements :
                      | statements statement"""
        p[0] = [] if len(p) == 1 else p[1] + [p[2]]

    def p_statement_decl(self, p):
        """statement : decl SEMI"""
        p[0] = p[1]

    def p_statement_assign(self, p):
        """statement : expr ASSIGN expr SEMI"""
        if not isinstance(p[1], LVALUE_TYPES):
            self._error_at(p, 2, "left side of assignment is not assignable")
        p[0] = Assign(target=p[1], value=p[3], line=p.lineno(2))

    def p_statement_expr(self, p):
        """statement : expr SEMI"""
        if not isinstance(p[1], Call):
            self._error_at(p, 2, "expression statement has no effect")
        p[0] = ExprStmt(expr=p[1], line=p.lineno(2))

    def p_statement_if(self, p):
        """statement : IF LPAREN expr RPAREN statement %prec IFX
                     | IF LPAREN expr RPAREN statement ELSE statement"""
        otherwise = p[7] if len(p) == 8 else None
        p[0] = If(cond=p[3], then=p[5], otherwise=otherwise, line=p.lineno(1))

    def p_statement_while(self, p):
        """statement : WHILE LPAREN expr RPAREN statement"""
        p[0] = While(cond=p[3], body=p[5], line=p.lineno(1))

    def p_statement_return(self, p):
        """statement : RETURN expr SEMI"""
        p[0] = Return(value=p[2], line=p.lineno(1))

    def p_statement_exit(self, p):
        """statement : EXIT LPAREN expr RPAREN SEMI"""
        p[0] = Exit(value=p[3], line=p.lineno(1))

    def p_statement_block(self, p):
        """statement : block"""
        p[0] = p[1]

    def p_decl_scalar(self, p):
        """decl : INT ID
                | INT ID ASSIGN expr"""
        init = p[4] if len(p) == 5 else None
        p[0] = Decl(name=p[2], kind=DeclKind.SCALAR, init=init, line=p.lineno(2))

    def p_decl_array(self, p):
        """decl : INT ID LBRACKET NUMBER RBRACKET"""
        if p[4] < 1:
            self._error_at(p, 4, f"array {p[2]} must have at least one element")
        p[0] = Decl(name=p[2], kind=DeclKind.ARRAY, size=p[4], line=p.lineno(2))

    def p_decl_pointer(self, p):
        """decl : INT STAR ID
                | INT STAR ID ASSIGN expr"""
        init = p[5] if len(p) == 6 else None
        p[0] = Decl(name=p[3], kind=DeclKind.POINTER, init=init, line=p.lineno(3))

    # Expressions

    def p_expr_binary(self, p):
        """expr : expr PIPE expr
                | expr AMP expr
                | expr EQ expr
                | expr NE expr
                | expr LT expr
                | expr GT expr
                | expr LE expr
                | expr GE expr
                | expr SHL expr
                | expr PLUS expr
                | expr MINUS expr
                | expr STAR expr"""
        p[0] = Binary(op=p[2], left=p[1], right=p[3], line=p.lineno(2))

    def p_expr_neg(self, p):
        """expr : MINUS expr %prec UMINUS"""
        if isinstance(p[2], Num):
            p[0] = Num(value=-p[2].value, line=p.lineno(1))
        else:
            p[0] = Neg(operand=p[2], line=p.lineno(1))

    def p_expr_deref(self, p):
        """expr : STAR expr %prec DEREF"""
        p[0] = Deref(operand=p[2], line=p.lineno(1))

    def p_expr_addr(self, p):
        """expr : AMP expr %prec ADDR"""
        p[0] = AddrOf(operand=p[2], line=p.lineno(1))

    def p_expr_postfix(self, p):
        """expr : postfix"""
        p[0] = p[1]

    def p_postfix_primary(self, p):
        """postfix : primary"""
        p[0] = p[1]

    def p_postfix_index(self, p):
        """postfix : postfix LBRACKET expr RBRACKET"""
        p[0] = Index(base=p[1], index=p[3], line=p.lineno(2))

    def p_postfix_call(self, p):
        """postfix : ID LPAREN args RPAREN"""
        p[0] = Call(name=p[1], args=p[3], line=p.lineno(1))

    def p_args_empty(self, p):
        """args : """
        p[0] = []

    def p_args(self, p):
        """args : arg_list"""
        p[0] = p[1]

    def p_arg_list(self, p):
        """arg_list : expr
                    | arg_list COMMA expr"""
        p[0] = [p[1]] if len(p) == 2 else p[1] + [p[3]]

    def p_primary_id(self, p):
        """primary : ID"""
        p[0] = Var(name=p[1], line=p.lineno(1))

    def p_primary_number(self, p):
        """primary : NUMBER"""
        if p[1] > 0xFFFFFFFF:
            self._error_at(p, 1, f"literal {p[1]} does not fit in 32 bits")
        p[0] = Num(value=p[1], line=p.lineno(1))

    def p_primary_group(self, p):
        """primary : LPAREN expr RPAREN"""
        p[0] = p[2]

    def p_error(self, tok):
        if tok is None:
            text = self.lexer.text
            line = text.count("\n") + 1
            raise MiniGSyntaxError("unexpected end of input", line=line, column=find_column(text, len(text)))
        raise MiniGSyntaxError(
            f"unexpected {tok.value!r}",
            line=tok.lineno,
            column=find_column(self.lexer.text, tok.lexpos),
        )

    def _error_at(self, p, index: int, message: str) -> None:
        raise MiniGSyntaxError(
            message,
            line=p.lineno(index),
            column=find_column(self.lexer.text, p.lexpos(index)),
        )


_parser = None
_parser_lock = threading.Lock()


def get_parser() -> MiniGParser:
    """Shared parser instance; the LALR tables are built once."""
    global _parser
    with _parser_lock:
        if _parser is None:
            _parser = MiniGParser()
    return _parser


def parse(source: str) -> Program:
    """
    Parse mini-G source text.

    Args:
        source: Program text

    Returns:
        Program AST

    Raises:
        MiniGSyntaxError: With the line and column of the offending token
    """
    program = get_parser().parse(source)
    if program is None:
        raise MiniGSyntaxError("empty program", line=1, column=1)
    logger.debug(f"Parsed {len(program.functions)} functions")
    return program
