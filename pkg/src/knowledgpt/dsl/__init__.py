from knowledgpt.dsl.ast import (
    AppendMsg,
    AssignCall,
    AssignLit,
    Builtin,
    Call,
    Comparison,
    For,
    If,
    Index,
    ListLit,
    Return,
    SearchProgram,
    StrLit,
    Truthy,
    VarRef,
    pretty,
)
from knowledgpt.dsl.interpreter import ExecOutcome, execute, program_from_calls
from knowledgpt.dsl.parser import ParseError, extract_calls, parse

__all__ = [
    "AppendMsg",
    "AssignCall",
    "AssignLit",
    "Builtin",
    "Call",
    "Comparison",
    "ExecOutcome",
    "For",
    "If",
    "Index",
    "ListLit",
    "ParseError",
    "Return",
    "SearchProgram",
    "StrLit",
    "Truthy",
    "VarRef",
    "execute",
    "extract_calls",
    "parse",
    "pretty",
    "program_from_calls",
]
