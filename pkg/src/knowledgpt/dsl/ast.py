"""AST for the restricted search language that generated programs are written in.

The language is a closed subset of Python syntax::

    program    = "def search():" block
    block      = statement+
    statement  = assign | append | if | for | return
    assign     = NAME ["," NAME] "=" (call | literal)
    append     = NAME "+=" (STRING | NAME)
    call       = BUILTIN "(" kwarg {"," kwarg} ")"
    kwarg      = NAME "=" (list | NAME | NAME "[" INT "]")
    list       = "[" [item {"," item}] "]"
    item       = STRING | NAME | NAME "[" INT "]"
    if         = "if" cond ":" block {"elif" cond ":" block} ["else:" block]
    cond       = NAME | NAME "[" INT "]" | operand ("==" operand)+ | operand ("!=" operand)+
    operand    = STRING | NAME | NAME "[" INT "]"
    for        = "for" NAME "in" NAME ":" block
    return     = "return" NAME

There is no arithmetic, no attribute access, no user-defined calls, and no order
comparison; programs using those are rejected at parse time and handled by the
call-extraction fallback instead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union


class Builtin(enum.Enum):
    GET_ENTITY_INFO = "get_entity_info"
    FIND_ENTITY_OR_VALUE = "find_entity_or_value"
    FIND_RELATIONSHIP = "find_relationship"


#: Required keyword arguments, in canonical rendering order, per builtin.
BUILTIN_KWARGS: dict[Builtin, tuple[str, ...]] = {
    Builtin.GET_ENTITY_INFO: ("entity_aliases",),
    Builtin.FIND_ENTITY_OR_VALUE: ("entity_aliases", "relation_aliases"),
    Builtin.FIND_RELATIONSHIP: ("entity1_aliases", "entity2_aliases"),
}

BUILTIN_NAMES = {b.value: b for b in Builtin}


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class Index:
    var: VarRef
    index: int


@dataclass(frozen=True)
class ListLit:
    items: tuple[Union[StrLit, VarRef, Index], ...]


Expr = Union[StrLit, VarRef, Index, ListLit]


@dataclass(frozen=True)
class Call:
    builtin: Builtin
    args: tuple[tuple[str, Union[ListLit, VarRef, Index]], ...]  # canonical kwarg order

    def arg(self, name: str):
        for key, value in self.args:
            if key == name:
                return value
        raise KeyError(name)


@dataclass(frozen=True)
class Truthy:
    expr: Union[VarRef, Index]


@dataclass(frozen=True)
class Comparison:
    op: str  # "==" or "!="
    operands: tuple[Expr, ...]  # chained, at least two


Cond = Union[Truthy, Comparison]


@dataclass(frozen=True)
class AssignCall:
    targets: tuple[str, ...]  # one or two names
    call: Call


@dataclass(frozen=True)
class AssignLit:
    target: str
    value: Union[StrLit, ListLit]


@dataclass(frozen=True)
class AppendMsg:
    target: str
    expr: Union[StrLit, VarRef]


@dataclass(frozen=True)
class If:
    branches: tuple[tuple[Cond, tuple["Stmt", ...]], ...]  # if + elif chain
    orelse: tuple["Stmt", ...]


@dataclass(frozen=True)
class For:
    var: str
    iterable: VarRef
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class Return:
    var: str


Stmt = Union[AssignCall, AssignLit, AppendMsg, If, For, Return]


@dataclass(frozen=True)
class SearchProgram:
    statements: tuple[Stmt, ...]

    @property
    def return_var(self) -> str:
        last = self.statements[-1]
        assert isinstance(last, Return)
        return last.var


def _render_expr(expr: Expr) -> str:
    if isinstance(expr, StrLit):
        return repr(expr.value)
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, Index):
        return f"{expr.var.name}[{expr.index}]"
    if isinstance(expr, ListLit):
        return "[" + ", ".join(_render_expr(item) for item in expr.items) + "]"
    raise TypeError(f"unknown expression {expr!r}")


def render_call(call: Call) -> str:
    args = ", ".join(f"{name} = {_render_expr(value)}" for name, value in call.args)
    return f"{call.builtin.value}({args})"


def _render_cond(cond: Cond) -> str:
    if isinstance(cond, Truthy):
        return _render_expr(cond.expr)
    return f" {cond.op} ".join(_render_expr(op) for op in cond.operands)


def _render_block(stmts: tuple[Stmt, ...], indent: int, lines: list[str]) -> None:
    pad = "    " * indent
    for stmt in stmts:
        if isinstance(stmt, AssignLit):
            lines.append(f"{pad}{stmt.target} = {_render_expr(stmt.value)}")
        elif isinstance(stmt, AssignCall):
            lines.append(f"{pad}{', '.join(stmt.targets)} = {render_call(stmt.call)}")
        elif isinstance(stmt, AppendMsg):
            lines.append(f"{pad}{stmt.target} += {_render_expr(stmt.expr)}")
        elif isinstance(stmt, If):
            for i, (cond, body) in enumerate(stmt.branches):
                keyword = "if" if i == 0 else "elif"
                lines.append(f"{pad}{keyword} {_render_cond(cond)}:")
                _render_block(body, indent + 1, lines)
            if stmt.orelse:
                lines.append(f"{pad}else:")
                _render_block(stmt.orelse, indent + 1, lines)
        elif isinstance(stmt, For):
            lines.append(f"{pad}for {stmt.var} in {stmt.iterable.name}:")
            _render_block(stmt.body, indent + 1, lines)
        elif isinstance(stmt, Return):
            lines.append(f"{pad}return {stmt.var}")
        else:
            raise TypeError(f"unknown statement {stmt!r}")


def pretty(program: SearchProgram) -> str:
    """Render a program back to canonical source text (parse round-trips it)."""
    lines = ["def search():"]
    _render_block(program.statements, 1, lines)
    return "\n".join(lines)
