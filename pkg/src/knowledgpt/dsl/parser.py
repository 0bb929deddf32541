"""Parser for the search language, plus the pattern-scan fallback for broken programs.

Generated code is Python syntax, so the front-end is the stdlib ``ast`` parser;
everything it accepts is then narrowed to the closed statement and expression
subset. Anything outside the subset (arithmetic, order comparisons, attribute
access, user-defined calls, f-strings) is a ParseError carrying the offending
position, and the caller is expected to degrade to ``extract_calls``.
"""

from __future__ import annotations

import ast as pyast
from dataclasses import dataclass

from knowledgpt.dsl.ast import (
    BUILTIN_KWARGS,
    BUILTIN_NAMES,
    AppendMsg,
    AssignCall,
    AssignLit,
    Call,
    Comparison,
    Cond,
    Expr,
    For,
    If,
    Index,
    ListLit,
    Return,
    SearchProgram,
    Stmt,
    StrLit,
    Truthy,
    VarRef,
)

#: Name of the globally visible user query inside every program.
QUERY_GLOBAL = "query"


@dataclass
class ParseError(Exception):
    message: str
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        return f"{self.message} (line {self.line}, column {self.column})"


def _fail(node: pyast.AST | None, message: str) -> ParseError:
    line = getattr(node, "lineno", 0) or 0
    column = getattr(node, "col_offset", 0) or 0
    return ParseError(message, line, column)


def _name(node: pyast.expr, what: str) -> str:
    if isinstance(node, pyast.Name):
        return node.id
    raise _fail(node, f"{what} must be a plain variable name")


def _expr(node: pyast.expr) -> Expr:
    if isinstance(node, pyast.Constant) and isinstance(node.value, str):
        return StrLit(node.value)
    if isinstance(node, pyast.Name):
        return VarRef(node.id)
    if isinstance(node, pyast.Subscript):
        target = node.value
        index = node.slice
        if (
            isinstance(target, pyast.Name)
            and isinstance(index, pyast.Constant)
            and isinstance(index.value, int)
            and not isinstance(index.value, bool)
        ):
            return Index(VarRef(target.id), index.value)
        raise _fail(node, "only integer indexing of a variable is supported")
    if isinstance(node, pyast.List):
        return ListLit(tuple(_item(elt) for elt in node.elts))
    raise _fail(node, f"unsupported expression {type(node).__name__}")


def _item(node: pyast.expr) -> StrLit | VarRef | Index:
    expr = _expr(node)
    if isinstance(expr, ListLit):
        raise _fail(node, "nested lists are not supported")
    return expr


def _call(node: pyast.Call) -> Call:
    if not isinstance(node.func, pyast.Name):
        raise _fail(node, "only the three KB functions may be called")
    name = node.func.id
    builtin = BUILTIN_NAMES.get(name)
    if builtin is None:
        raise _fail(node, f"unknown function {name!r}")
    if node.args:
        raise _fail(node, f"{name} takes keyword arguments only")
    required = BUILTIN_KWARGS[builtin]
    given: dict[str, ListLit | VarRef | Index] = {}
    for keyword in node.keywords:
        if keyword.arg is None:
            raise _fail(node, "** argument unpacking is not supported")
        if keyword.arg in given:
            raise _fail(node, f"duplicate keyword {keyword.arg!r}")
        value = _expr(keyword.value)
        if isinstance(value, StrLit):
            raise _fail(keyword.value, f"{keyword.arg} must be a list of aliases")
        given[keyword.arg] = value
    if set(given) != set(required):
        raise _fail(
            node,
            f"{name} requires exactly the keywords ({', '.join(required)})",
        )
    return Call(builtin, tuple((kw, given[kw]) for kw in required))


def _cond(node: pyast.expr) -> Cond:
    if isinstance(node, (pyast.Name, pyast.Subscript)):
        expr = _expr(node)
        assert isinstance(expr, (VarRef, Index))
        return Truthy(expr)
    if isinstance(node, pyast.Compare):
        ops = {type(op) for op in node.ops}
        if ops == {pyast.Eq}:
            op = "=="
        elif ops == {pyast.NotEq}:
            op = "!="
        else:
            raise _fail(node, "only == and != comparisons are supported")
        operands = tuple(_expr(n) for n in [node.left, *node.comparators])
        for operand in operands:
            if isinstance(operand, ListLit):
                raise _fail(node, "cannot compare list literals")
        return Comparison(op, operands)
    raise _fail(node, f"unsupported condition {type(node).__name__}")


def _stmt(node: pyast.stmt) -> Stmt:
    if isinstance(node, pyast.Assign):
        if len(node.targets) != 1:
            raise _fail(node, "chained assignment is not supported")
        target = node.targets[0]
        if isinstance(node.value, pyast.Call):
            if isinstance(target, pyast.Tuple):
                names = tuple(_name(t, "assignment target") for t in target.elts)
                if len(names) != 2:
                    raise _fail(node, "a call assigns one or two variables")
            else:
                names = (_name(target, "assignment target"),)
            return AssignCall(names, _call(node.value))
        name = _name(target, "assignment target")
        value = _expr(node.value)
        if isinstance(value, (VarRef, Index)):
            raise _fail(node, "plain variable aliasing is not supported")
        return AssignLit(name, value)
    if isinstance(node, pyast.AugAssign):
        if not isinstance(node.op, pyast.Add):
            raise _fail(node, "only += accumulation is supported")
        target = _name(node.target, "accumulation target")
        expr = _expr(node.value)
        if not isinstance(expr, (StrLit, VarRef)):
            raise _fail(node, "can only append a string literal or variable")
        return AppendMsg(target, expr)
    if isinstance(node, pyast.If):
        branches: list[tuple[Cond, tuple[Stmt, ...]]] = []
        current: pyast.stmt | None = node
        orelse: tuple[Stmt, ...] = ()
        while isinstance(current, pyast.If):
            branches.append((_cond(current.test), _block(current.body)))
            rest = current.orelse
            if len(rest) == 1 and isinstance(rest[0], pyast.If):
                current = rest[0]
            else:
                orelse = _block(rest)
                current = None
        return If(tuple(branches), orelse)
    if isinstance(node, pyast.For):
        if node.orelse:
            raise _fail(node, "for-else is not supported")
        var = _name(node.target, "loop variable")
        if not isinstance(node.iter, pyast.Name):
            raise _fail(node.iter, "loops iterate over a variable")
        return For(var, VarRef(node.iter.id), _block(node.body))
    if isinstance(node, pyast.Return):
        if node.value is None:
            raise _fail(node, "return must name the message accumulator")
        return Return(_name(node.value, "return value"))
    raise _fail(node, f"unsupported statement {type(node).__name__}")


def _block(nodes: list[pyast.stmt]) -> tuple[Stmt, ...]:
    return tuple(_stmt(n) for n in nodes)


def _check_bindings(stmts: tuple[Stmt, ...], bound: set[str]) -> None:
    """Every variable read must be bound by an earlier statement or be the query global."""

    def check_expr(expr: Expr) -> None:
        if isinstance(expr, VarRef):
            if expr.name not in bound:
                raise ParseError(f"variable {expr.name!r} read before assignment")
        elif isinstance(expr, Index):
            check_expr(expr.var)
        elif isinstance(expr, ListLit):
            for item in expr.items:
                check_expr(item)

    for stmt in stmts:
        if isinstance(stmt, AssignCall):
            for _, value in stmt.call.args:
                check_expr(value)
            bound.update(stmt.targets)
        elif isinstance(stmt, AssignLit):
            check_expr(stmt.value)
            bound.add(stmt.target)
        elif isinstance(stmt, AppendMsg):
            if stmt.target not in bound:
                raise ParseError(f"accumulator {stmt.target!r} used before assignment")
            check_expr(stmt.expr)
        elif isinstance(stmt, If):
            for cond, body in stmt.branches:
                if isinstance(cond, Truthy):
                    check_expr(cond.expr)
                else:
                    for operand in cond.operands:
                        check_expr(operand)
                _check_bindings(body, bound)
            _check_bindings(stmt.orelse, bound)
        elif isinstance(stmt, For):
            check_expr(stmt.iterable)
            bound.add(stmt.var)
            _check_bindings(stmt.body, bound)
        elif isinstance(stmt, Return):
            if stmt.var not in bound:
                raise ParseError(f"returned variable {stmt.var!r} is never assigned")


def parse(code: str) -> SearchProgram:
    """Parse generated code into a SearchProgram, or raise ParseError with a position."""
    if not code.strip():
        raise ParseError("empty program")
    try:
        module = pyast.parse(code)
    except SyntaxError as exc:
        raise ParseError(exc.msg or "syntax error", exc.lineno or 0, exc.offset or 0) from exc
    functions = [n for n in module.body if isinstance(n, pyast.FunctionDef)]
    if len(module.body) != 1 or len(functions) != 1:
        raise ParseError("expected exactly one function definition")
    fn = functions[0]
    if fn.name != "search":
        raise ParseError(f"expected a function named 'search', got {fn.name!r}", fn.lineno)
    if fn.args.args or fn.args.posonlyargs or fn.args.kwonlyargs or fn.args.vararg or fn.args.kwarg:
        raise ParseError("search() takes no parameters", fn.lineno)
    statements = _block(fn.body)
    if not statements or not isinstance(statements[-1], Return):
        raise ParseError("the final statement must return the message accumulator")
    _check_bindings(statements, {QUERY_GLOBAL})
    return SearchProgram(statements)


def extract_calls(code: str) -> list[Call]:
    """Scan arbitrary text for well-formed builtin calls, in textual order.

    The robustness fallback for unparseable programs: only calls whose required
    keywords are all literal, non-empty alias lists survive; arguments that
    reference variables from other calls degrade to empty lists, and a call left
    with an empty required list is dropped.
    """
    calls: list[Call] = []
    for start, name in sorted(_call_sites(code)):
        snippet = _balanced_call(code, start)
        if snippet is None:
            continue
        try:
            node = pyast.parse(snippet, mode="eval").body
        except SyntaxError:
            continue
        if not isinstance(node, pyast.Call):
            continue
        builtin = BUILTIN_NAMES[name]
        required = BUILTIN_KWARGS[builtin]
        kwargs: dict[str, ListLit] = {}
        for keyword in node.keywords:
            if keyword.arg is None or keyword.arg not in required:
                continue
            value = keyword.value
            if not isinstance(value, pyast.List):
                continue  # variable reference: degrades to an empty list
            literals = tuple(
                StrLit(elt.value)
                for elt in value.elts
                if isinstance(elt, pyast.Constant)
                and isinstance(elt.value, str)
                and elt.value.strip()
            )
            if literals:
                kwargs[keyword.arg] = ListLit(literals)
        if set(kwargs) == set(required):
            calls.append(Call(builtin, tuple((kw, kwargs[kw]) for kw in required)))
    return calls


def _call_sites(code: str):
    for name in BUILTIN_NAMES:
        start = 0
        while True:
            at = code.find(name, start)
            if at == -1:
                break
            before = code[at - 1] if at > 0 else " "
            if not (before.isalnum() or before == "_"):
                yield at, name
            start = at + len(name)


def _balanced_call(code: str, start: int) -> str | None:
    """Slice one complete call expression starting at ``start``, honoring strings."""
    open_paren = code.find("(", start)
    if open_paren == -1 or code[start:open_paren].strip() not in BUILTIN_NAMES:
        return None
    depth = 0
    quote: str | None = None
    for i in range(open_paren, len(code)):
        ch = code[i]
        if quote is not None:
            if ch == quote and code[i - 1] != "\\":
                quote = None
            continue
        if ch in "'\"":
            quote = ch
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return code[start : i + 1]
    return None
