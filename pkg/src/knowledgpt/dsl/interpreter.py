"""Interpreter for search programs.

Execution follows the decorated-code contract: the whole run is guarded so that
any runtime failure (a builtin error, an unbound variable, indexing an empty
result) stops further statements but keeps everything accumulated so far. The
user query is visible to builtins as the ``query`` global so KB access can link
entities in context.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

from knowledgpt.dsl.ast import (
    AppendMsg,
    AssignCall,
    AssignLit,
    Call,
    Comparison,
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
from knowledgpt.dsl.parser import QUERY_GLOBAL
from knowledgpt.model import Query, TraceLog

#: Iterations allowed per for-loop before execution is cut off.
LOOP_CAP = 16

Value = str | list


class KbAccessor(Protocol):
    """One KB bound behind the three builtins; owns the trace for this execution."""

    kb_tag: str
    trace: TraceLog

    def call(self, call: Call, kwargs: dict[str, list[str]]) -> tuple[Value, str]: ...


@dataclass
class ExecOutcome:
    messages: str
    trace: TraceLog
    halted_early: bool = False
    halt_reason: str | None = None


class _Return(Exception):
    pass


class _LoopLimit(Exception):
    pass


class _Interpreter:
    def __init__(self, accessor: KbAccessor, query: Query) -> None:
        self.accessor = accessor
        self.env: dict[str, Value] = {QUERY_GLOBAL: query.text}

    def eval(self, expr: Expr) -> Value:
        if isinstance(expr, StrLit):
            return expr.value
        if isinstance(expr, VarRef):
            return self.env[expr.name]
        if isinstance(expr, Index):
            container = self.env[expr.var.name]
            return container[expr.index]
        if isinstance(expr, ListLit):
            out: list[str] = []
            for item in expr.items:
                value = self.eval(item)
                if isinstance(value, list):
                    out.extend(str(v) for v in value)
                else:
                    out.append(str(value))
            return out
        raise TypeError(f"unknown expression {expr!r}")

    def eval_aliases(self, expr: Expr) -> list[str]:
        value = self.eval(expr)
        if isinstance(value, str):
            return [value]
        return [str(v) for v in value]

    def test(self, cond) -> bool:
        if isinstance(cond, Truthy):
            return bool(self.eval(cond.expr))
        assert isinstance(cond, Comparison)
        values = [self.eval(op) for op in cond.operands]
        pairs = zip(values, values[1:])
        if cond.op == "==":
            return all(a == b for a, b in pairs)
        return all(a != b for a, b in pairs)

    def run_block(self, stmts: tuple[Stmt, ...]) -> None:
        for stmt in stmts:
            self.run_stmt(stmt)

    def run_stmt(self, stmt: Stmt) -> None:
        if isinstance(stmt, AssignLit):
            self.env[stmt.target] = self.eval(stmt.value)
        elif isinstance(stmt, AssignCall):
            kwargs = {name: self.eval_aliases(value) for name, value in stmt.call.args}
            value, message = self.accessor.call(stmt.call, kwargs)
            if len(stmt.targets) == 2:
                self.env[stmt.targets[0]] = value
                self.env[stmt.targets[1]] = message
            else:
                self.env[stmt.targets[0]] = value
        elif isinstance(stmt, AppendMsg):
            current = self.env[stmt.target]
            addition = self.eval(stmt.expr)
            if not isinstance(current, str) or not isinstance(addition, str):
                raise TypeError("message accumulation needs string values")
            self.env[stmt.target] = current + addition
        elif isinstance(stmt, If):
            for cond, body in stmt.branches:
                if self.test(cond):
                    self.run_block(body)
                    return
            self.run_block(stmt.orelse)
        elif isinstance(stmt, For):
            sequence = self.env[stmt.iterable.name]
            if isinstance(sequence, str):
                sequence = [sequence]
            for i, item in enumerate(sequence):
                if i >= LOOP_CAP:
                    raise _LoopLimit(f"loop over {stmt.iterable.name!r} exceeded {LOOP_CAP} iterations")
                self.env[stmt.var] = item
                self.run_block(stmt.body)
        elif isinstance(stmt, Return):
            raise _Return()
        else:
            raise TypeError(f"unknown statement {stmt!r}")


def execute(program: SearchProgram, accessor: KbAccessor, query: Query) -> ExecOutcome:
    """Run a program against one KB; failures are absorbed, never raised."""
    interp = _Interpreter(accessor, query)
    accumulator = program.return_var
    halted = False
    reason: str | None = None
    try:
        interp.run_block(program.statements)
    except _Return:
        pass
    except _LoopLimit as exc:
        halted, reason = True, str(exc)
    except Exception as exc:  # the try-except decoration: keep successful steps
        halted, reason = True, f"{type(exc).__name__}: {exc}"
    messages = interp.env.get(accumulator, "")
    if not isinstance(messages, str):
        messages = ""
    return ExecOutcome(
        messages=messages,
        trace=accessor.trace,
        halted_early=halted,
        halt_reason=reason,
    )


def program_from_calls(calls: list[Call]) -> SearchProgram:
    """Wrap extracted calls into a canonical program (the fallback execution path)."""
    statements: list[Stmt] = [AssignLit("messages", StrLit(""))]
    for i, call in enumerate(calls):
        statements.append(AssignCall((f"result_{i}", "msg"), call))
        statements.append(AppendMsg("messages", VarRef("msg")))
    statements.append(Return("messages"))
    return SearchProgram(tuple(statements))
