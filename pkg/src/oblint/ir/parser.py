"""Line-oriented parser for the textual IR (`.bir` files).

Grammar sketch (one instruction per line; `;` starts a comment; a trailing
`!t` taint marker is accepted and ignored):

    global @name: TYPE [blinded] [= INIT]
    extern name(TYPE, ...) [-> TYPE]
    fn name(%p: TYPE [blinded], ...) [-> TYPE] { BLOCKS }

    TYPE  := i1 | i8 | i32 | i64 | ptr | [N x TYPE] | { TYPE, ... }
    BLOCK := label:  followed by instructions
    OPND  := %name | @name | integer

    %r = alloca TYPE [, N]            %r = load TYPE, OPND
    store TYPE OPND, OPND             %r = addr TYPE, OPND, OPND...
    %r = <binop> TYPE OPND, OPND      %r = icmp <pred> TYPE OPND, OPND
    %r = select OPND, TYPE OPND, OPND %r = cast TYPE, OPND
    %r = phi TYPE [OPND, label], ...  %r = call name(OPND, ...)
    call name(OPND, ...)              br OPND, label, label
    jmp label                         ret [OPND]
"""

from __future__ import annotations

import string
from dataclasses import dataclass

from .core import (
    Addr,
    Alloca,
    BINARY_OPS,
    BinOp,
    Block,
    Br,
    Call,
    Cast,
    Diagnostic,
    ExternDecl,
    Function,
    GlobalDef,
    GlobalRef,
    ICMP_PREDS,
    ICmp,
    IntConst,
    Jmp,
    Load,
    Module,
    Operand,
    Param,
    Phi,
    Ret,
    Select,
    Store,
    ValueRef,
    assign_ids,
)
from .types import ArrayType, IntType, PtrType, StructType, Type

_IDENT_START = set(string.ascii_letters + "_")
_IDENT_CONT = set(string.ascii_letters + string.digits + "_.#")
_PUNCT = {"(", ")", "[", "]", "{", "}", ",", ":", "="}


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col

    def diagnostic(self) -> Diagnostic:
        return Diagnostic("error", self.message, f"{self.line}:{self.col}")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | value | global | int | punct | arrow | taint | newline | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        i, n = 0, len(raw)
        while i < n:
            c = raw[i]
            col = i + 1
            if c in " \t":
                i += 1
                continue
            if c == ";":
                break
            if c in _PUNCT:
                tokens.append(Token("punct", c, lineno, col))
                i += 1
                continue
            if c == "-":
                if i + 1 < n and raw[i + 1] == ">":
                    tokens.append(Token("arrow", "->", lineno, col))
                    i += 2
                    continue
                if i + 1 < n and raw[i + 1].isdigit():
                    j = i + 1
                    while j < n and raw[j].isdigit():
                        j += 1
                    tokens.append(Token("int", raw[i:j], lineno, col))
                    i = j
                    continue
                raise ParseError("stray '-'", lineno, col)
            if c.isdigit():
                j = i
                while j < n and raw[j].isdigit():
                    j += 1
                tokens.append(Token("int", raw[i:j], lineno, col))
                i = j
                continue
            if c in ("%", "@"):
                j = i + 1
                if j >= n or raw[j] not in _IDENT_START:
                    raise ParseError(f"expected name after '{c}'", lineno, col)
                while j < n and raw[j] in _IDENT_CONT:
                    j += 1
                kind = "value" if c == "%" else "global"
                tokens.append(Token(kind, raw[i + 1:j], lineno, col))
                i = j
                continue
            if c == "!":
                if raw[i:i + 2] == "!t":
                    tokens.append(Token("taint", "!t", lineno, col))
                    i += 2
                    continue
                raise ParseError("expected '!t'", lineno, col)
            if c in _IDENT_START:
                j = i
                while j < n and raw[j] in _IDENT_CONT:
                    j += 1
                tokens.append(Token("ident", raw[i:j], lineno, col))
                i = j
                continue
            raise ParseError(f"unexpected character {c!r}", lineno, col)
        tokens.append(Token("newline", "", lineno, len(raw) + 1))
    tokens.append(Token("eof", "", text.count("\n") + 2, 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers --------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        t = tok or self.peek()
        return ParseError(message, t.line, t.col)

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            got = t.text or t.kind
            raise self.error(f"expected {want!r}, found {got!r}")
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        t = self.peek()
        if t.kind == kind and (text is None or t.text == text):
            return self.next()
        return None

    def skip_newlines(self) -> None:
        while self.peek().kind == "newline":
            self.next()

    def end_statement(self) -> None:
        self.accept("taint")
        t = self.peek()
        if t.kind == "newline":
            self.skip_newlines()
            return
        if t.kind == "eof" or (t.kind == "punct" and t.text == "}"):
            return
        raise self.error(f"expected end of line, found {t.text!r}")

    # -- grammar --------------------------------------------------------------

    def parse_module(self) -> Module:
        m = Module()
        self.skip_newlines()
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "ident" and t.text == "global":
                m.globals.append(self.parse_global())
            elif t.kind == "ident" and t.text == "extern":
                m.externs.append(self.parse_extern())
            elif t.kind == "ident" and t.text == "fn":
                m.functions.append(self.parse_function())
            else:
                raise self.error(
                    f"expected 'global', 'extern' or 'fn', found {t.text or t.kind!r}"
                )
            self.skip_newlines()
        return m

    def parse_type(self) -> Type:
        t = self.peek()
        if t.kind == "ident":
            if t.text in ("i1", "i8", "i32", "i64"):
                self.next()
                return IntType(int(t.text[1:]))
            if t.text == "ptr":
                self.next()
                return PtrType()
            raise self.error(f"unknown type {t.text!r}")
        if t.kind == "punct" and t.text == "[":
            self.next()
            length = int(self.expect("int").text)
            sep = self.expect("ident")
            if sep.text != "x":
                raise self.error("expected 'x' in array type", sep)
            elem = self.parse_type()
            self.expect("punct", "]")
            if length <= 0:
                raise self.error("array length must be positive", t)
            return ArrayType(elem, length)
        if t.kind == "punct" and t.text == "{":
            self.next()
            fields = [self.parse_type()]
            while self.accept("punct", ","):
                fields.append(self.parse_type())
            self.expect("punct", "}")
            return StructType(tuple(fields))
        raise self.error(f"expected type, found {t.text or t.kind!r}")

    def parse_operand(self) -> Operand:
        t = self.peek()
        if t.kind == "value":
            self.next()
            return ValueRef(t.text)
        if t.kind == "global":
            self.next()
            return GlobalRef(t.text)
        if t.kind == "int":
            self.next()
            return IntConst(int(t.text))
        raise self.error(f"expected operand, found {t.text or t.kind!r}")

    def at_operand(self) -> bool:
        return self.peek().kind in ("value", "global", "int")

    def parse_init(self) -> object:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return int(t.text)
        if t.kind == "punct" and t.text in ("[", "{"):
            close = "]" if t.text == "[" else "}"
            self.next()
            items = [self.parse_init()]
            while self.accept("punct", ","):
                items.append(self.parse_init())
            self.expect("punct", close)
            return items
        raise self.error("expected constant initializer")

    def parse_global(self) -> GlobalDef:
        self.expect("ident", "global")
        name = self.expect("global").text
        self.expect("punct", ":")
        ty = self.parse_type()
        blinded = self.accept("ident", "blinded") is not None
        init = None
        if self.accept("punct", "="):
            init = self.parse_init()
        self.end_statement()
        return GlobalDef(name, ty, blinded, init)

    def parse_extern(self) -> ExternDecl:
        self.expect("ident", "extern")
        name = self.expect("ident").text
        self.expect("punct", "(")
        tys: list[Type] = []
        if not (self.peek().kind == "punct" and self.peek().text == ")"):
            tys.append(self.parse_type())
            while self.accept("punct", ","):
                tys.append(self.parse_type())
        self.expect("punct", ")")
        ret_ty = self.parse_type() if self.accept("arrow") else None
        self.end_statement()
        return ExternDecl(name, tys, ret_ty)

    def parse_function(self) -> Function:
        self.expect("ident", "fn")
        name = self.expect("ident").text
        self.expect("punct", "(")
        params: list[Param] = []
        if not (self.peek().kind == "punct" and self.peek().text == ")"):
            params.append(self.parse_param())
            while self.accept("punct", ","):
                params.append(self.parse_param())
        self.expect("punct", ")")
        ret_ty = self.parse_type() if self.accept("arrow") else None
        self.expect("punct", "{")
        fn = Function(name, params, ret_ty, [])
        self.parse_body(fn)
        assign_ids(fn)
        return fn

    def parse_param(self) -> Param:
        name = self.expect("value").text
        self.expect("punct", ":")
        ty = self.parse_type()
        blinded = self.accept("ident", "blinded") is not None
        return Param(name, ty, blinded)

    def parse_body(self, fn: Function) -> None:
        current: Block | None = None
        while True:
            self.skip_newlines()
            t = self.peek()
            if t.kind == "eof":
                raise self.error("unexpected end of file inside function body")
            if t.kind == "punct" and t.text == "}":
                self.next()
                return
            if t.kind == "ident" and self.peek(1).kind == "punct" and self.peek(1).text == ":":
                self.next()
                self.next()
                current = Block(t.text)
                fn.blocks.append(current)
                continue
            if current is None:
                raise self.error("instruction outside any block (missing label?)")
            current.instructions.append(self.parse_instruction())

    def parse_instruction(self):
        t = self.peek()
        if t.kind == "value" and self.peek(1).kind == "punct" and self.peek(1).text == "=":
            result = self.next().text
            self.next()
            inst = self.parse_value_producer(result)
        elif t.kind == "ident":
            inst = self.parse_void_instruction()
        else:
            raise self.error(f"expected instruction, found {t.text or t.kind!r}")
        self.end_statement()
        return inst

    def parse_value_producer(self, result: str):
        op = self.expect("ident")
        if op.text == "alloca":
            ty = self.parse_type()
            count = 1
            if self.accept("punct", ","):
                tok = self.expect("int")
                count = int(tok.text)
                if count <= 0:
                    raise self.error("alloca count must be positive", tok)
            return Alloca(result, ty, count)
        if op.text == "load":
            ty = self.parse_type()
            self.expect("punct", ",")
            return Load(result, ty, self.parse_operand())
        if op.text == "addr":
            ty = self.parse_type()
            self.expect("punct", ",")
            base = self.parse_operand()
            indices: list[Operand] = []
            while self.accept("punct", ","):
                indices.append(self.parse_operand())
            if not indices:
                raise self.error("addr requires at least one index", op)
            return Addr(result, ty, base, tuple(indices))
        if op.text in BINARY_OPS:
            ty = self.parse_type()
            lhs = self.parse_operand()
            self.expect("punct", ",")
            return BinOp(result, op.text, ty, lhs, self.parse_operand())
        if op.text == "icmp":
            pred = self.expect("ident")
            if pred.text not in ICMP_PREDS:
                raise self.error(f"unknown icmp predicate {pred.text!r}", pred)
            ty = self.parse_type()
            lhs = self.parse_operand()
            self.expect("punct", ",")
            return ICmp(result, pred.text, ty, lhs, self.parse_operand())
        if op.text == "select":
            cond = self.parse_operand()
            self.expect("punct", ",")
            ty = self.parse_type()
            if_true = self.parse_operand()
            self.expect("punct", ",")
            return Select(result, cond, ty, if_true, self.parse_operand())
        if op.text == "cast":
            ty = self.parse_type()
            self.expect("punct", ",")
            return Cast(result, ty, self.parse_operand())
        if op.text == "phi":
            ty = self.parse_type()
            incomings = [self.parse_phi_arm()]
            while self.accept("punct", ","):
                incomings.append(self.parse_phi_arm())
            return Phi(result, ty, tuple(incomings))
        if op.text == "call":
            callee, args = self.parse_call_tail()
            return Call(result, callee, args)
        raise self.error(f"unknown instruction {op.text!r}", op)

    def parse_phi_arm(self) -> tuple[Operand, str]:
        self.expect("punct", "[")
        value = self.parse_operand()
        self.expect("punct", ",")
        label = self.expect("ident").text
        self.expect("punct", "]")
        return value, label

    def parse_call_tail(self) -> tuple[str, tuple[Operand, ...]]:
        callee = self.expect("ident").text
        self.expect("punct", "(")
        args: list[Operand] = []
        if not (self.peek().kind == "punct" and self.peek().text == ")"):
            args.append(self.parse_operand())
            while self.accept("punct", ","):
                args.append(self.parse_operand())
        self.expect("punct", ")")
        return callee, tuple(args)

    def parse_void_instruction(self):
        op = self.expect("ident")
        if op.text == "store":
            ty = self.parse_type()
            value = self.parse_operand()
            self.expect("punct", ",")
            return Store(ty, value, self.parse_operand())
        if op.text == "br":
            cond = self.parse_operand()
            self.expect("punct", ",")
            then_label = self.expect("ident").text
            self.expect("punct", ",")
            return Br(cond, then_label, self.expect("ident").text)
        if op.text == "jmp":
            return Jmp(self.expect("ident").text)
        if op.text == "ret":
            value = self.parse_operand() if self.at_operand() else None
            return Ret(value)
        if op.text == "call":
            callee, args = self.parse_call_tail()
            return Call(None, callee, args)
        raise self.error(f"unknown instruction {op.text!r}", op)


def parse_module(source_text: str) -> Module:
    """Parse IR text into a Module; raises ParseError with line/column on bad input."""
    return _Parser(tokenize(source_text)).parse_module()


def parse_type(text: str) -> Type:
    """Parse a standalone type string, e.g. "i32" or "{i32, i32}"."""
    p = _Parser(tokenize(text))
    ty = p.parse_type()
    p.skip_newlines()
    if p.peek().kind != "eof":
        raise p.error("trailing input after type")
    return ty
