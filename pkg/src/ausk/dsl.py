"""Surface syntax for contexts, extensions, maps, models and functors.

A file is a sequence of declarations::

    context OB { node X; }
    extension GRD_PT of GRD { node F; edge m : F -> G; ... }
    map Delta : OB -> OB2 { send X0 -> X; send X1 -> X; }
    model M1 of GRD { G = {g}; R = {r}; D = {}; lambda = {r -> fin(g)}; }
    functor T = tag(t);

The printer emits text that parses back to the same declarations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .values import UNIT, atom, cls, inl, inr, kuratowski, lst, pair, render, tag, vkey


class DSLSyntaxError(Exception):
    def __init__(self, message, pos):
        super().__init__(f"{pos[0]}:{pos[1]}: syntax error: {message}")
        self.message = message
        self.pos = pos


# ---------------------------------------------------------------- declarations


@dataclass(frozen=True)
class Item:
    """One line inside a context body; ``args`` depend on ``kind``.

    node (name,)              fin (name, base)
    edge (name, src, tgt)     finmap (name, edge)
    terminal (name,)          initial (name,)
    pullback (apex, f, g, p1, p2)    pushout (apex, f, g, i1, i2)
    list (apex, A, nil, cons, extra) where extra is () or (T, bang_a, bang, P, pa, pl)
    commute (f, g, h)         compose (h, f, g, rule)      deduce (f, g, h, rule)
    fillin (name, form, apex, data)   data: tuple of (role, item)
    unique (e1, e2)           inverse (name, edge)
    """

    kind: str
    args: tuple
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ContextDecl:
    name: str
    base: str | None
    items: tuple
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class MapDecl:
    name: str
    dom: str
    cod: str
    equiv: tuple
    sends: tuple
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ModelDecl:
    name: str
    ctx: str
    assigns: tuple   # (item, ("set", values) | ("fun", pairs))
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class FunctorDecl:
    name: str
    expr: tuple      # ("identity",) | ("tag", label) | ("compose", (expr, ...)) | ("ref", name)
    pos: tuple = field(default=(0, 0), compare=False)


# ---------------------------------------------------------------- lexer

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>(?:\#|//)[^\n]*)
  | (?P<arrow>->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.'!?]*)
  | (?P<punct>[{}()\[\];,:=])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    pos: tuple


def tokenize(text):
    out = []
    i, line, col = 0, 1, 1
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[i]!r}", (line, col))
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind not in ("ws", "comment"):
                out.append(Token(kind, tok, (line, col)))
            col += len(tok)
        i = m.end()
    out.append(Token("eof", "", (line, col)))
    return out


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def at(self, text):
        return self.tok.text == text and self.tok.kind != "eof"

    def advance(self):
        t = self.tok
        self.i += 1
        return t

    def expect(self, text):
        if not self.at(text):
            got = self.tok.text or "end of input"
            raise DSLSyntaxError(f"expected {text!r}, got {got!r}", self.tok.pos)
        return self.advance()

    def ident(self):
        t = self.tok
        if t.kind != "ident":
            got = t.text or "end of input"
            raise DSLSyntaxError(f"expected a name, got {got!r}", t.pos)
        self.i += 1
        return t.text

    def ref(self):
        """An item reference: a name or ``id(X)``."""
        name = self.ident()
        if name == "id" and self.at("("):
            self.advance()
            inner = self.ident()
            self.expect(")")
            return f"id({inner})"
        return name

    # declarations
    def file(self):
        decls = []
        while self.tok.kind != "eof":
            decls.append(self.decl())
        return decls

    def decl(self):
        pos = self.tok.pos
        kw = self.ident()
        if kw == "context":
            name = self.ident()
            return ContextDecl(name, None, self.body(), pos)
        if kw == "extension":
            name = self.ident()
            self.expect("of")
            base = self.ident()
            return ContextDecl(name, base, self.body(), pos)
        if kw == "map":
            return self.map_decl(pos)
        if kw == "model":
            return self.model_decl(pos)
        if kw == "functor":
            name = self.ident()
            self.expect("=")
            expr = self.functor_expr()
            self.expect(";")
            return FunctorDecl(name, expr, pos)
        raise DSLSyntaxError(f"unknown declaration {kw!r}", pos)

    def body(self):
        self.expect("{")
        items = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise DSLSyntaxError("unterminated block", self.tok.pos)
            items.append(self.item())
        self.expect("}")
        return tuple(items)

    def item(self):
        pos = self.tok.pos
        kw = self.ident()
        if kw == "node":
            name = self.ident()
            if self.at("="):
                self.advance()
                self.expect("fin")
                self.expect("(")
                base = self.ident()
                self.expect(")")
                out = Item("fin", (name, base), pos)
            else:
                out = Item("node", (name,), pos)
        elif kw == "edge":
            name = self.ident()
            if self.at("="):
                self.advance()
                self.expect("finmap")
                self.expect("(")
                e = self.ref()
                self.expect(")")
                out = Item("finmap", (name, e), pos)
            else:
                self.expect(":")
                a = self.ident()
                self.expect("->")
                b = self.ident()
                out = Item("edge", (name, a, b), pos)
        elif kw in ("terminal", "initial"):
            out = Item(kw, (self.ident(),), pos)
        elif kw in ("pullback", "pushout"):
            apex = self.ident()
            self.expect("=")
            self.expect("pb" if kw == "pullback" else "po")
            self.expect("(")
            f = self.ref()
            self.expect(",")
            g = self.ref()
            self.expect(")")
            self.expect("with")
            x = self.ident()
            self.expect(",")
            y = self.ident()
            out = Item(kw, (apex, f, g, x, y), pos)
        elif kw == "list":
            apex = self.ident()
            self.expect("=")
            self.expect("list")
            self.expect("(")
            A = self.ident()
            head = ()
            if self.at(","):
                self.advance()
                T = self.ident()
                self.expect(",")
                head = (T, self.ref())
            self.expect(")")
            self.expect("with")
            nil = self.ident()
            self.expect(",")
            cons = self.ident()
            extra = ()
            if head:
                names = []
                for _ in range(4):
                    self.expect(",")
                    names.append(self.ident())
                extra = head + tuple(names)
            out = Item("list", (apex, A, nil, cons, extra), pos)
        elif kw == "commute":
            f, g, h = self.triangle()
            out = Item("commute", (f, g, h), pos)
        elif kw == "compose":
            h = self.ident()
            self.expect("=")
            f = self.ref()
            self.expect(";")
            g = self.ref()
            rule = "composite"
            if self.at("by"):
                self.advance()
                rule = self.ident()
            out = Item("compose", (h, f, g, rule), pos)
        elif kw == "deduce":
            f, g, h = self.triangle()
            self.expect("by")
            out = Item("deduce", (f, g, h, self.ident()), pos)
        elif kw == "fillin":
            out = self.fillin(pos)
        elif kw == "unique":
            e1 = self.ref()
            self.expect("=")
            out = Item("unique", (e1, self.ref()), pos)
        elif kw == "inverse":
            name = self.ident()
            self.expect("=")
            self.expect("inv")
            self.expect("(")
            e = self.ref()
            self.expect(")")
            out = Item("inverse", (name, e), pos)
        else:
            raise DSLSyntaxError(f"unknown item {kw!r}", pos)
        self.expect(";")
        return out

    def triangle(self):
        f = self.ref()
        self.expect(";")
        g = self.ref()
        self.expect("=")
        return f, g, self.ref()

    def fillin(self, pos):
        name = self.ident()
        self.expect("=")
        form_pos = self.tok.pos
        form = self.ident()
        self.expect("(")
        if form in ("bang", "absurd"):
            a = self.ident()
            self.expect("->")
            b = self.ident()
            if form == "bang":
                apex, data = b, (("src", a),)
            else:
                apex, data = a, (("tgt", b),)
        elif form in ("pair", "copair"):
            apex = self.ident()
            self.expect(";")
            x = self.ref()
            self.expect(",")
            data = (("x", x), ("y", self.ref()))
        elif form == "rec":
            apex = self.ident()
            self.expect(";")
            B = self.ident()
            self.expect(",")
            base = self.ref()
            self.expect(",")
            data = (("B", B), ("base", base), ("step", self.ref()))
            if self.at(";"):
                self.advance()
                Q = self.ident()
                self.expect(",")
                data += (("Q", Q), ("W", self.ident()))
        else:
            raise DSLSyntaxError(f"unknown fillin form {form!r}", form_pos)
        self.expect(")")
        return Item("fillin", (name, form, apex, data), pos)

    def map_decl(self, pos):
        name = self.ident()
        self.expect(":")
        dom = self.ident()
        self.expect("->")
        cod = self.ident()
        self.expect("{")
        equiv, sends = (), []
        if self.at("equiv"):
            self.advance()
            equiv = self.body()
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise DSLSyntaxError("unterminated map", self.tok.pos)
            self.expect("send")
            a = self.ref()
            self.expect("->")
            b = self.ref()
            self.expect(";")
            sends.append((a, b))
        self.expect("}")
        return MapDecl(name, dom, cod, equiv, tuple(sends), pos)

    def model_decl(self, pos):
        name = self.ident()
        self.expect("of")
        ctx = self.ident()
        self.expect("{")
        assigns = []
        while not self.at("}"):
            item = self.ident()
            self.expect("=")
            assigns.append((item, self.extension_value()))
            self.expect(";")
        self.expect("}")
        return ModelDecl(name, ctx, tuple(assigns), pos)

    def extension_value(self):
        """``{v, ...}`` for a set or ``{v -> w, ...}`` for a function."""
        self.expect("{")
        if self.at("}"):
            self.advance()
            return ("set", ())
        first = self.value()
        if self.at("->"):
            self.advance()
            pairs = [(first, self.value())]
            while self.at(","):
                self.advance()
                a = self.value()
                self.expect("->")
                pairs.append((a, self.value()))
            self.expect("}")
            return ("fun", tuple(pairs))
        vals = [first]
        while self.at(","):
            self.advance()
            vals.append(self.value())
        self.expect("}")
        return ("set", tuple(vals))

    def value(self):
        t = self.tok
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return UNIT
            a = self.value()
            self.expect(",")
            b = self.value()
            self.expect(")")
            return pair(a, b)
        if self.at("["):
            self.advance()
            items = []
            if not self.at("]"):
                items.append(self.value())
                while self.at(","):
                    self.advance()
                    items.append(self.value())
            self.expect("]")
            return lst(*items)
        name = self.ident()
        if not self.at("("):
            return atom(name)
        self.advance()
        if name in ("inl", "inr", "cls"):
            v = self.value()
            self.expect(")")
            return {"inl": inl, "inr": inr, "cls": cls}[name](v)
        if name == "tag":
            label = self.ident()
            self.expect(",")
            v = self.value()
            self.expect(")")
            return tag(label, v)
        if name == "fin":
            vals = []
            if not self.at(")"):
                vals.append(self.value())
                while self.at(","):
                    self.advance()
                    vals.append(self.value())
            self.expect(")")
            return kuratowski(vals)
        raise DSLSyntaxError(f"unknown value former {name!r}", t.pos)

    def functor_expr(self):
        pos = self.tok.pos
        name = self.ident()
        if name == "identity":
            return ("identity",)
        if name == "tag" and self.at("("):
            self.advance()
            label = self.ident()
            self.expect(")")
            return ("tag", label)
        if name == "compose" and self.at("("):
            self.advance()
            parts = [self.functor_expr()]
            while self.at(","):
                self.advance()
                parts.append(self.functor_expr())
            self.expect(")")
            return ("compose", tuple(parts))
        if self.at("("):
            raise DSLSyntaxError(f"unknown functor former {name!r}", pos)
        return ("ref", name)


def parse_dsl(text):
    """Parse a source text into a list of declarations."""
    return _Parser(text).file()


def parse_value(text):
    p = _Parser(text)
    v = p.value()
    if p.tok.kind != "eof":
        raise DSLSyntaxError("trailing input", p.tok.pos)
    return v


def parse_functor(text):
    """Functor expressions as used on the command line: ``tag:t``, ``identity``, ``tag:s,tag:t``."""
    parts = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if chunk in ("identity", "id"):
            parts.append(("identity",))
        elif chunk.startswith("tag:") and len(chunk) > 4:
            parts.append(("tag", chunk[4:]))
        else:
            p = _Parser(chunk)
            expr = p.functor_expr()
            if p.tok.kind != "eof":
                raise DSLSyntaxError("trailing input in functor", p.tok.pos)
            parts.append(expr)
    return parts[0] if len(parts) == 1 else ("compose", tuple(parts))


# ---------------------------------------------------------------- printer


def print_item(it):
    k, a = it.kind, it.args
    if k == "node":
        return f"node {a[0]};"
    if k == "fin":
        return f"node {a[0]} = fin({a[1]});"
    if k == "edge":
        return f"edge {a[0]} : {a[1]} -> {a[2]};"
    if k == "finmap":
        return f"edge {a[0]} = finmap({a[1]});"
    if k in ("terminal", "initial"):
        return f"{k} {a[0]};"
    if k == "pullback":
        return f"pullback {a[0]} = pb({a[1]}, {a[2]}) with {a[3]}, {a[4]};"
    if k == "pushout":
        return f"pushout {a[0]} = po({a[1]}, {a[2]}) with {a[3]}, {a[4]};"
    if k == "list":
        apex, A, nil, cons, extra = a
        if extra:
            T, bang_a, bang, P, pa, pl = extra
            return f"list {apex} = list({A}, {T}, {bang_a}) with {nil}, {cons}, {bang}, {P}, {pa}, {pl};"
        return f"list {apex} = list({A}) with {nil}, {cons};"
    if k == "commute":
        return f"commute {a[0]} ; {a[1]} = {a[2]};"
    if k == "compose":
        tail = "" if a[3] == "composite" else f" by {a[3]}"
        return f"compose {a[0]} = {a[1]} ; {a[2]}{tail};"
    if k == "deduce":
        return f"deduce {a[0]} ; {a[1]} = {a[2]} by {a[3]};"
    if k == "unique":
        return f"unique {a[0]} = {a[1]};"
    if k == "inverse":
        return f"inverse {a[0]} = inv({a[1]});"
    name, form, apex, data = a
    d = dict(data)
    if form == "bang":
        body = f"{d['src']} -> {apex}"
    elif form == "absurd":
        body = f"{apex} -> {d['tgt']}"
    elif form in ("pair", "copair"):
        body = f"{apex}; {d['x']}, {d['y']}"
    else:
        body = f"{apex}; {d['B']}, {d['base']}, {d['step']}"
        if "Q" in d:
            body += f"; {d['Q']}, {d['W']}"
    return f"fillin {name} = {form}({body});"


def _print_value(v):
    if v[0] == "cls" and v[1][0] == "inl" and v[1][1][0] == "list":
        items = v[1][1][1]
        if list(items) == sorted(set(items), key=vkey) and kuratowski(items) == v:
            return "fin(" + ", ".join(_print_value(x) for x in items) + ")"
    kind = v[0]
    if kind == "pair":
        return f"({_print_value(v[1])}, {_print_value(v[2])})"
    if kind in ("inl", "inr", "cls"):
        return f"{kind}({_print_value(v[1])})"
    if kind == "list":
        return "[" + ", ".join(_print_value(x) for x in v[1]) + "]"
    if kind == "tag":
        return f"tag({v[1]}, {_print_value(v[2])})"
    return render(v)


def print_functor(expr):
    if expr[0] == "identity":
        return "identity"
    if expr[0] == "tag":
        return f"tag({expr[1]})"
    if expr[0] == "ref":
        return expr[1]
    return "compose(" + ", ".join(print_functor(e) for e in expr[1]) + ")"


def _block(items, indent="    "):
    return "".join(f"{indent}{print_item(it)}\n" for it in items)


def print_decl(d):
    if isinstance(d, ContextDecl):
        head = f"context {d.name}" if d.base is None else f"extension {d.name} of {d.base}"
        if not d.items:
            return head + " { }\n"
        return head + " {\n" + _block(d.items) + "}\n"
    if isinstance(d, MapDecl):
        out = f"map {d.name} : {d.dom} -> {d.cod} {{\n"
        if d.equiv:
            out += "    equiv {\n" + _block(d.equiv, "        ") + "    }\n"
        for a, b in d.sends:
            out += f"    send {a} -> {b};\n"
        return out + "}\n"
    if isinstance(d, ModelDecl):
        out = f"model {d.name} of {d.ctx} {{\n"
        for item, (kind, body) in d.assigns:
            if kind == "set":
                text = ", ".join(_print_value(v) for v in body)
            else:
                text = ", ".join(f"{_print_value(x)} -> {_print_value(y)}" for x, y in body)
            out += f"    {item} = {{{text}}};\n"
        return out + "}\n"
    return f"functor {d.name} = {print_functor(d.expr)};\n"


def print_dsl(decls):
    return "\n".join(print_decl(d) for d in decls)


show_value = _print_value
