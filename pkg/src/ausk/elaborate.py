"""Fold parsed declarations into kernel contexts, maps, models and functors."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import dsl
from . import semantics as S
from . import sketch as K
from .macros import expand_fin, expand_finmap
from .morphisms import extension_map, make_map


class ElaborationError(K.KernelError):
    pass


@dataclass
class Workspace:
    """Everything a source file declares; names are file scoped."""

    contexts: dict = field(default_factory=dict)
    extensions: dict = field(default_factory=dict)     # extension name -> base name
    maps: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    functors: dict = field(default_factory=dict)
    decls: list = field(default_factory=list)

    def context(self, name):
        try:
            return self.contexts[name]
        except KeyError:
            raise ElaborationError(f"unknown context {name}") from None

    def extension(self, name):
        """The reduct map of a declared extension."""
        if name not in self.extensions:
            raise ElaborationError(f"{name} is not a declared extension")
        return self.maps[name]

    def functor(self, expr):
        return functor_from_expr(expr, self.functors)


def _list_steps(ctx, it):
    apex, A, nil, cons, extra = it.args
    s = ctx.sketch
    if extra:
        T, bang_a, bang, P, pa, pl = extra
        return ctx, K.list_universal(apex, A, T, bang_a, bang, P, pa, pl, nil, cons)
    ts = s.terminal_apexes()
    if not ts:
        raise ElaborationError(f"list {apex} needs a terminal declared first", it.pos)
    T = ts[0]
    bang_a = None
    if A == T:
        bang_a = K.identity_name(T)
    for e, rec in s.fillins.items():
        if bang_a is None and rec.form == "bang" and rec.apex == T and rec.get("src") == A:
            bang_a = e
    if bang_a is None:
        bang_a = f"{apex}.!{A}"
        ctx = K.extend_equiv(ctx, K.DeclareFillin(bang_a, T, "bang", (("src", A),)), it.pos)
    u = K.list_universal(apex, A, T, bang_a, f"{apex}.bang", f"{apex}.P", f"{apex}.pa", f"{apex}.pl", nil, cons)
    return ctx, u


def item_step(ctx, it):
    """Apply one declaration item to ``ctx``."""
    k, a, pos = it.kind, it.args, it.pos
    if k == "node":
        return K.extend(ctx, K.AddPrimitiveNode(a[0]), pos)
    if k == "fin":
        return expand_fin(ctx, a[0], a[1], pos)
    if k == "edge":
        return K.extend(ctx, K.AddPrimitiveEdge(*a), pos)
    if k == "finmap":
        return expand_finmap(ctx, a[0], a[1], pos)
    if k == "terminal":
        return K.extend(ctx, K.AddUniversal(K.terminal(a[0])), pos)
    if k == "initial":
        return K.extend(ctx, K.AddUniversal(K.initial(a[0])), pos)
    if k == "pullback":
        return K.extend(ctx, K.AddUniversal(K.pullback(*a)), pos)
    if k == "pushout":
        return K.extend(ctx, K.AddUniversal(K.pushout(*a)), pos)
    if k == "list":
        ctx, u = _list_steps(ctx, it)
        return K.extend(ctx, K.AddUniversal(u), pos)
    if k == "commute":
        return K.extend(ctx, K.AddCommutativity(*a), pos)
    if k == "compose":
        h, f, g, rule = a
        return K.extend_equiv(ctx, K.AdjoinComposite(f, g, h, rule), pos)
    if k == "deduce":
        return K.extend_equiv(ctx, K.DeduceCommutativity(*a), pos)
    if k == "fillin":
        name, form, apex, data = a
        return K.extend_equiv(ctx, K.DeclareFillin(name, apex, form, data), pos)
    if k == "unique":
        return K.extend_equiv(ctx, K.FillinUniqueness(*a), pos)
    if k == "inverse":
        return K.extend_equiv(ctx, K.AdjoinInverse(*a), pos)
    raise ElaborationError(f"unknown item kind {k}", pos)


def elaborate_context(name, items, base=None):
    ctx = K.Context.empty(name) if base is None else base.renamed(name)
    for it in items:
        ctx = item_step(ctx, it)
    return ctx


def functor_from_expr(expr, env=None):
    kind = expr[0]
    if kind == "identity":
        return S.Identity()
    if kind == "tag":
        return S.Tagging(expr[1])
    if kind == "ref":
        if env is None or expr[1] not in env:
            raise ElaborationError(f"unknown functor {expr[1]}")
        return env[expr[1]]
    return S.Composite(tuple(functor_from_expr(e, env) for e in expr[1]))


def model_from_decl(d, ctx, depth=S.DEFAULT_DEPTH):
    pn, pe = K.primitive_items(ctx)
    prims = {}
    for item, (kind, body) in d.assigns:
        if item in pn:
            if kind != "set":
                raise ElaborationError(f"model {d.name}: node {item} needs a set", d.pos)
            prims[item] = S.SetObj(body)
        elif item in pe:
            if kind == "set" and body:
                raise ElaborationError(f"model {d.name}: edge {item} needs a function", d.pos)
            prims[item] = dict(body) if kind == "fun" else {}
        else:
            raise ElaborationError(f"model {d.name}: {item} is not a primitive item of {ctx.name}", d.pos)
    return S.eval_strict_model(ctx, prims, depth)


def elaborate(decls, depth=S.DEFAULT_DEPTH):
    ws = Workspace(decls=list(decls))
    for d in decls:
        if isinstance(d, dsl.ContextDecl):
            if d.name in ws.contexts:
                raise K.FreshnessViolation(f"context {d.name} declared twice", d.pos)
            base = None
            if d.base is not None:
                base = ws.context(d.base)
            ctx = elaborate_context(d.name, d.items, base)
            ws.contexts[d.name] = ctx
            if base is not None:
                ws.extensions[d.name] = d.base
                ws.maps[d.name] = extension_map(ctx, base, d.name)
        elif isinstance(d, dsl.MapDecl):
            dom, cod = ws.context(d.dom), ws.context(d.cod)
            steps, positions = [], []
            ctx = dom
            for it in d.equiv:
                before = len(ctx.steps)
                ctx = item_step(ctx, it)
                steps.extend(ctx.steps[before:])
                positions.extend([it.pos] * (len(ctx.steps) - before))
            node_map, edge_map = {}, {}
            for a, b in d.sends:
                (node_map if a in cod.sketch.nodes else edge_map)[a] = b
            if d.name in ws.maps:
                raise K.FreshnessViolation(f"map {d.name} declared twice", d.pos)
            ws.maps[d.name] = make_map(d.name, dom, cod, steps, node_map, edge_map, positions)
        elif isinstance(d, dsl.ModelDecl):
            ws.models[d.name] = model_from_decl(d, ws.context(d.ctx), depth)
        elif isinstance(d, dsl.FunctorDecl):
            ws.functors[d.name] = functor_from_expr(d.expr, ws.functors)
    return ws


def load(path, depth=S.DEFAULT_DEPTH):
    return elaborate(dsl.parse_dsl(Path(path).read_text()), depth)


def load_text(text, depth=S.DEFAULT_DEPTH):
    return elaborate(dsl.parse_dsl(text), depth)


CORPUS = Path(__file__).parent / "corpus"


def corpus_path(name):
    return CORPUS / name
