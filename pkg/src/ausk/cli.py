"""Command line entry point: ``ausk <command> FILE [options]``.

Exit codes: 0 success, 1 a check found violations, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import dsl
from . import geometric as G
from . import morphisms as Mo
from . import semantics as S
from . import sketch as K
from . import strictify as ST
from .elaborate import ElaborationError, corpus_path, elaborate, functor_from_expr
from .serialize import SCHEMA, dumps, hom_to_dict, model_to_dict, sketch_to_dict
from .sweep import gray_sweep

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- formatting


def show_set(o):
    return "{" + ", ".join(dsl.show_value(v) for v in o.elems) + "}"


def show_map(f):
    items = sorted(f.graph.items(), key=lambda kv: S.vkey(kv[0]))
    return "{" + ", ".join(f"{dsl.show_value(a)} -> {dsl.show_value(b)}" for a, b in items) + "}"


def prim_lines(m, indent="  "):
    out = []
    for k, v in m.primitive_assignment().items():
        out.append(f"{indent}{k} = {show_set(v) if isinstance(v, S.SetObj) else show_map(v)}")
    return out


def prim_dict(m):
    return {k: (show_set(v) if isinstance(v, S.SetObj) else show_map(v)) for k, v in m.primitive_assignment().items()}


def hom_lines(h, indent="  "):
    return [f"{indent}{n} : {show_map(c)}" for n, c in sorted(h.comps.items())]


class Report:
    """Collects text lines and a JSON body; prints one or the other."""

    def __init__(self, command, args):
        self.lines = []
        self.data = {"schema": SCHEMA, "command": command}
        for k, default in (("universe", ("a", "b")), ("bound", 2), ("depth", S.DEFAULT_DEPTH)):
            self.data[k] = getattr(args, k, default)
        self.lines.append(f"settings: universe={','.join(self.data['universe'])} "
                          f"bound={self.data['bound']} depth={self.data['depth']}")

    def line(self, s=""):
        self.lines.append(s)

    def emit(self, fmt, out):
        if fmt == "json":
            out.write(dumps(self.data) + "\n")
        else:
            out.write("\n".join(self.lines) + "\n")


# ---------------------------------------------------------------- loading


def load_file(path, depth):
    p = Path(path)
    if not p.exists() and (corpus_path(path)).exists():
        p = corpus_path(path)
    if not p.exists():
        raise UsageError(f"no such file: {path}")
    return elaborate(dsl.parse_dsl(p.read_text()), depth)


def need(table, name, what):
    if name not in table:
        raise UsageError(f"unknown {what} {name!r}; known: {', '.join(sorted(table)) or 'none'}")
    return table[name]


def functor_arg(ws, text):
    try:
        return functor_from_expr(dsl.parse_functor(text), ws.functors)
    except ElaborationError as exc:
        raise UsageError(str(exc)) from None


def models_for(ws, ctx, args):
    """The declared model named by ``--model``, or every enumerated strict model."""
    if getattr(args, "model", None):
        m = need(ws.models, args.model, "model")
        if m.ctx.steps != ctx.steps:
            raise UsageError(f"model {args.model} is not a model of {ctx.name}")
        return [(args.model, m)]
    ms = S.enumerate_strict_models(ctx, args.universe, args.bound, args.depth)
    return [(f"#{i}", m) for i, m in enumerate(ms)]


# ---------------------------------------------------------------- commands


def cmd_check(ws, args, rep):
    bad = 0
    rep.data["contexts"] = {}
    for name, ctx in ws.contexts.items():
        s = ctx.sketch
        problems = K.validate_sketch(s)
        bad += bool(problems)
        base = ws.extensions.get(name)
        rep.line(f"context {name}" + (f" (extends {base})" if base else "")
                 + f": {len(s.nodes)} nodes, {len(s.edges)} edges, {len(ctx.steps)} steps"
                 + ("" if not problems else "  INVALID"))
        for p in problems:
            rep.line(f"  violation: {p}")
        rep.data["contexts"][name] = {"base": base, "nodes": len(s.nodes), "edges": len(s.edges),
                                      "steps": len(ctx.steps), "violations": problems}
    rep.data["maps"] = {}
    for name, H in ws.maps.items():
        if name in ws.extensions:
            continue
        rep.line(f"map {name} : {H.dom.name} -> {H.cod.name} ({len(H.equiv_steps)} equivalence steps)")
        rep.data["maps"][name] = {"dom": H.dom.name, "cod": H.cod.name, "equivalence_steps": len(H.equiv_steps)}
    rep.data["models"] = {}
    for name, m in ws.models.items():
        r = S.check_model(m.ctx, m)
        verdict = "strict" if r.strict else ("valid" if r.valid else "invalid")
        bad += not r.valid
        rep.line(f"model {name} of {m.ctx.name}: {verdict}")
        for p in r.problems:
            rep.line(f"  violation: {p}")
        rep.data["models"][name] = {"context": m.ctx.name, "verdict": verdict, "violations": r.problems}
    rep.data["ok"] = not bad
    rep.line("ok" if not bad else f"{bad} violation(s)")
    return OK if not bad else FAIL


def cmd_models(ws, args, rep):
    ctx = need(ws.contexts, args.ctx, "context")
    ms = S.enumerate_strict_models(ctx, args.universe, args.bound, args.depth)
    rep.line(f"{len(ms)} strict models of {ctx.name}")
    for i, m in enumerate(ms):
        rep.line(f"model #{i}")
        for ln in prim_lines(m):
            rep.line(ln)
    rep.data.update(context=ctx.name, count=len(ms), models=[prim_dict(m) for m in ms])
    return OK


def cmd_arrow(ws, args, rep):
    ctx = need(ws.contexts, args.ctx, "context")
    A = Mo.arrow_context(ctx)
    s = A.ctx.sketch
    rep.line(f"arrow context {A.ctx.name}: {len(s.nodes)} nodes, {len(s.edges)} edges, {len(A.ctx.steps)} steps")
    rep.line("components: " + ", ".join(f"{n} -> {h}" for n, h in sorted(A.components.items())))
    rep.data.update(context=ctx.name, arrow=sketch_to_dict(A.ctx), components=dict(A.components))
    if args.count:
        arrows = S.enumerate_strict_models(A.ctx, args.universe, args.bound, args.depth)
        base = S.enumerate_strict_models(ctx, args.universe, args.bound, args.depth)
        triples = sum(len(S.enumerate_homomorphisms(ctx, M, N)) for M in base for N in base)
        rep.line(f"arrow models: {len(arrows)}; triples (M, N, hom): {triples}")
        rep.data.update(arrow_models=len(arrows), triples=triples)
        if len(arrows) != triples:
            rep.line("MISMATCH")
            return FAIL
    return OK


def cmd_compose(ws, args, rep):
    names = [n.strip() for n in args.maps.split(",") if n.strip()]
    if len(names) < 2:
        raise UsageError("--maps needs at least two map names")
    H = need(ws.maps, names[0], "map")
    for n in names[1:]:
        try:
            H = Mo.compose_maps(H, need(ws.maps, n, "map"))
        except K.KernelError as exc:
            rep.line(f"cannot compose: {exc}")
            rep.data["error"] = str(exc)
            return FAIL
    rep.line(f"composite {H.name} : {H.dom.name} -> {H.cod.name}")
    rep.line(f"  equivalence steps: {len(H.equiv_steps)}")
    for n, v in sorted(H.hom.node_map.items()):
        rep.line(f"  send {n} -> {v}")
    rep.data.update(name=H.name, dom=H.dom.name, cod=H.cod.name, equivalence_steps=len(H.equiv_steps),
                    node_map=dict(H.hom.node_map), edge_map=dict(H.hom.edge_map))
    return OK


def cmd_strictify(ws, args, rep):
    U = need(ws.maps, args.ext, "map")
    if not U.is_extension_map():
        raise ST.NotAnExtensionMap(f"{U.name} is not the reduct map of an extension")
    f = functor_arg(ws, args.functor)
    rep.data["cases"] = []
    for label, N in models_for(ws, U.dom, args):
        m1 = S.apply_functor(f, N)
        m0s, phi0 = ST.reindex_with_iso(f, Mo.reduce_model(N, U))
        m1s, phi1 = ST.strictify(U, m1, m0s, phi0)
        rep.line(f"model {label}: strict model of {U.dom.name} (iso checked)")
        for ln in prim_lines(m1s):
            rep.line(ln)
        rep.data["cases"].append({"model": label, "strict": prim_dict(m1s), "iso": hom_to_dict(phi1)["components"]})
    return OK


def cmd_sigma(ws, args, rep):
    H = need(ws.maps, args.map, "map")
    f = functor_arg(ws, args.functor)
    rep.data["cases"] = []
    for label, M in models_for(ws, H.dom, args):
        cell = ST.sigma(f, H, M)
        ident = cell.is_identity()
        rep.line(f"model {label}: Sigma is {'the identity' if ident else 'a non-identity iso'}")
        if not ident:
            for ln in hom_lines(cell.iso):
                rep.line(ln)
        rep.data["cases"].append({"model": label, "identity": ident,
                                  "components": hom_to_dict(cell.iso)["components"]})
    return OK


def cmd_gray(ws, args, rep):
    if not args.sweep:
        raise UsageError("gray needs --sweep")
    res = gray_sweep(ws, args.samples, args.seed, universe=args.universe, bound=args.bound, depth=args.depth)
    fails = res.failures()
    rep.line(f"configurations: {len(res.configs)}  equations: {res.equations()}  seed: {args.seed}")
    for c, r in fails:
        bad = [ch for ch in r.checks if not ch.passed]
        rep.line(f"FAIL {c.label()}: " + "; ".join(f"{ch.name} {ch.detail}" for ch in bad))
    rep.line("all pass" if not fails else f"{len(fails)} failing configuration(s)")
    rep.data.update(configurations=len(res.configs), equations=res.equations(), seed=args.seed,
                    failures=[c.label() for c, _ in fails])
    return OK if not fails else FAIL


def cmd_compile(ws, args, rep):
    U = need(ws.maps, args.ext, "extension")
    if args.ext not in ws.extensions:
        raise UsageError(f"{args.ext} is not a declared extension")
    g = G.compile_geometric(U)
    for ln in G.describe(g).splitlines():
        rep.line(ln)
    d = G.gext_to_dict(g)
    if args.normalize:
        steps = G.normalize(g)
        rep.line("normal form")
        for st in steps:
            rep.line("  " + G.step_text(st))
        d["normal"] = [G.step_text(st) for st in steps]
    rep.data.update(d)
    rep.data["command"] = "compile"
    return OK


def cmd_points(ws, args, rep):
    U = need(ws.maps, args.ext, "extension")
    if args.ext not in ws.extensions:
        raise UsageError(f"{args.ext} is not a declared extension")
    M = need(ws.models, args.model, "model")
    if M.ctx.steps != U.cod.steps:
        raise UsageError(f"model {args.model} is not a model of {U.cod.name}")
    t = G.instantiate(G.compile_geometric(U), M)
    pts = G.enumerate_points(t, args.bound, args.universe, G.normal_instance(t) if args.normalize else None)
    unknowns = [u for u in t.unknowns]
    rep.line(f"{len(pts)} point(s) of {U.dom.name} over {args.model}")
    rows = []
    for i, p in enumerate(pts):
        row = {u: (show_set(p.nodes[u]) if u in p.nodes else show_map(p.edges[u])) for u in unknowns}
        rep.line(f"point #{i}: " + "  ".join(f"{k} = {v}" for k, v in row.items()))
        rows.append(row)
    rep.data.update(extension=args.ext, model=args.model, count=len(pts), points=rows)
    return OK


def cmd_export(ws, args, rep):
    rep.data["contexts"] = {n: sketch_to_dict(c) for n, c in ws.contexts.items()}
    rep.data["maps"] = {n: {"dom": H.dom.name, "cod": H.cod.name, "node_map": dict(H.hom.node_map),
                            "edge_map": dict(H.hom.edge_map), "equivalence_steps": len(H.equiv_steps)}
                        for n, H in ws.maps.items()}
    rep.data["models"] = {n: model_to_dict(m) for n, m in ws.models.items()}
    rep.data["functors"] = sorted(ws.functors)
    rep.line(f"{len(ws.contexts)} contexts, {len(ws.maps)} maps, {len(ws.models)} models")
    return OK


COMMANDS = {
    "check": cmd_check, "models": cmd_models, "arrow": cmd_arrow, "compose": cmd_compose,
    "strictify": cmd_strictify, "sigma": cmd_sigma, "gray": cmd_gray, "compile": cmd_compile,
    "points": cmd_points, "export": cmd_export,
}


def universe_arg(text):
    names = tuple(x.strip() for x in text.split(",") if x.strip())
    if not names:
        raise argparse.ArgumentTypeError("universe must name at least one atom")
    return names


def build_parser():
    p = argparse.ArgumentParser(prog="ausk", description="Sketches, strict models and geometric compilation.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, bounded=True):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("file")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        if bounded:
            sp.add_argument("--universe", type=universe_arg, default=("a", "b"))
            sp.add_argument("--bound", type=int, default=2)
            sp.add_argument("--depth", type=int, default=S.DEFAULT_DEPTH)
        return sp

    add("check", "elaborate and validate a file", bounded=False)
    add("models", "enumerate strict models").add_argument("--ctx", required=True)
    sp = add("arrow", "build the arrow context")
    sp.add_argument("--ctx", required=True)
    sp.add_argument("--count", action="store_true", help="compare arrow models with (M, N, hom) triples")
    add("compose", "compose context maps", bounded=False).add_argument("--maps", required=True)
    sp = add("strictify", "strictify tagged models of an extension")
    sp.add_argument("--ext", required=True)
    sp.add_argument("--functor", default="tag:t")
    sp.add_argument("--model")
    sp = add("sigma", "the comparison iso for a functor and a map")
    sp.add_argument("--map", required=True)
    sp.add_argument("--functor", default="tag:t")
    sp.add_argument("--model")
    sp = add("gray", "sweep the cubical conditions")
    sp.add_argument("--sweep", action="store_true")
    sp.add_argument("--samples", type=int, default=120)
    sp.add_argument("--seed", type=int, default=0)
    sp = add("compile", "compile an extension to geometric steps", bounded=False)
    sp.add_argument("--ext", required=True)
    sp.add_argument("--normalize", action="store_true")
    sp = add("points", "points of an extension over a base model")
    sp.add_argument("--ext", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--normalize", action="store_true")
    add("export", "export a file as JSON", bounded=False)
    return p


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    depth = getattr(args, "depth", S.DEFAULT_DEPTH)
    rep = Report(args.command, args)
    try:
        ws = load_file(args.file, depth)
    except dsl.DSLSyntaxError as exc:
        out.write(f"{args.file}:{exc}\n")
        return USAGE
    except UsageError as exc:
        out.write(f"error: {exc}\n")
        return USAGE
    except K.KernelError as exc:
        rep.line("violations:")
        rep.line(f"  {args.file}:{exc}")
        rep.data.update(ok=False, violations=[str(exc)])
        rep.emit(args.format, out)
        return FAIL
    try:
        code = COMMANDS[args.command](ws, args, rep)
    except UsageError as exc:
        out.write(f"error: {exc}\n")
        return USAGE
    except (K.KernelError, S.SemanticsError, ST.NotAnExtensionMap, ST.IsoMismatch,
            Mo.UnsupportedComponent, G.UnsupportedStep, G.NonFiniteConstruct) as exc:
        rep.line(f"violation: {type(exc).__name__}: {exc}")
        rep.data.update(ok=False, violations=[f"{type(exc).__name__}: {exc}"])
        code = FAIL
    rep.emit(args.format, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
