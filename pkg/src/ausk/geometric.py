"""Context extensions as geometric extensions, and their points over a finite base.

A context extension ``T0 <= T1`` compiles to simple steps: a primitive sort
per primitive node, a functional extension per primitive edge and a
quotient (an inclusion to be inverted) per commutativity.  Universals and
equivalence steps contribute no steps; they only name constructs that later
steps refer to.  Instantiating at a finite base model grounds every
construct over the base, and the points of the result are found by search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from . import sketch as K
from .semantics import SetMorph, SetObj, eval_strict_model
from .values import UNIT, cls, inl, inr, kuratowski, pair, vkey


class UnsupportedStep(Exception):
    pass


class UnmappedConstruct(Exception):
    pass


class NonFiniteConstruct(Exception):
    pass


# ---------------------------------------------------------------- constructs
# Object constructs


@dataclass(frozen=True)
class Sort:
    name: str


@dataclass(frozen=True)
class Const:
    value: SetObj = field(compare=False)
    label: str = ""

    def __eq__(self, other):
        return isinstance(other, Const) and self.value == other.value

    def __hash__(self):
        return hash(self.value)


@dataclass(frozen=True)
class Terminal:
    pass


@dataclass(frozen=True)
class Initial:
    pass


@dataclass(frozen=True)
class Fin:
    of: object


@dataclass(frozen=True)
class ListOf:
    of: object


@dataclass(frozen=True)
class Pullback:
    f: object
    g: object


@dataclass(frozen=True)
class Pushout:
    f: object
    g: object


@dataclass(frozen=True)
class Equalizer:
    f: object
    g: object


@dataclass(frozen=True)
class Opaque:
    """Scaffolding no step refers to; evaluating it is an error."""

    name: str


# Morphism constructs


@dataclass(frozen=True)
class Fn:
    name: str
    dom: object
    cod: object


@dataclass(frozen=True)
class ConstMap:
    value: SetMorph = field(compare=False)
    label: str = ""

    def __eq__(self, other):
        return isinstance(other, ConstMap) and self.value == other.value

    def __hash__(self):
        return hash(self.value)


@dataclass(frozen=True)
class Id:
    obj: object


@dataclass(frozen=True)
class Compose:
    f: object
    g: object


@dataclass(frozen=True)
class FinMap:
    f: object


@dataclass(frozen=True)
class Proj:
    of: object          # a Pullback
    index: int


@dataclass(frozen=True)
class Inj:
    of: object          # a Pushout
    index: int


@dataclass(frozen=True)
class PairMap:
    of: object          # a Pullback
    f: object
    g: object


@dataclass(frozen=True)
class Copair:
    of: object          # a Pushout
    f: object
    g: object


@dataclass(frozen=True)
class Bang:
    src: object


@dataclass(frozen=True)
class Absurd:
    tgt: object


@dataclass(frozen=True)
class Inverse:
    f: object


@dataclass(frozen=True)
class Incl:
    of: object          # an Equalizer


def children(c):
    if isinstance(c, (Const, ConstMap, Sort, Terminal, Initial, Opaque)):
        return ()
    return tuple(getattr(c, f) for f in c.__dataclass_fields__ if f not in ("index", "name", "label"))


def substitute(c, sub):
    """Replace sorts and function symbols by constructs, bottom up."""
    if isinstance(c, Sort):
        return sub(c)
    if isinstance(c, Fn):
        return sub(c)
    if isinstance(c, (Const, ConstMap, Terminal, Initial, Opaque)):
        return c
    kw = {f: substitute(getattr(c, f), sub) for f in c.__dataclass_fields__
          if f not in ("index", "name", "label")}
    return replace(c, **kw)


def free_symbols(c, out=None):
    out = set() if out is None else out
    if isinstance(c, Sort):
        out.add(c.name)
    elif isinstance(c, Fn):
        out.add(c.name)
        free_symbols(c.dom, out)
        free_symbols(c.cod, out)
    else:
        for ch in children(c):
            free_symbols(ch, out)
    return out


def show(c):
    """Compact text form of a construct."""
    if isinstance(c, Sort):
        return c.name
    if isinstance(c, Fn):
        return c.name
    if isinstance(c, Const):
        return c.label or f"{{{len(c.value)} elements}}"
    if isinstance(c, ConstMap):
        return c.label or "<map>"
    if isinstance(c, Terminal):
        return "1"
    if isinstance(c, Initial):
        return "0"
    if isinstance(c, Opaque):
        return f"<{c.name}>"
    if isinstance(c, Compose):
        return f"({show(c.f)} ; {show(c.g)})"
    if isinstance(c, (Proj, Inj)):
        return f"{type(c).__name__.lower()}{c.index}[{show(c.of)}]"
    name = type(c).__name__
    return f"{name}(" + ", ".join(show(x) for x in children(c)) + ")"


# ---------------------------------------------------------------- evaluation


class Evaluator:
    """Evaluate constructs over concrete sets for sorts and maps for symbols."""

    def __init__(self, sorts, fns):
        self.sorts = sorts
        self.fns = fns
        self.cache = {}

    def obj(self, c):
        key = ("o", c)
        if key not in self.cache:
            self.cache[key] = self._obj(c)
        return self.cache[key]

    def mor(self, c):
        key = ("m", c)
        if key not in self.cache:
            self.cache[key] = self._mor(c)
        return self.cache[key]

    def _obj(self, c):
        if isinstance(c, Sort):
            if c.name not in self.sorts:
                raise UnmappedConstruct(f"sort {c.name} has no value")
            return self.sorts[c.name]
        if isinstance(c, Const):
            return c.value
        if isinstance(c, Terminal):
            return SetObj((UNIT,))
        if isinstance(c, Initial):
            return SetObj(())
        if isinstance(c, Fin):
            A = self.obj(c.of)
            subsets = itertools.chain.from_iterable(itertools.combinations(A.elems, k) for k in range(len(A) + 1))
            return SetObj(kuratowski(s) for s in subsets)
        if isinstance(c, Pullback):
            f, g = self.mor(c.f), self.mor(c.g)
            return SetObj(pair(a, b) for a in f.dom for b in g.dom if f(a) == g(b))
        if isinstance(c, Equalizer):
            f, g = self.mor(c.f), self.mor(c.g)
            return SetObj(a for a in f.dom if f(a) == g(a))
        if isinstance(c, Pushout):
            return self._pushout(c)[0]
        if isinstance(c, ListOf):
            raise NonFiniteConstruct(f"list object {show(c)} is infinite")
        if isinstance(c, Opaque):
            raise NonFiniteConstruct(f"scaffolding {c.name} cannot be instantiated")
        raise TypeError(f"not an object construct: {c!r}")

    def _pushout(self, c):
        """Connected components of the glued disjoint union, named by least member."""
        f, g = self.mor(c.f), self.mor(c.g)
        adj = {}
        for a in f.cod:
            adj.setdefault(inl(a), set())
        for b in g.cod:
            adj.setdefault(inr(b), set())
        for x in f.dom:
            u, v = inl(f(x)), inr(g(x))
            adj[u].add(v)
            adj[v].add(u)
        name = {}
        for start in adj:
            if start in name:
                continue
            comp, todo = {start}, [start]
            while todo:
                for y in adj[todo.pop()]:
                    if y not in comp:
                        comp.add(y)
                        todo.append(y)
            rep = cls(min(comp, key=vkey))
            for y in comp:
                name[y] = rep
        return SetObj(set(name.values())), name

    def _mor(self, c):
        if isinstance(c, Fn):
            if c.name not in self.fns:
                raise UnmappedConstruct(f"function {c.name} has no value")
            return self.fns[c.name]
        if isinstance(c, ConstMap):
            return c.value
        if isinstance(c, Id):
            A = self.obj(c.obj)
            return SetMorph(A, A, {a: a for a in A})
        if isinstance(c, Compose):
            f, g = self.mor(c.f), self.mor(c.g)
            return SetMorph(f.dom, g.cod, {a: g(f(a)) for a in f.dom})
        if isinstance(c, FinMap):
            f = self.mor(c.f)
            A, B = self.obj(Fin(Const(f.dom))), self.obj(Fin(Const(f.cod)))
            return SetMorph(A, B, {s: kuratowski(f(x) for x in s[1][1][1]) for s in A})
        if isinstance(c, Proj):
            P = self.obj(c.of)
            dom = self.mor(c.of.f if c.index == 1 else c.of.g).dom
            return SetMorph(P, dom, {z: z[c.index] for z in P})
        if isinstance(c, Inj):
            apex, name = self._pushout(c.of)
            leg = self.mor(c.of.f if c.index == 1 else c.of.g)
            wrap = inl if c.index == 1 else inr
            return SetMorph(leg.cod, apex, {a: name[wrap(a)] for a in leg.cod})
        if isinstance(c, PairMap):
            P = self.obj(c.of)
            f, g = self.mor(c.f), self.mor(c.g)
            return SetMorph(f.dom, P, {a: pair(f(a), g(a)) for a in f.dom})
        if isinstance(c, Copair):
            apex, name = self._pushout(c.of)
            f, g = self.mor(c.f), self.mor(c.g)
            out = {}
            for a in f.dom:
                out.setdefault(name[inl(a)], f(a))
            for b in g.dom:
                out.setdefault(name[inr(b)], g(b))
            return SetMorph(apex, f.cod, out)
        if isinstance(c, Bang):
            A = self.obj(c.src)
            return SetMorph(A, SetObj((UNIT,)), {a: UNIT for a in A})
        if isinstance(c, Absurd):
            return SetMorph(SetObj(()), self.obj(c.tgt), {})
        if isinstance(c, Inverse):
            return self.mor(c.f).inverse()
        if isinstance(c, Incl):
            E = self.obj(c.of)
            return SetMorph(E, self.mor(c.of.f).dom, {a: a for a in E})
        raise TypeError(f"not a morphism construct: {c!r}")


# ---------------------------------------------------------------- simple steps


@dataclass(frozen=True)
class PrimitiveSort:
    name: str


@dataclass(frozen=True)
class FunctionalExtension:
    name: str
    dom: object
    cod: object


@dataclass(frozen=True)
class GeometricQuotient:
    """Force the monomorphism ``phi`` (an equalizer inclusion) to be invertible."""

    phi: object
    kind: str = "commutativity"      # or "monicity"
    note: str = ""


@dataclass
class GeometricExtension:
    base: str
    steps: list
    provenance: list                 # context step index per simple step
    objects: dict                    # node -> construct, base included
    morphisms: dict                  # edge -> construct, base included
    symbols: tuple = ()              # sorts and functions of the base theory
    context: object = None           # the extended context, when compiled from one


def _is_kernel_pair_comm(s, st):
    u = s.universals.get(s.src(st.h))
    return (u is not None and u.kind == "Pullback" and s.is_identity(st.f)
            and {st.g, st.h} == {u["p1"], u["p2"]} and u["f"] == u["g"])


def compile_geometric(ext, base=None):
    """Compile ``base <= ext`` into simple steps.

    ``ext`` is a context map made by ``extension_map`` or a context, with
    ``base`` the context it extends.
    """
    if base is None:
        ext, base = ext.dom, ext.cod
    n = len(base.steps)
    if ext.steps[:n] != base.steps:
        raise UnsupportedStep(f"{ext.name} does not extend {base.name}")
    s = ext.sketch
    objs, mors = {}, {}
    inside = {}
    for rec in ext.macros:
        for i in range(rec.start, rec.stop):
            inside[i] = rec

    def ob(n_):
        return objs[n_]

    def mo(e):
        if e not in mors:
            a = e[3:-1] if e.startswith("id(") else None
            if a is not None and a in objs:
                mors[e] = Id(objs[a])
            else:
                raise UnsupportedStep(f"edge {e} has no construct")
        return mors[e]

    steps, prov = [], []
    symbols = []
    for i, st in enumerate(ext.steps):
        in_base = i < n
        rec = inside.get(i)
        if isinstance(st, K.AddPrimitiveNode):
            objs[st.name] = Sort(st.name)
            mors[K.identity_name(st.name)] = Id(Sort(st.name))
            if in_base:
                symbols.append(st.name)
            else:
                steps.append(PrimitiveSort(st.name))
                prov.append(i)
        elif isinstance(st, K.AddPrimitiveEdge):
            f = Fn(st.name, ob(st.src), ob(st.tgt))
            mors[st.name] = f
            if in_base:
                symbols.append(st.name)
            else:
                steps.append(FunctionalExtension(st.name, ob(st.src), ob(st.tgt)))
                prov.append(i)
        elif isinstance(st, K.AddUniversal):
            u = st.universal
            if u.kind == "Terminal":
                objs[u.apex] = Terminal()
            elif u.kind == "Initial":
                objs[u.apex] = Initial()
            elif u.kind == "Pullback":
                P = Pullback(mo(u["f"]), mo(u["g"]))
                objs[u.apex] = P
                mors[u["p1"]], mors[u["p2"]] = Proj(P, 1), Proj(P, 2)
            elif u.kind == "Pushout":
                Q = Pushout(mo(u["f"]), mo(u["g"]))
                objs[u.apex] = Q
                mors[u["i1"]], mors[u["i2"]] = Inj(Q, 1), Inj(Q, 2)
            else:
                objs[u.apex] = ListOf(ob(u["A"]))
                objs[u["P"]] = Opaque(u["P"])
                for r in ("bang", "pa", "pl", "nil", "cons"):
                    mors[u[r]] = Opaque(u[r])
            for nd in u.fresh_nodes:
                mors[K.identity_name(nd)] = Id(objs[nd])
        elif isinstance(st, K.AddCommutativity):
            if not in_base and rec is None:
                h = mo(st.h)
                kind = "monicity" if _is_kernel_pair_comm(s, st) else "commutativity"
                steps.append(GeometricQuotient(Incl(Equalizer(Compose(mo(st.f), mo(st.g)), h)), kind,
                                               f"{st.f} ; {st.g} = {st.h}"))
                prov.append(i)
        elif isinstance(st, K.AdjoinComposite):
            mors[st.h] = Compose(mo(st.f), mo(st.g))
        elif isinstance(st, K.DeclareFillin):
            mors[st.name] = _fillin_construct(s, st, objs, mo)
        elif isinstance(st, K.AdjoinInverse):
            mors[st.name] = Inverse(mo(st.edge))
        # deductions and uniqueness add nothing
        if rec is not None and i == rec.stop - 1:
            if rec.macro == "fin-v1":
                objs[rec.name] = Fin(ob(rec.args[0]))
                mors[K.identity_name(rec.name)] = Id(objs[rec.name])
            else:
                mors[rec.name] = FinMap(mo(rec.args[0]))
    return GeometricExtension(base.name, steps, prov, objs, mors, tuple(symbols), ext)


def _fillin_construct(s, st, objs, mo):
    apex = objs.get(st.apex)
    if st.form == "pair":
        return PairMap(apex, mo(st.get("x")), mo(st.get("y")))
    if st.form == "copair":
        return Copair(apex, mo(st.get("x")), mo(st.get("y")))
    if st.form == "bang":
        return Bang(objs[st.get("src")])
    if st.form == "absurd":
        return Absurd(objs[st.get("tgt")])
    return Opaque(st.name)


def describe(g):
    lines = [f"geometric extension over {g.base}"]
    for st in g.steps:
        lines.append("  " + step_text(st))
    return "\n".join(lines)


def step_text(st):
    if isinstance(st, PrimitiveSort):
        return f"sort {st.name}"
    if isinstance(st, FunctionalExtension):
        return f"function {st.name} : {show(st.dom)} -> {show(st.cod)}"
    if isinstance(st, GeometricQuotient):
        return f"quotient ({st.kind}) invert {show(st.phi)}  [{st.note}]"
    if isinstance(st, Torsor):
        return f"torsor over {st.category} for {st.name}"
    if isinstance(st, Invert):
        return f"invert ({st.reason}) {st.name}"
    raise TypeError(st)


# ---------------------------------------------------------------- normal form


@dataclass(frozen=True)
class Torsor:
    """Adjoin a torsor over an internal category: a finite set, or an ideal of a relation poset."""

    category: str            # "finite-sets" or "Fin(X*Y)"
    name: str
    dom: object = None
    cod: object = None


@dataclass(frozen=True)
class Invert:
    """Force a morphism to be invertible."""

    name: str
    reason: str              # "single-valued", "total" or "quotient"
    phi: object = None


def normalize(g):
    out = []
    for st in g.steps:
        if isinstance(st, PrimitiveSort):
            out.append(Torsor("finite-sets", st.name))
        elif isinstance(st, FunctionalExtension):
            out.append(Torsor(f"Fin({show(st.dom)}*{show(st.cod)})", st.name, st.dom, st.cod))
            out.append(Invert(st.name, "single-valued"))
            out.append(Invert(st.name, "total"))
        else:
            out.append(Invert(st.note or show(st.phi), "quotient", st.phi))
    return out


# ---------------------------------------------------------------- pulling back


@dataclass(frozen=True)
class TheoryMorphism:
    """Sends the symbols of one theory to constructs over another."""

    sorts: dict
    fns: dict


def model_morphism(m):
    """The morphism ``1 -> T0`` picking out the finite model ``m``."""
    pn, pe = K.primitive_items(m.ctx)
    sorts = {n: Const(m.nodes[n], n) for n in pn}
    fns = {e: ConstMap(m.edges[e], e) for e in pe}
    return TheoryMorphism(sorts, fns)


def identity_morphism(symbols, g):
    sorts = {n: Sort(n) for n in symbols if n in g.objects}
    fns = {e: g.morphisms[e] for e in symbols if e in g.morphisms and e not in g.objects}
    return TheoryMorphism(sorts, fns)


def _subst(H, local):
    def sub(c):
        if isinstance(c, Sort):
            if c.name in local:
                return c
            if c.name not in H.sorts:
                raise UnmappedConstruct(f"sort {c.name} is not mapped")
            return H.sorts[c.name]
        if c.name in local:
            return Fn(c.name, substitute(c.dom, sub), substitute(c.cod, sub))
        if c.name not in H.fns:
            raise UnmappedConstruct(f"function {c.name} is not mapped")
        return H.fns[c.name]
    return sub


def pullback_gext(g, H):
    """Pull ``g`` back along ``H``: each simple step keeps its kind, constructs are mapped."""
    local = {st.name for st in g.steps if isinstance(st, (PrimitiveSort, FunctionalExtension))}
    sub = _subst(H, local)
    steps = []
    for st in g.steps:
        if isinstance(st, PrimitiveSort):
            steps.append(st)
        elif isinstance(st, FunctionalExtension):
            steps.append(FunctionalExtension(st.name, substitute(st.dom, sub), substitute(st.cod, sub)))
        else:
            steps.append(GeometricQuotient(substitute(st.phi, sub), st.kind, st.note))
    return GeometricExtension(g.base, steps, list(g.provenance), {}, {}, (), g.context)


# ---------------------------------------------------------------- instances and points


@dataclass
class InstantiatedTheory:
    base: object                     # the base model
    steps: list                      # simple steps with base constructs grounded
    unknowns: tuple                  # adjoined sorts and functions
    context: object = None


def ground(c):
    """Evaluate every subterm that mentions no adjoined symbol."""
    if not free_symbols(c):
        if isinstance(c, (Const, ConstMap)):
            return c
        ev = Evaluator({}, {})
        try:
            return Const(ev.obj(c), show(c))
        except TypeError:
            return ConstMap(ev.mor(c), show(c))
    if isinstance(c, (Sort, Fn)):
        if isinstance(c, Fn):
            return Fn(c.name, ground(c.dom), ground(c.cod))
        return c
    kw = {f: ground(getattr(c, f)) for f in c.__dataclass_fields__ if f not in ("index", "name", "label")}
    return replace(c, **kw)


def instantiate(g, m):
    """The theory of ``T1``-models whose reduct is the finite model ``m``."""
    pulled = pullback_gext(g, model_morphism(m))
    steps = []
    for st in pulled.steps:
        if isinstance(st, FunctionalExtension):
            steps.append(FunctionalExtension(st.name, ground(st.dom), ground(st.cod)))
        elif isinstance(st, GeometricQuotient):
            steps.append(GeometricQuotient(ground(st.phi), st.kind, st.note))
        else:
            steps.append(st)
    unknowns = tuple(st.name for st in steps if not isinstance(st, GeometricQuotient))
    return InstantiatedTheory(m, steps, unknowns, g.context)


def _subsets(universe, k):
    for size in range(0, min(k, len(universe)) + 1):
        yield from itertools.combinations(universe, size)


def _holds(phi, ev):
    """An equalizer inclusion is invertible iff the two maps agree everywhere."""
    eq = phi.of
    f, g = ev.mor(eq.f), ev.mor(eq.g)
    return all(f(a) == g(a) for a in f.dom)


def _atoms(universe):
    from .values import atom
    return [a if isinstance(a, tuple) else atom(a) for a in universe]


def enumerate_points(t, bound=2, universe=("a", "b"), normal=None):
    """All models of the instantiated theory with adjoined sorts of size <= ``bound``.

    Points come back as strict models of the extended context when the
    theory knows it, otherwise as assignments of the unknowns.

    Search follows the steps, checking each quotient as soon as it is
    reached.  With ``normal`` (the output of ``normalize`` on the pulled
    back steps) the search runs over the normal form instead: relations for
    function torsors, then the two inversions.
    """
    atoms = _atoms(universe)
    steps = t.steps if normal is None else normal
    out = []

    def go(i, sorts, fns, rels):
        if i == len(steps):
            out.append({**sorts, **fns})
            return
        st = steps[i]
        ev = Evaluator(sorts, fns)
        if isinstance(st, PrimitiveSort) or (isinstance(st, Torsor) and st.category == "finite-sets"):
            for combo in _subsets(atoms, bound):
                go(i + 1, {**sorts, st.name: SetObj(combo)}, fns, rels)
        elif isinstance(st, FunctionalExtension):
            A, B = ev.obj(st.dom), ev.obj(st.cod)
            for image in itertools.product(B.elems, repeat=len(A)):
                go(i + 1, sorts, {**fns, st.name: SetMorph(A, B, dict(zip(A.elems, image)))}, rels)
        elif isinstance(st, Torsor):
            A, B = ev.obj(st.dom), ev.obj(st.cod)
            cells = [(a, b) for a in A for b in B]
            for r in range(len(cells) + 1):
                for rel in itertools.combinations(cells, r):
                    go(i + 1, sorts, fns, {**rels, st.name: (A, B, rel)})
        elif isinstance(st, Invert) and st.reason in ("single-valued", "total"):
            A, B, rel = rels[st.name]
            count = {a: 0 for a in A}
            for a, _ in rel:
                count[a] += 1
            ok = all(c <= 1 for c in count.values()) if st.reason == "single-valued" else all(c >= 1 for c in count.values())
            if not ok:
                return
            if st.reason == "total":
                fns = {**fns, st.name: SetMorph(A, B, dict(rel))}
            go(i + 1, sorts, fns, rels)
        else:
            if _holds(st.phi, ev):
                go(i + 1, sorts, fns, rels)

    go(0, {}, {}, {})
    if t.context is None:
        return out
    return [point_model(t, p) for p in out]


def point_model(t, p):
    """The strict model of the extended context given by base model plus point."""
    m = t.base
    return eval_strict_model(t.context, p, m.depth, start=(m.env(), len(m.ctx.steps)))


def normal_instance(t):
    """The normal form of an instantiated theory."""
    return normalize(GeometricExtension("", t.steps, [], {}, {}))


def point_key(p):
    """A canonical, hashable form of a point."""
    items = []
    for k in sorted(p):
        v = p[k]
        if isinstance(v, SetObj):
            items.append((k, v.elems))
        else:
            items.append((k, tuple(sorted(v.graph.items(), key=lambda kv: vkey(kv[0])))))
    return tuple(items)


def grd_relations(m):
    """For a GRD model: each relation with its grounded premise and disjuncts."""
    out = []
    for r in m.nodes["R"]:
        prem = m.edges["lambda"](r)
        disj = [m.edges["rho"](d) for d in m.nodes["D"] if m.edges["pi"](d) == r]
        out.append((r, prem, disj))
    return out


def gext_to_dict(g):
    return {"schema": "ausk-v1", "kind": "geometric-extension", "base": g.base,
            "steps": [step_text(st) for st in g.steps], "provenance": list(g.provenance)}
