"""Context homomorphisms, context maps, the arrow context and 2-cells.

A context map ``T0 -> T1`` is an opspan: an equivalence extension
``T0 <= T0'`` together with a homomorphism ``T1 -> T0'``.  A strict
``T0``-model M acts on it from the right: extend M strictly to ``T0'`` and
reduce along the homomorphism to get the ``T1``-model ``MH``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import sketch as K
from . import semantics as S
from .macros import expand_finmap
from .sketch import identity_name


class PreservationViolation(Exception):
    def __init__(self, item, reason):
        super().__init__(f"{item}: {reason}")
        self.item = item
        self.reason = reason


class TransportFailure(Exception):
    pass


class BoundaryMismatch(Exception):
    pass


class UnsupportedComponent(Exception):
    pass


# ---------------------------------------------------------------- homomorphisms


@dataclass(frozen=True, eq=False)
class Homomorphism:
    src: K.Context
    tgt: K.Context
    node_map: dict
    edge_map: dict

    def __call__(self, item):
        if item in self.node_map:
            return self.node_map[item]
        return self.edge_map[item]

    def same(self, other):
        return self.node_map == other.node_map and self.edge_map == other.edge_map

    def then(self, other):
        """Diagrammatic composite: first ``self`` then ``other``."""
        return Homomorphism(self.src, other.tgt,
                            {n: other.node_map[m] for n, m in self.node_map.items()},
                            {e: other.edge_map[f] for e, f in self.edge_map.items()})


def _find_universal(t, u, h):
    """A universal of ``t`` matching ``u`` on the data ``h`` already maps."""
    if u.kind in ("Terminal", "Initial"):
        for a, v in t.universals.items():
            if v.kind == u.kind:
                return v
        return None
    refs = {"Pullback": ("f", "g"), "Pushout": ("f", "g"), "List": ("A", "T", "bang_a")}[u.kind]
    want = tuple(h.get(u[r]) for r in refs)
    if None in want:
        return None
    for v in t.universals.values():
        if v.kind == u.kind and tuple(v[r] for r in refs) == want:
            return v
    return None


def _composite_in(t, f, g):
    for h, fg in t.composites.items():
        if fg == (f, g):
            return h
    if t.is_identity(g):
        return f
    if t.is_identity(f):
        return g
    for (a, b, c) in t.comms:
        if a == f and b == g:
            return c
    return None


def _fillin_in(t, st, h):
    data = tuple((r, h.get(v)) for r, v in st.data)
    apex = h.get(st.apex)
    for e, rec in t.fillins.items():
        if rec.form == st.form and rec.apex == apex and rec.data == data:
            return e
    d = dict(data)
    u = t.universals.get(apex)
    if u is None:
        return None
    if st.form == "bang":
        src = d["src"]
        if t.universal_of_kind(src, "Terminal") is not None and src == apex:
            return identity_name(apex)
        for e, (a, b) in t.edges.items():
            if (a, b) == (src, apex):
                return e
    if st.form == "absurd":
        for e, (a, b) in t.edges.items():
            if (a, b) == (apex, d["tgt"]):
                return e
    if st.form == "pair":
        if (d["x"], d["y"]) == (u["p1"], u["p2"]):
            return identity_name(apex)
        outs = {}
        for (a, b, c) in t.comms:
            if b in (u["p1"], u["p2"]):
                outs.setdefault(a, {})[b] = c
        for z, legs in outs.items():
            if legs.get(u["p1"]) == d["x"] and legs.get(u["p2"]) == d["y"]:
                return z
    if st.form in ("copair", "fin-natural"):
        if (d["x"], d["y"]) == (u["i1"], u["i2"]):
            return identity_name(apex)
        outs = {}
        for (a, b, c) in t.comms:
            if a in (u["i1"], u["i2"]):
                outs.setdefault(b, {})[a] = c
        for z, legs in outs.items():
            if legs.get(u["i1"]) == d["x"] and legs.get(u["i2"]) == d["y"]:
                return z
    return None


def complete_hom(src, tgt, node_map, edge_map):
    """Extend a partial assignment (primitives at least) along the steps of ``src``.

    Universal structure, identities, composites, fillins and inverses are
    sent to the matching structure of ``tgt``.  Items that cannot be matched
    are left unmapped; ``check_homomorphism`` reports them.
    """
    h = dict(node_map)
    h.update(edge_map)
    t = tgt.sketch
    for st in src.steps:
        if isinstance(st, K.AddPrimitiveNode):
            if st.name in h:
                h.setdefault(identity_name(st.name), identity_name(h[st.name]))
        elif isinstance(st, K.AddUniversal):
            u = st.universal
            v = t.universals.get(h[u.apex]) if u.apex in h else _find_universal(t, u, h)
            if v is None or v.kind != u.kind:
                continue
            h.setdefault(u.apex, v.apex)
            for r, n in u.roles:
                h.setdefault(n, v[r])
            for n in u.fresh_nodes:
                h.setdefault(identity_name(n), identity_name(h[n]))
        elif isinstance(st, K.AdjoinComposite):
            if st.h not in h and st.f in h and st.g in h:
                z = _composite_in(t, h[st.f], h[st.g])
                if z is not None:
                    h[st.h] = z
        elif isinstance(st, K.DeclareFillin):
            if st.name not in h and st.apex in h and all(v in h for _, v in st.data):
                z = _fillin_in(t, st, h)
                if z is not None:
                    h[st.name] = z
        elif isinstance(st, K.AdjoinInverse):
            if st.name not in h and st.edge in h:
                g = h[st.edge]
                if t.is_identity(g):
                    h[st.name] = g
                for inv, e in t.inverses.items():
                    if e == g:
                        h.setdefault(st.name, inv)
    s = src.sketch
    return ({n: h[n] for n in s.nodes if n in h}, {e: h[e] for e in s.edges if e in h})


def _unit_trivial(t, f, g, h):
    return (t.is_identity(g) and f == h) or (t.is_identity(f) and g == h)


def check_homomorphism(node_map, edge_map, src, tgt, complete=True):
    """Check (after completing, by default) a candidate homomorphism ``src -> tgt``."""
    if complete:
        node_map, edge_map = complete_hom(src, tgt, node_map, edge_map)
    s, t = src.sketch, tgt.sketch
    for n in s.nodes:
        if n not in node_map:
            raise PreservationViolation(n, "node is not mapped")
        if node_map[n] not in t.nodes:
            raise PreservationViolation(n, f"image {node_map[n]} is not a node of {tgt.name}")
    for e, (a, b) in s.edges.items():
        if e not in edge_map:
            raise PreservationViolation(e, "edge is not mapped")
        f = edge_map[e]
        if f not in t.edges:
            raise PreservationViolation(e, f"image {f} is not an edge of {tgt.name}")
        if t.edges[f] != (node_map[a], node_map[b]):
            raise PreservationViolation(e, f"endpoints of {f} do not match")
        if e in s.object_equalities and f not in t.object_equalities:
            raise PreservationViolation(e, f"object equality sent to {f}, which is not one")
    for n, idn in s.identities.items():
        if edge_map[idn] != t.identities[node_map[n]]:
            raise PreservationViolation(idn, "identity not preserved")
    for (f, g, h) in s.comms:
        tri = (edge_map[f], edge_map[g], edge_map[h])
        if tri not in t.comms and not _unit_trivial(t, *tri):
            raise PreservationViolation(f"{f} ; {g} = {h}", "commutativity not present in the target")
    for apex, u in s.universals.items():
        v = t.universals.get(node_map[apex])
        if v is None or v.kind != u.kind:
            raise PreservationViolation(apex, f"{u.kind} apex sent to {node_map[apex]}, which is not one")
        for r, n in u.roles:
            img = node_map.get(n, edge_map.get(n))
            if img != v[r]:
                raise PreservationViolation(apex, f"role {r} sent to {img}, expected {v[r]}")
    for e, rec in s.fillins.items():
        if rec.form in ("rec", "fin-natural"):
            want = tuple((r, node_map.get(v, edge_map.get(v))) for r, v in rec.data)
            got = t.fillins.get(edge_map[e])
            if got is None or got.form != rec.form or got.data != want or got.apex != node_map[rec.apex]:
                raise PreservationViolation(e, "recursion fillin not sent to the matching fillin")
    return Homomorphism(src, tgt, dict(node_map), dict(edge_map))


def inclusion(base, ext):
    return check_homomorphism({n: n for n in base.sketch.nodes}, {e: e for e in base.sketch.edges},
                              base, ext, complete=False)


# ---------------------------------------------------------------- context maps


@dataclass(frozen=True, eq=False)
class ContextMap:
    """``dom -> cod`` given by ``dom <= ext`` (equivalence steps) and ``hom: cod -> ext``."""

    name: str
    dom: K.Context
    cod: K.Context
    ext: K.Context
    hom: Homomorphism
    kind: str = field(default="map")     # "map" or "extension"

    @property
    def equiv_steps(self):
        return self.ext.steps[len(self.dom.steps):]

    def is_extension_map(self):
        """The reduct map of a plain extension: no equivalence steps, hom an inclusion."""
        if self.equiv_steps:
            return False
        n = len(self.cod.steps)
        if self.dom.steps[:n] != self.cod.steps:
            return False
        return (all(k == v for k, v in self.hom.node_map.items())
                and all(k == v for k, v in self.hom.edge_map.items()))


def make_map(name, dom, cod, equiv_steps=(), node_map=None, edge_map=None, positions=None):
    ext = K.Context(f"{dom.name}'", dom.steps, dom.sketch, dom.macros, dom.positions)
    for i, st in enumerate(equiv_steps):
        if not K.is_equiv_step(st):
            raise K.UnjustifiedStep(f"map {name}: {type(st).__name__} is not an equivalence step",
                                    positions[i] if positions else None)
        ext = K.extend_equiv(ext, st, positions[i] if positions else None)
    hom = check_homomorphism(node_map or {}, edge_map or {}, cod, ext)
    return ContextMap(name, dom, cod, ext, hom)


def extension_map(ext_ctx, base_ctx, name=None):
    """The map ``ext_ctx -> base_ctx`` whose right action is the reduct."""
    n = len(base_ctx.steps)
    if ext_ctx.steps[:n] != base_ctx.steps:
        raise K.KernelError(f"{ext_ctx.name} does not extend {base_ctx.name}")
    return ContextMap(name or ext_ctx.name, ext_ctx, base_ctx, ext_ctx, inclusion(base_ctx, ext_ctx), "extension")


def identity_map(ctx):
    return ContextMap(f"id({ctx.name})", ctx, ctx, ctx, inclusion(ctx, ctx), "extension")


def _fresh_namer(taken, tag):
    def fresh(name):
        cand = f"{tag}.{name}"
        while cand in taken:
            cand += "'"
        taken.add(cand)
        return cand
    return fresh


def transport(ext, steps, h, tag):
    """Replay equivalence ``steps`` over ``ext`` renamed along ``h`` (extended in place).

    New items get fresh names; every step's justification is re-checked.
    """
    taken = set(ext.sketch.nodes) | set(ext.sketch.edges)
    fresh = _fresh_namer(taken, tag)

    def ren(x):
        if x in h:
            return h[x]
        if x.startswith("id(") and x.endswith(")"):
            return identity_name(ren(x[3:-1]))
        raise TransportFailure(f"item {x} has no image")

    for st in steps:
        for e in K.introduced_items(st)[1]:
            h[e] = fresh(e)
        try:
            ext = K.extend_equiv(ext, K.rename_step(st, ren))
        except K.KernelError as exc:
            raise TransportFailure(f"transported step no longer justified: {exc}") from exc
    return ext


def compose_maps(m1, m2, name=None):
    """``m1 : T0 -> T1`` then ``m2 : T1 -> T2``."""
    if m1.cod.steps != m2.dom.steps:
        raise K.KernelError(f"cannot compose {m1.name} : ... -> {m1.cod.name} with {m2.name} : {m2.dom.name} -> ...")
    h = dict(m1.hom.node_map)
    h.update(m1.hom.edge_map)
    ext = transport(m1.ext, m2.equiv_steps, h, name or m2.name)
    node_map = {n: h[m] for n, m in m2.hom.node_map.items()}
    edge_map = {e: h[f] for e, f in m2.hom.edge_map.items()}
    hom = check_homomorphism(node_map, edge_map, m2.cod, ext, complete=False)
    return ContextMap(name or f"{m1.name};{m2.name}", m1.dom, m2.cod, ext, hom)


# ---------------------------------------------------------------- semantics of maps


def reduce_model(m, H):
    """The right action ``M |-> MH`` for a model of ``H.dom``.

    Equivalence steps are interpreted in the unique strict way (fillins are
    evaluated from the structure maps, so tagged models reduce as well).
    """
    if m.ctx.steps != H.dom.steps:
        raise S.SemanticsError(f"model of {m.ctx.name} cannot be reduced along {H.name} : {H.dom.name} -> ...")
    ext = S.extend_model(m, H.ext)
    hm = H.hom
    nodes = {n: ext.nodes[hm.node_map[n]] for n in H.cod.sketch.nodes}
    edges = {e: ext.edges[hm.edge_map[e]] for e in H.cod.sketch.edges}
    out = S.Model(H.cod, nodes, edges, m.depth)
    if m.verdicts is not None and all(v == "canonical" for v in m.verdicts.values()):
        out.verdicts = {a: "canonical" for a in H.cod.sketch.universals}
    return out


def reduce_hom(psi, H, M=None, N=None):
    """A model homomorphism ``psi : M -> N`` of ``H.dom``-models, reduced along ``H``."""
    M = reduce_model(psi.dom, H) if M is None else M
    N = reduce_model(psi.cod, H) if N is None else N
    dom_ext = S.extend_model(psi.dom, H.ext)
    cod_ext = S.extend_model(psi.cod, H.ext)
    full = S.derive_components(H.ext, dom_ext, cod_ext,
                               {n: psi.comps[n] for n in K.primitive_items(H.ext)[0]}, check=False)
    return S.ModelHom(M, N, {n: full.comps[H.hom.node_map[n]] for n in H.cod.sketch.nodes})


def models_equal(a, b):
    return a.nodes == b.nodes and a.edges == b.edges


@dataclass
class MapEquality:
    equal: bool
    witness: object = None
    checked: int = 0
    bound: int = 2
    universe: tuple = ()

    def __bool__(self):
        return self.equal


def maps_equal(m1, m2, universe=("a", "b"), bound=2, depth=S.DEFAULT_DEPTH):
    """Bounded semantic equality: every strict model reduces identically along both."""
    if m1.dom.steps != m2.dom.steps or m1.cod.steps != m2.cod.steps:
        return MapEquality(False, None, 0, bound, tuple(universe))
    n = 0
    for M in S.enumerate_strict_models(m1.dom, universe, bound, depth):
        n += 1
        if not models_equal(reduce_model(M, m1), reduce_model(M, m2)):
            return MapEquality(False, M, n, bound, tuple(universe))
    return MapEquality(True, None, n, bound, tuple(universe))


# ---------------------------------------------------------------- the arrow context


def copy_name(x, i):
    if x.startswith("id(") and x.endswith(")"):
        return identity_name(copy_name(x[3:-1], i))
    return f"{x}_{i}"


def hom_edge(n):
    return f"h_{n}"


@dataclass(frozen=True, eq=False)
class ArrowContext:
    ctx: K.Context          # the arrow context itself
    base: K.Context
    src: ContextMap         # arrow -> base, reduct to the source model
    tgt: ContextMap         # arrow -> base, reduct to the target model
    components: dict        # base node -> hom edge, where one exists


def arrow_context(ctx):
    """The context whose models are pairs of ``ctx``-models with a homomorphism.

    Two renamed copies of ``ctx`` (suffixes ``_0`` and ``_1``), a primitive
    edge ``h_X`` per primitive node, the derived components needed at the
    ends of primitive edges, and one naturality square per primitive edge.
    """
    arrow = K.Context.empty(f"{ctx.name}->")
    macros = []
    for i in (0, 1):
        off = len(arrow.steps)
        for st in ctx.steps:
            arrow = K.apply_step(arrow, K.rename_step(st, lambda x: copy_name(x, i)))
        for rec in ctx.macros:
            macros.append(K.MacroRecord(rec.macro, copy_name(rec.name, i),
                                        tuple(copy_name(a, i) for a in rec.args),
                                        copy_name(rec.prefix.rstrip("."), i) + ".",
                                        rec.start + off, rec.stop + off))
    arrow = K.Context(arrow.name, arrow.steps, arrow.sketch, tuple(macros), arrow.positions)
    s = ctx.sketch
    comps = {}
    pn, pe = K.primitive_items(ctx)
    for st in ctx.steps:
        if isinstance(st, K.AddPrimitiveNode):
            h = hom_edge(st.name)
            arrow = K.extend(arrow, K.AddPrimitiveEdge(h, copy_name(st.name, 0), copy_name(st.name, 1)))
            comps[st.name] = h

    def component(n):
        if n in comps:
            return comps[n]
        nonlocal arrow
        h = hom_edge(n)
        u = s.universals.get(n)
        fin = ctx.macro_for(n, "fin-v1")
        if fin is not None:
            base = fin.args[0]
            arrow = expand_finmap(arrow, h, component(base))
        elif u is not None and u.kind == "Terminal":
            arrow = K.extend_equiv(arrow, K.DeclareFillin(h, copy_name(n, 1), "bang", (("src", copy_name(n, 0)),)))
        elif u is not None and u.kind == "Initial":
            arrow = K.extend_equiv(arrow, K.DeclareFillin(h, copy_name(n, 0), "absurd", (("tgt", copy_name(n, 1)),)))
        else:
            raise UnsupportedComponent(f"no derived hom component for {n} ({u.kind if u else 'node'})")
        comps[n] = h
        return h

    for st in ctx.steps:
        if isinstance(st, K.AddPrimitiveEdge):
            a, b = s.edges[st.name]
            ha, hb = component(a), component(b)
            c = f"h_{st.name}"
            arrow = K.extend_equiv(arrow, K.AdjoinComposite(ha, copy_name(st.name, 1), c))
            arrow = K.extend(arrow, K.AddCommutativity(copy_name(st.name, 0), hb, c))
    maps = []
    for i in (0, 1):
        nm = {n: copy_name(n, i) for n in s.nodes}
        em = {e: copy_name(e, i) for e in s.edges}
        hom = check_homomorphism(nm, em, ctx, arrow, complete=False)
        maps.append(ContextMap(("src", "tgt")[i], arrow, ctx, arrow, hom))
    return ArrowContext(arrow, ctx, maps[0], maps[1], dict(comps))


def split_arrow_model(A, model):
    """``(M, N, hom)`` from a model of the arrow context ``A``."""
    M = reduce_model(model, A.src)
    N = reduce_model(model, A.tgt)
    prim = {n: model.edges[h] for n, h in A.components.items() if n in K.primitive_items(A.base)[0]}
    hom = S.derive_components(A.base, M, N, prim, check=False)
    return M, N, hom


def join_arrow_model(A, M, N, hom, depth=None):
    """The arrow-context model for the triple ``(M, N, hom)``."""
    prims = {}
    pn, pe = K.primitive_items(A.base)
    for i, X in ((0, M), (1, N)):
        for n in pn:
            prims[copy_name(n, i)] = X.nodes[n]
        for e in pe:
            prims[copy_name(e, i)] = X.edges[e]
    for n in pn:
        prims[hom_edge(n)] = hom.comps[n]
    return S.eval_strict_model(A.ctx, prims, M.depth if depth is None else depth)


# ---------------------------------------------------------------- 2-cells


@dataclass(frozen=True, eq=False)
class TwoCell:
    """A map ``T0 -> T1->`` with its boundaries ``T0 -> T1``."""

    arrow: ArrowContext
    map: ContextMap
    source: ContextMap
    target: ContextMap

    def at(self, M):
        """The homomorphism ``M source -> M target`` picked out by the cell."""
        return split_arrow_model(self.arrow, reduce_model(M, self.map))[2]


def two_cell(m, arrow):
    if m.cod.steps != arrow.ctx.steps:
        raise BoundaryMismatch(f"{m.name} does not land in the arrow context {arrow.ctx.name}")
    return TwoCell(arrow, m, compose_maps(m, arrow.src), compose_maps(m, arrow.tgt))


def degeneracy(arrow):
    """The map ``T -> T->`` picking identity homomorphisms."""
    ctx = arrow.base
    s = ctx.sketch
    nm, em = {}, {}
    for n in s.nodes:
        for i in (0, 1):
            nm[copy_name(n, i)] = n
    for e in s.edges:
        for i in (0, 1):
            em[copy_name(e, i)] = e
    steps = []
    for n, h in arrow.components.items():
        if n not in K.primitive_items(ctx)[0] and arrow.base.macro_for(n, "fin-v1") is not None:
            raise UnsupportedComponent(f"degeneracy through fin({n}) is not supported")
        em[h] = identity_name(n)
    for st in ctx.steps:
        if isinstance(st, K.AddPrimitiveEdge):
            a, b = s.edges[st.name]
            c = f"deg.{st.name}"
            steps.append(K.AdjoinComposite(identity_name(a), st.name, c, "unit"))
            steps.append(K.DeduceCommutativity(st.name, identity_name(b), c, "unit"))
            em[f"h_{st.name}"] = c
    return make_map(f"deg({ctx.name})", ctx, arrow.ctx, steps, nm, em)


def vertical_compose(alpha, beta, universe=("a", "b"), bound=2):
    """Paste ``alpha : f => g`` and ``beta : g => k`` into a 2-cell ``f => k``.

    The composite hom edges are adjoined as composites and each naturality
    square is derived by pasting; all justifications go through the kernel.
    """
    arrow = alpha.arrow
    if beta.arrow.ctx.steps != arrow.ctx.steps or alpha.map.dom.steps != beta.map.dom.steps:
        raise BoundaryMismatch("cells live over different contexts")
    if not maps_equal(alpha.target, beta.source, universe, bound):
        raise BoundaryMismatch(f"target of {alpha.map.name} differs from source of {beta.map.name}")
    base = arrow.base
    s = base.sketch
    ha = dict(alpha.map.hom.node_map)
    ha.update(alpha.map.hom.edge_map)
    ext = alpha.map.ext
    hb = dict(beta.map.hom.node_map)
    hb.update(beta.map.hom.edge_map)
    tr = {}
    h_b = {}
    # beta's equivalence steps, transported into alpha's extension by name
    dom_items = set(alpha.map.dom.sketch.nodes) | set(alpha.map.dom.sketch.edges)
    for x in dom_items:
        h_b[x] = x
    ext = transport(ext, beta.map.equiv_steps, h_b, "v")
    for k, v in hb.items():
        tr[k] = h_b.get(v, v)
    nm, em = {}, {}
    for n in s.nodes:
        nm[copy_name(n, 0)] = ha[copy_name(n, 0)]
        nm[copy_name(n, 1)] = tr[copy_name(n, 1)]
        if ha[copy_name(n, 1)] != tr[copy_name(n, 0)]:
            raise BoundaryMismatch(f"middle boundary differs at {n}")
    for e in s.edges:
        em[copy_name(e, 0)] = ha[copy_name(e, 0)]
        em[copy_name(e, 1)] = tr[copy_name(e, 1)]
        if ha[copy_name(e, 1)] != tr[copy_name(e, 0)]:
            raise BoundaryMismatch(f"middle boundary differs at {e}")
    names = set(ext.sketch.edges)

    def add(st):
        nonlocal ext
        ext = K.extend_equiv(ext, st)

    def fresh(x):
        while x in names:
            x += "'"
        names.add(x)
        return x

    for n, h in arrow.components.items():
        if n not in K.primitive_items(base)[0]:
            raise UnsupportedComponent(f"vertical composition through derived component at {n}")
        c = fresh(f"vc.{h}")
        add(K.AdjoinComposite(ha[h], tr[h], c))
        em[h] = c
    for st in base.steps:
        if not isinstance(st, K.AddPrimitiveEdge):
            continue
        f = st.name
        a, b = s.edges[f]
        f0, f1, f2 = ha[copy_name(f, 0)], ha[copy_name(f, 1)], tr[copy_name(f, 1)]
        pa, pb = ha[hom_edge(a)], ha[hom_edge(b)]
        qa, qb = tr[hom_edge(a)], tr[hom_edge(b)]
        ca, cb = em[hom_edge(a)], em[hom_edge(b)]
        # goal: f0 ; cb = ca ; f2, where ca = pa;qa and cb = pb;qb
        u = ha[f"h_{f}"]          # pa ; f1 = u = f0 ; pb
        v = tr[f"h_{f}"]          # qa ; f2 = v = f1 ; qb
        x = fresh(f"vc.{f}.x")    # u ; qb
        add(K.AdjoinComposite(u, qb, x))
        # f0;pb = u, u;qb = x, pb;qb = cb  |-  f0;cb = x
        add(K.DeduceCommutativity(f0, cb, x, "assoc"))
        y = fresh(f"vc.{f}.y")    # pa ; v
        add(K.AdjoinComposite(pa, v, y))
        # pa;f1 = u, u;qb = x, f1;qb = v  |-  pa;v = x
        add(K.DeduceCommutativity(pa, v, x, "assoc"))
        add(K.DeduceCommutativity(identity_name(ext.sketch.src(y)), y, x, "congruence"))
        c = fresh(f"vc.{f}")
        add(K.AdjoinComposite(ca, f2, c))
        # pa;qa = ca, qa;f2 = v, pa;v = y  |-  ca;f2 = y
        add(K.DeduceCommutativity(ca, f2, y, "assoc"))
        add(K.DeduceCommutativity(identity_name(ext.sketch.src(c)), c, y, "congruence"))
        add(K.DeduceCommutativity(f0, cb, c, "congruence"))
        em[f"h_{f}"] = c
    m = make_map(f"{alpha.map.name}.{beta.map.name}", alpha.map.dom, arrow.ctx,
                 alpha.map.equiv_steps + tuple(_steps_after(ext, alpha.map.ext)), nm, em)
    return two_cell(m, arrow)


def _steps_after(ext, prefix):
    return ext.steps[len(prefix.steps):]
