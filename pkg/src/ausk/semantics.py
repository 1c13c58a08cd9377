"""Strict and non-strict models in the arithmetic universe of computable sets.

Infinite objects (list objects and everything built over them) are carried
as truncations: a list object keeps the lists of length at most the depth
``d``, and is flagged ``complete=False``.  Maps on truncations are partial
exactly where the image would exceed the depth, and every exhaustive check
runs over the defined part.
"""

from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass, field

from . import sketch as K
from .values import UNIT, cls, inl, inr, lst, pair, sort_values, tag, vkey

DEFAULT_DEPTH = 4


class SemanticsError(Exception):
    pass


class CommutativityViolation(SemanticsError):
    pass


class TypeMismatch(SemanticsError):
    pass


class InvalidModel(SemanticsError):
    pass


class NonStrictInput(SemanticsError):
    pass


# ---------------------------------------------------------------- objects


class SetObj:
    """A finite set of values, or the depth truncation of an infinite one."""

    __slots__ = ("elems", "complete", "note", "_set", "_hash")

    def __init__(self, elems=(), complete=True, note=""):
        self.elems = sort_values(elems)
        self.complete = complete
        self.note = note
        self._set = frozenset(self.elems)
        self._hash = hash((self.elems, complete))

    @classmethod
    def presorted(cls, elems, complete=True, note=""):
        """Skip the sort; ``elems`` must already be duplicate free and in order."""
        obj = cls.__new__(cls)
        obj.elems = tuple(elems)
        obj.complete = complete
        obj.note = note
        obj._set = frozenset(obj.elems)
        obj._hash = hash((obj.elems, complete))
        return obj

    def __contains__(self, v):
        return v in self._set

    def __iter__(self):
        return iter(self.elems)

    def __len__(self):
        return len(self.elems)

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, SetObj) and self._hash == other._hash
                and self.complete == other.complete and self.elems == other.elems)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        from .values import render
        body = ", ".join(render(v) for v in self.elems[:6])
        more = ", ..." if len(self.elems) > 6 else ""
        flag = "" if self.complete else " (truncated)"
        return f"SetObj{{{body}{more}}}{flag}"


class SetMorph:
    """A map given by its graph; partial only where the domain is truncated."""

    __slots__ = ("dom", "cod", "graph", "_hash", "_bij")

    def __init__(self, dom, cod, graph):
        self.dom = dom
        self.cod = cod
        self.graph = graph
        self._hash = None
        self._bij = None

    def __call__(self, x):
        return self.graph[x]

    def get(self, x):
        return self.graph.get(x)

    def then(self, other):
        g = other.graph
        out = {}
        for x, y in self.graph.items():
            z = g.get(y)
            if z is not None:
                out[x] = z
        return SetMorph(self.dom, other.cod, out)

    def inverse(self):
        return SetMorph(self.cod, self.dom, {y: x for x, y in self.graph.items()})

    def is_bijective(self):
        if self._bij is None:
            self._bij = (len(self.graph) == len(self.dom) and len(set(self.graph.values())) == len(self.graph)
                         and (len(self.cod) == len(self.graph) or not self.cod.complete))
        return self._bij

    def is_identity(self):
        return self.dom == self.cod and all(x == y for x, y in self.graph.items()) and len(self.graph) == len(self.dom)

    def __eq__(self, other):
        if self is other:
            return True
        return (isinstance(other, SetMorph) and hash(self) == hash(other)
                and self.dom == other.dom and self.cod == other.cod and self.graph == other.graph)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dom, self.cod, frozenset(self.graph.items())))
        return self._hash

    def __repr__(self):
        from .values import render
        items = sorted(self.graph.items(), key=lambda kv: vkey(kv[0]))
        body = ", ".join(f"{render(a)} -> {render(b)}" for a, b in items[:6])
        return f"SetMorph{{{body}{', ...' if len(items) > 6 else ''}}}"


def identity(obj):
    return _memo(("id", obj), lambda: SetMorph(obj, obj, {x: x for x in obj}))


def morph_from_pairs(dom, cod, pairs):
    return SetMorph(dom, cod, dict(pairs))


def agree(f, g):
    """``f`` and ``g`` agree wherever both are defined."""
    if len(f.graph) > len(g.graph):
        f, g = g, f
    gg = g.graph
    for x, y in f.graph.items():
        z = gg.get(x)
        if z is not None and z != y:
            return False
    return True


def square_commutes(f, g, h, k):
    """``f;g`` and ``h;k`` agree wherever both are defined (no composite is built).

    Memoized: the large scaffolding maps are shared between models.
    """
    return _memo(("square", f, g, h, k), lambda: _square(f, g, h, k))


def _square(f, g, h, k):
    gg, hg, kg = g.graph, h.graph, k.graph
    for x, y in f.graph.items():
        a = gg.get(y)
        if a is None:
            continue
        hx = hg.get(x)
        if hx is None:
            continue
        b = kg.get(hx)
        if b is not None and a != b:
            return False
    return True


# ---------------------------------------------------------------- canonical constructions

_CACHE = {}


def clear_caches():
    _CACHE.clear()


def _memo(key, thunk):
    try:
        return _CACHE[key]
    except KeyError:
        val = _CACHE[key] = _canon(thunk())
        return val


def intern(x):
    """One shared instance per value, so memo lookups mostly hit on identity."""
    key = ("intern", x)
    got = _CACHE.get(key)
    if got is None:
        got = _CACHE[key] = x
    return got


def _canon(v):
    if isinstance(v, (SetMorph, SetObj)):
        return intern(v)
    if isinstance(v, dict):
        return {k: _canon(x) for k, x in v.items()}
    if isinstance(v, tuple) and v and isinstance(v[0], (SetMorph, SetObj)):
        return tuple(_canon(x) for x in v)
    return v


def terminal_obj():
    return SetObj((UNIT,), note="terminal")


def initial_obj():
    return SetObj((), note="initial")


def canonical_pullback(f, g, depth):
    def build():
        by_c = {}
        for b, c in g.graph.items():
            by_c.setdefault(c, []).append(b)
        elems = []
        for a, c in f.graph.items():
            for b in by_c.get(c, ()):
                elems.append(pair(a, b))
        complete = f.dom.complete and g.dom.complete
        apex = SetObj(elems, complete, "pullback")
        p1 = SetMorph(apex, f.dom, {z: z[1] for z in apex})
        p2 = SetMorph(apex, g.dom, {z: z[2] for z in apex})
        return apex, p1, p2
    return _memo(("pb", f, g, depth), build)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        parent = self.parent
        parent.setdefault(x, x)
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # keep the structurally least member as root
            if vkey(ry) < vkey(rx):
                rx, ry = ry, rx
            self.parent[ry] = rx


def canonical_pushout(f, g, depth):
    """Quotient of the tagged disjoint union; classes named by least member."""
    def build():
        uf = _UnionFind()
        for a in f.cod:
            uf.find(inl(a))
        for b in g.cod:
            uf.find(inr(b))
        for c, a in f.graph.items():
            b = g.graph.get(c)
            if b is not None:
                uf.union(inl(a), inr(b))
        i1 = {a: cls(uf.find(inl(a))) for a in f.cod}
        i2 = {b: cls(uf.find(inr(b))) for b in g.cod}
        complete = f.dom.complete and f.cod.complete and g.cod.complete
        apex = SetObj(set(i1.values()) | set(i2.values()), complete, "pushout")
        return apex, SetMorph(f.cod, apex, i1), SetMorph(g.cod, apex, i2)
    return _memo(("po", f, g, depth), build)


def list_members(A, depth):
    out = [lst()]
    frontier = [()]
    while frontier:
        nxt = []
        for items in frontier:
            for a in A:
                cand = items + (a,)
                if len(cand) <= depth:
                    out.append(("list", cand))
                    nxt.append(cand)
        frontier = nxt
    return out


def canonical_list(A, T, bang_a, depth):
    """List object over A with its product, nil and cons."""
    def build():
        L = SetObj(list_members(A, depth), complete=(len(A) == 0), note="list")
        t = T.elems[0]
        bang = SetMorph(L, T, {x: t for x in L})
        P, pa, pl = canonical_pullback(bang_a, bang, depth)
        nil = SetMorph(T, L, {t: lst()})
        cons = {}
        for z in P:
            v = ("list", (z[1],) + z[2][1])
            if v in L:
                cons[z] = v
        return L, bang, P, pa, pl, nil, SetMorph(P, L, cons)
    return _memo(("list", A, T, bang_a, depth), build)


def interpret_universal(u, env, depth=DEFAULT_DEPTH):
    """Canonical interpretation of ``u`` over the interpretations in ``env``.

    Returns a dict from the universal's fresh items to their interpretations.
    """
    if u.kind == "Terminal":
        return {u.apex: terminal_obj()}
    if u.kind == "Initial":
        return {u.apex: initial_obj()}
    if u.kind == "Pullback":
        apex, p1, p2 = canonical_pullback(env[u["f"]], env[u["g"]], depth)
        return {u.apex: apex, u["p1"]: p1, u["p2"]: p2}
    if u.kind == "Pushout":
        apex, i1, i2 = canonical_pushout(env[u["f"]], env[u["g"]], depth)
        return {u.apex: apex, u["i1"]: i1, u["i2"]: i2}
    L, bang, P, pa, pl, nil, cons = canonical_list(env[u["A"]], env[u["T"]], env[u["bang_a"]], depth)
    return {u.apex: L, u["bang"]: bang, u["P"]: P, u["pa"]: pa, u["pl"]: pl,
            u["nil"]: nil, u["cons"]: cons}


# ---------------------------------------------------------------- fillins


def _pair_index(p1, p2):
    return {(p1.graph.get(z), p2.graph.get(z)): z for z in p1.dom}


def recursor(nil, cons, pa, pl, base, step, pb_index, param=None):
    """The unique map out of a list object determined by nil and cons data.

    Plain form: ``r(nil) = base(t)`` and ``r(cons(a, l)) = step((a, r(l)))``,
    where ``pb_index`` locates the element of the step's product domain.
    Parameterised form (``param = (q1, q2, w_index)``):
    ``r(g, nil) = base(g)`` and ``r(g, cons(a, l)) = step((g, (a, r(g, l))))``.
    Evaluated lazily with memoisation; undefined where the truncation is.
    """
    nil_inv = {v: t for t, v in nil.graph.items()}
    cons_inv = {v: p for p, v in cons.graph.items()}
    memo = {}

    def run(g, l):
        key = (g, l)
        if key in memo:
            return memo[key]
        if l in nil_inv:
            out = base.graph.get(nil_inv[l] if g is None else g)
        else:
            p = cons_inv.get(l)
            out = None
            if p is not None:
                a, rest = pa.graph.get(p), pl.graph.get(p)
                sub = run(g, rest)
                if sub is not None:
                    v = pb_index.get((a, sub))
                    if v is not None and g is not None:
                        v = param[2].get((g, v))
                    if v is not None:
                        out = step.graph.get(v)
        memo[key] = out
        return out

    return run


def eval_fillin(st, env, s):
    """Interpret a fillin edge from the structure maps in ``env``."""
    def build():
        return _eval_fillin(st, env, s)
    ck = (st, id(s))
    hit = _REFS.get(ck)
    if hit is None:
        hit = _REFS[ck] = (s, _getter(_fillin_refs(st, s)))   # keeps s alive, so its id stays unique
    return _memo(("fill", st, hit[1](env)), build)


_REFS = {}


def _getter(refs):
    """``env -> tuple(env[r] for r in refs)``, without the per-call generator."""
    refs = tuple(refs)
    if len(refs) == 1:
        r = refs[0]
        return lambda env: (env[r],)
    if not refs:
        return lambda env: ()
    return operator.itemgetter(*refs)


def _fillin_refs(st, s):
    u = s.universals[st.apex]
    refs = [st.apex] + [n for _, n in u.roles]
    refs += [v for _, v in st.data]
    if st.form == "rec":
        B = st.get("B")
        stp = st.get("step")
        refs.append(s.src(stp))
        pb = s.universals[s.src(stp)]
        refs += [pb["p1"], pb["p2"]]
        if st.get("W") is not None:
            inner = s.universals[s.src(pb["g"])]
            refs += [inner.apex, inner["p1"], inner["p2"]]
            q = s.universals[st.get("Q")]
            refs += [q["p1"], q["p2"]]
        refs.append(B)
    elif st.form == "bang":
        refs.append(st.get("src"))
    elif st.form == "absurd":
        refs.append(st.get("tgt"))
    return refs


def _eval_fillin(st, env, s):
    u = s.universals[st.apex]
    apex = env[st.apex]
    form = st.form
    if form == "bang":
        Z = env[st.get("src")]
        if len(apex) != 1:
            raise InvalidModel(f"{st.apex} is not a singleton")
        t = apex.elems[0]
        return SetMorph(Z, apex, {z: t for z in Z})
    if form == "absurd":
        return SetMorph(apex, env[st.get("tgt")], {})
    if form == "pair":
        x, y = env[st.get("x")], env[st.get("y")]
        idx = _pair_index(env[u["p1"]], env[u["p2"]])
        out = {}
        for z in x.dom:
            a, b = x.graph.get(z), y.graph.get(z)
            w = idx.get((a, b))
            if w is not None:
                out[z] = w
        return SetMorph(x.dom, apex, out)
    if form in ("copair", "fin-natural"):
        x, y = env[st.get("x")], env[st.get("y")]
        i1, i2 = env[u["i1"]], env[u["i2"]]
        out = {}
        for a, q in i1.graph.items():
            v = x.graph.get(a)
            if v is not None:
                out.setdefault(q, v)
        for b, q in i2.graph.items():
            v = y.graph.get(b)
            if v is not None:
                out.setdefault(q, v)
        return SetMorph(apex, x.cod, out)
    # rec
    stp = env[st.get("step")]
    base = env[st.get("base")]
    B = env[st.get("B")]
    pbu = s.universals[s.src(st.get("step"))]
    if st.get("W") is None:
        pb_index = _pair_index(env[pbu["p1"]], env[pbu["p2"]])
        run = recursor(env[u["nil"]], env[u["cons"]], env[u["pa"]], env[u["pl"]], base, stp, pb_index)
        out = {}
        for l in apex:
            v = run(None, l)
            if v is not None:
                out[l] = v
        return SetMorph(apex, B, out)
    inner = s.universals[s.src(pbu["g"])]
    pb_index = _pair_index(env[inner["p1"]], env[inner["p2"]])
    w_index = _pair_index(env[pbu["p1"]], env[pbu["p2"]])
    qu = s.universals[st.get("Q")]
    q1, q2 = env[qu["p1"]], env[qu["p2"]]
    run = recursor(env[u["nil"]], env[u["cons"]], env[u["pa"]], env[u["pl"]], base, stp, pb_index,
                   param=(q1, q2, w_index))
    out = {}
    for q in q1.dom:
        v = run(q1.graph[q], q2.graph[q])
        if v is not None:
            out[q] = v
    return SetMorph(q1.dom, B, out)


def recursor_fillin(model, list_apex, B, base, step, Q=None, W=None):
    """Evaluate the recursion fillin out of ``list_apex`` inside ``model``.

    ``base``/``step`` name edges of the model's context, as in a ``rec``
    fillin declaration.
    """
    data = [("B", B), ("base", base), ("step", step)]
    if Q is not None:
        data += [("Q", Q), ("W", W)]
    st = K.DeclareFillin("<rec>", list_apex, "rec", tuple(data))
    env = dict(model.nodes)
    env.update(model.edges)
    return _eval_fillin(st, env, model.ctx.sketch)


# ---------------------------------------------------------------- models


@dataclass(eq=False)
class Model:
    ctx: object
    nodes: dict
    edges: dict
    depth: int = DEFAULT_DEPTH
    verdicts: dict = field(default=None, repr=False)

    def __getitem__(self, item):
        if item in self.nodes:
            return self.nodes[item]
        return self.edges[item]

    def same(self, other):
        return self.nodes == other.nodes and self.edges == other.edges

    def env(self):
        e = dict(self.nodes)
        e.update(self.edges)
        return e

    @property
    def strict(self):
        if self.verdicts is None:
            self.verdicts = check_model(self.ctx, self, self.depth).verdicts
        return all(v == "canonical" for v in self.verdicts.values())

    def primitive_assignment(self):
        pn, pe = K.primitive_items(self.ctx)
        out = {n: self.nodes[n] for n in self.ctx.sketch.nodes if n in pn}
        out.update({e: self.edges[e] for e in self.ctx.sketch.edges if e in pe})
        return out

    def __repr__(self):
        return f"Model({self.ctx.name}, {sorted(self.ctx.sketch.primitive_nodes)})"


def _check_triangle(env, f, g, h):
    return agree(env[f].then(env[g]), env[h])


def _check_edge(env, e, src, tgt):
    m = env[e]
    if not isinstance(m, SetMorph):
        raise TypeMismatch(f"{e} is not interpreted by a map")
    if m.dom != env[src] or m.cod != env[tgt]:
        raise TypeMismatch(f"{e} does not map {src} to {tgt}")
    dom = m.dom
    if dom.complete and len(m.graph) != len(dom):
        raise TypeMismatch(f"{e} is not total")
    cod = m.cod
    for x, y in m.graph.items():
        if x not in dom or (y not in cod and cod.complete):
            raise TypeMismatch(f"{e} leaves its domain or codomain")


def _step_node(s, st, env, depth, assignment, ctx):
    obj = assignment[st.name]
    if not isinstance(obj, SetObj):
        obj = SetObj(obj)
    obj = env[st.name] = intern(obj)
    env[K.identity_name(st.name)] = identity(obj)


def _step_edge(s, st, env, depth, assignment, ctx):
    m = assignment[st.name]
    if not isinstance(m, SetMorph):
        m = SetMorph(env[st.src], env[st.tgt], dict(m))
    env[st.name] = intern(m)
    _check_edge(env, st.name, st.src, st.tgt)


def _step_universal(s, st, env, depth, assignment, ctx):
    env.update(universal_step(ctx, st.universal, env, depth))


def _step_commute(s, st, env, depth, assignment, ctx):
    if not _check_triangle(env, st.f, st.g, st.h):
        raise CommutativityViolation(f"{st.f} ; {st.g} = {st.h} fails")


def _step_composite(s, st, env, depth, assignment, ctx):
    f, g = env[st.f], env[st.g]
    env[st.h] = _memo(("then", f, g), lambda: f.then(g))


def _step_fillin(s, st, env, depth, assignment, ctx):
    env[st.name] = eval_fillin(st, env, s)


def _step_inverse(s, st, env, depth, assignment, ctx):
    env[st.name] = env[st.edge].inverse()


def _step_nothing(s, st, env, depth, assignment, ctx):
    pass


_STEPS = {
    K.AddPrimitiveNode: _step_node,
    K.AddPrimitiveEdge: _step_edge,
    K.AddUniversal: _step_universal,
    K.AddCommutativity: _step_commute,
    K.AdjoinComposite: _step_composite,
    K.DeclareFillin: _step_fillin,
    K.AdjoinInverse: _step_inverse,
}


def _run_step(s, st, env, depth, assignment, ctx):
    """Interpret one step strictly; mutates ``env``.

    DeduceCommutativity and FillinUniqueness add no interpretations.
    """
    _STEPS.get(type(st), _step_nothing)(s, st, env, depth, assignment, ctx)


def universal_step(ctx, u, env, depth):
    """Everything a universal step adds to ``env``, identities included; memoized on its inputs."""
    ck = (u, id(ctx))
    hit = _REFS.get(ck)
    if hit is None:
        fresh = set(u.fresh_nodes) | set(u.fresh_edges)
        refs = [n for _, n in u.roles if n not in fresh]
        fin = ctx.macro_for(u.apex, "fin-v1")
        if fin is not None:
            refs.append(fin.args[0])
        hit = _REFS[ck] = (ctx, _getter(refs))   # keeps ctx alive, so its id stays unique

    def build():
        out = dict(interpret_in_context(ctx, u, env, depth))
        for n in u.fresh_nodes:
            out[K.identity_name(n)] = identity(out[n])
        return out
    return _memo(("ustep", u, depth, hit[1](env)), build)


def interpret_in_context(ctx, u, env, depth):
    """Canonical interpretation, knowing that ``fin`` apexes over small sets are finite."""
    out = interpret_universal(u, env, depth)
    fin = ctx.macro_for(u.apex, "fin-v1")
    if fin is not None:
        A = env[fin.args[0]]
        if A.complete and len(A) <= depth and not out[u.apex].complete:
            out = _completed_fin(out, u)
    return out


def _completed_fin(out, u):
    """Every subset of A has a list of length <= depth, so the quotient is complete."""
    i1, i2 = out[u["i1"]], out[u["i2"]]

    def build():
        full = SetObj(out[u.apex].elems, True, "fin")
        return full, SetMorph(i1.dom, full, i1.graph), SetMorph(i2.dom, full, i2.graph)
    full, j1, j2 = _memo(("fin-complete", i1, i2), build)
    return {u.apex: full, u["i1"]: j1, u["i2"]: j2}


def eval_strict_model(ctx, primitives, depth=DEFAULT_DEPTH, start=None):
    """Replay the context interpreting universals canonically.

    ``primitives`` maps each primitive node to a SetObj (or iterable of
    values) and each primitive edge to a SetMorph (or dict).  ``start`` is an
    optional (env, index) pair to resume from.
    """
    s = ctx.sketch
    pn, pe = K.primitive_items(ctx)
    extra = set(primitives) - pn - pe
    missing = (pn | pe) - set(primitives)
    if start is None and (extra or missing):
        raise TypeMismatch(f"assignment must cover exactly the primitives; extra={sorted(extra)} missing={sorted(missing)}")
    env, i0 = ({}, 0) if start is None else (dict(start[0]), start[1])
    for st in ctx.steps[i0:]:
        _run_step(s, st, env, depth, primitives, ctx)
    return _model_from_env(ctx, env, depth, canonical=True)


def _model_from_env(ctx, env, depth, canonical=False):
    s = ctx.sketch
    nodes = {n: env[n] for n in s.nodes}
    edges = {e: env[e] for e in s.edges}
    verdicts = {a: "canonical" for a in s.universals} if canonical else None
    return Model(ctx, nodes, edges, depth, verdicts)


def extend_model(model, ctx, depth=None):
    """Interpret the steps of ``ctx`` beyond ``model.ctx`` in the unique strict way.

    ``ctx`` must extend ``model.ctx`` (its step log has the model's as prefix)
    and add no primitives.
    """
    depth = model.depth if depth is None else depth
    n = len(model.ctx.steps)
    if ctx.steps[:n] != model.ctx.steps:
        raise SemanticsError(f"{ctx.name} does not extend {model.ctx.name}")
    if n == len(ctx.steps):
        return Model(ctx, model.nodes, model.edges, depth, model.verdicts)
    env = model.env()
    s = ctx.sketch
    for st in ctx.steps[n:]:
        if isinstance(st, (K.AddPrimitiveNode, K.AddPrimitiveEdge)):
            raise SemanticsError(f"cannot extend uniquely across primitive {st.name}")
        _run_step(s, st, env, depth, {}, ctx)
    m = _model_from_env(ctx, env, depth)
    if model.verdicts is not None:
        m.verdicts = dict(model.verdicts)
        for a in s.universals:
            m.verdicts.setdefault(a, "canonical")
    return m


def subsets(universe, k):
    for size in range(0, min(k, len(universe)) + 1):
        for combo in itertools.combinations(universe, size):
            yield combo


def all_functions(dom, cod):
    dom_elems = list(dom)
    if not dom.complete:
        raise SemanticsError("primitive edges need a finite domain")
    for image in itertools.product(cod.elems, repeat=len(dom_elems)):
        yield SetMorph(dom, cod, dict(zip(dom_elems, image)))


def _edge_choices(ctx, i, env):
    """Interpretations of the primitive edge at step ``i``.

    Commutativities that follow before the next primitive step and relate
    the edge to already interpreted edges prune the values pointwise; the
    pruned maps are exactly the ones those commutativities allow.
    """
    st = ctx.steps[i]
    dom, cod = env[st.src], env[st.tgt]
    if not dom.complete:
        raise SemanticsError("primitive edges need a finite domain")
    allowed = {x: list(cod.elems) for x in dom}
    for later in ctx.steps[i + 1:]:
        if isinstance(later, (K.AddPrimitiveNode, K.AddPrimitiveEdge)):
            break
        if not isinstance(later, K.AddCommutativity):
            continue
        f, g, h = later.f, later.g, later.h
        if f == st.name and g in env and h in env and g != f and h != f:
            gm, hm = env[g], env[h]
            for x in dom:
                want = hm.graph.get(x)
                if want is not None:
                    allowed[x] = [v for v in allowed[x] if gm.graph.get(v, want) == want]
        elif g == st.name and f in env and h in env and f != g and h != g:
            fm, hm = env[f], env[h]
            for a, x in fm.graph.items():
                want = hm.graph.get(a)
                if want is not None and x in allowed:
                    allowed[x] = [v for v in allowed[x] if v == want]
    keys = list(dom)
    for image in itertools.product(*(allowed[x] for x in keys)):
        yield SetMorph(dom, cod, dict(zip(keys, image)))


def _atoms(universe):
    from .values import atom
    return [a if isinstance(a, tuple) else atom(a) for a in universe]


def _search(ctx, i, env, atoms, bound, depth, out):
    s = ctx.sketch
    steps = ctx.steps
    while i < len(steps):
        st = steps[i]
        if isinstance(st, K.AddPrimitiveNode):
            for combo in subsets(atoms, bound):
                env2 = dict(env)
                _run_step(s, st, env2, depth, {st.name: SetObj(combo)}, ctx)
                _search(ctx, i + 1, env2, atoms, bound, depth, out)
            return
        if isinstance(st, K.AddPrimitiveEdge):
            for m in _edge_choices(ctx, i, env):
                env2 = dict(env)
                _run_step(s, st, env2, depth, {st.name: m}, ctx)
                _search(ctx, i + 1, env2, atoms, bound, depth, out)
            return
        try:
            _run_step(s, st, env, depth, {}, ctx)
        except (CommutativityViolation, TypeMismatch):
            return
        i += 1
    out.append(_model_from_env(ctx, env, depth, canonical=True))


def enumerate_strict_models(ctx, universe=("a", "b"), bound=2, depth=DEFAULT_DEPTH):
    """All strict models with primitive nodes drawn from ``universe`` (size <= bound).

    Primitive edges range over all functions; the order is deterministic.
    Atoms may be given as names or as values.
    """
    out = []
    _search(ctx, 0, {}, _atoms(universe), bound, depth, out)
    return out


def models_over(ctx, base_model, universe=("a", "b"), bound=2, depth=None):
    """Strict models of ``ctx`` whose reduct to ``base_model.ctx`` is ``base_model``."""
    depth = base_model.depth if depth is None else depth
    n = len(base_model.ctx.steps)
    if ctx.steps[:n] != base_model.ctx.steps:
        raise SemanticsError(f"{ctx.name} does not extend {base_model.ctx.name}")
    out = []
    _search(ctx, n, base_model.env(), _atoms(universe), bound, depth, out)
    return out


# ---------------------------------------------------------------- checking


@dataclass
class StrictnessReport:
    context: str
    depth: int
    verdicts: dict
    problems: list

    @property
    def valid(self):
        return not self.problems and all(v != "invalid" for v in self.verdicts.values())

    @property
    def strict(self):
        return self.valid and all(v == "canonical" for v in self.verdicts.values())


def _pullback_component(u, s, src_env, tgt_env, comps):
    A, B = s.edges[u["f"]][0], s.edges[u["g"]][0]
    ca, cb = comps[A], comps[B]
    p1, p2 = src_env[u["p1"]], src_env[u["p2"]]
    tidx = _pair_index(tgt_env[u["p1"]], tgt_env[u["p2"]])
    out = {}
    for z in src_env[u.apex]:
        w = tidx.get((ca.graph.get(p1.graph[z]), cb.graph.get(p2.graph[z])))
        if w is not None:
            out[z] = w
    return SetMorph(src_env[u.apex], tgt_env[u.apex], out)


def universal_component(u, s, src_env, tgt_env, comps):
    """Components on ``u``'s fresh nodes of the unique homomorphism extending ``comps``.

    ``comps`` holds components on the nodes ``u`` is built over.  Works for
    strict and non-strict interpretations alike.  Memoized on everything the
    result depends on.
    """
    ck = (u, id(s))
    hit = _REFS.get(ck)
    if hit is None:
        items = [u.apex] + [n for _, n in u.roles]
        nodes = set()
        for x in items:
            nodes.update(s.edges[x] if x in s.edges else (x,))
        hit = _REFS[ck] = (s, (items, sorted(nodes)))
    items, nodes = hit[1]
    key = ("ucomp", u,
           tuple(src_env.get(x) for x in items), tuple(tgt_env.get(x) for x in items),
           tuple((n, comps[n]) for n in nodes if n in comps))
    return dict(_memo(key, lambda: _universal_component(u, s, src_env, tgt_env, comps)))


def _universal_component(u, s, src_env, tgt_env, comps):
    if u.kind == "Terminal":
        a, b = src_env[u.apex], tgt_env[u.apex]
        if len(b) != 1:
            raise InvalidModel(f"terminal {u.apex} is not a singleton in the target")
        t = b.elems[0]
        return {u.apex: SetMorph(a, b, {x: t for x in a})}
    if u.kind == "Initial":
        return {u.apex: SetMorph(src_env[u.apex], tgt_env[u.apex], {})}
    if u.kind == "Pullback":
        return {u.apex: _pullback_component(u, s, src_env, tgt_env, comps)}
    if u.kind == "Pushout":
        A, B = s.edges[u["f"]][1], s.edges[u["g"]][1]
        ca, cb = comps[A], comps[B]
        j1, j2 = tgt_env[u["i1"]], tgt_env[u["i2"]]
        out = {}
        for leg, c, j in ((src_env[u["i1"]], ca, j1), (src_env[u["i2"]], cb, j2)):
            for a, q in leg.graph.items():
                v = j.graph.get(c.graph.get(a))
                if v is not None:
                    out.setdefault(q, v)
        return {u.apex: SetMorph(src_env[u.apex], tgt_env[u.apex], out)}
    # List: recurse through nil/cons, then the product by the pullback rule
    A, T, L, P = u["A"], u["T"], u.apex, u["P"]
    ca, ct = comps[A], comps[T]
    nil_inv = {v: t for t, v in src_env[u["nil"]].graph.items()}
    cons_inv = {v: p for p, v in src_env[u["cons"]].graph.items()}
    spa, spl = src_env[u["pa"]], src_env[u["pl"]]
    tnil, tcons = tgt_env[u["nil"]], tgt_env[u["cons"]]
    tidx = _pair_index(tgt_env[u["pa"]], tgt_env[u["pl"]])
    memo = {}

    def run(l):
        if l in memo:
            return memo[l]
        if l in nil_inv:
            out = tnil.graph.get(ct.graph.get(nil_inv[l]))
        else:
            out = None
            p = cons_inv.get(l)
            if p is not None:
                sub = run(spl.graph[p])
                z = tidx.get((ca.graph.get(spa.graph[p]), sub))
                out = tcons.graph.get(z) if z is not None else None
        memo[l] = out
        return out

    cl = {}
    for l in src_env[L]:
        v = run(l)
        if v is not None:
            cl[l] = v
    cl = SetMorph(src_env[L], tgt_env[L], cl)
    comps2 = dict(comps)
    comps2[L] = cl
    cp = _pullback_component(u.companion(), s, src_env, tgt_env, comps2)
    return {L: cl, P: cp}


def _structure_commutes(u, s, comp_env, src_env, tgt_env):
    """Fresh edges of ``u`` commute with the components."""
    for e in u.fresh_edges:
        a, b = s.edges[e]
        lhs = comp_env[a].then(tgt_env[e])
        rhs = src_env[e].then(comp_env[b])
        if not agree(lhs, rhs):
            return False
    return True


def check_model(ctx, model, depth=None):
    """Per-universal verdicts (canonical / non-canonical / invalid) plus problems."""
    depth = model.depth if depth is None else depth
    s = ctx.sketch
    env = model.env()
    verdicts, problems = {}, []
    for n in s.nodes:
        if not isinstance(env.get(n), SetObj):
            problems.append(f"node {n} is not interpreted by a set")
    if problems:
        return StrictnessReport(ctx.name, depth, verdicts, problems)
    for e, (a, b) in s.edges.items():
        try:
            if s.is_identity(e):
                if not env[e].is_identity() or env[e].dom != env[a]:
                    problems.append(f"{e} is not an identity")
                continue
            _check_edge(env, e, a, b)
        except TypeMismatch as exc:
            problems.append(str(exc))
    if problems:
        return StrictnessReport(ctx.name, depth, verdicts, problems)
    for st in ctx.steps:
        if isinstance(st, K.AddUniversal):
            u = st.universal
            verdicts[u.apex] = _universal_verdict(ctx, u, env, depth)
        elif isinstance(st, K.AddCommutativity):
            if not _check_triangle(env, st.f, st.g, st.h):
                problems.append(f"commutativity {st.f} ; {st.g} = {st.h} fails")
        elif isinstance(st, K.AdjoinComposite):
            if not _check_triangle(env, st.f, st.g, st.h):
                problems.append(f"composite {st.h} is not {st.f} ; {st.g}")
        elif isinstance(st, K.DeclareFillin):
            try:
                want = _eval_fillin(st, env, s)
            except InvalidModel as exc:
                problems.append(str(exc))
                continue
            if not agree(want, env[st.name]) or len(want.graph) != len(env[st.name].graph):
                problems.append(f"fillin {st.name} is not the induced map")
        elif isinstance(st, K.AdjoinInverse):
            if not agree(env[st.edge].then(env[st.name]), identity(env[s.src(st.edge)])):
                problems.append(f"{st.name} is not inverse to {st.edge}")
    return StrictnessReport(ctx.name, depth, verdicts, problems)


def _universal_verdict(ctx, u, env, depth):
    s = ctx.sketch
    fresh = list(u.fresh_nodes) + list(u.fresh_edges)
    try:
        can = interpret_in_context(ctx, u, env, depth)
    except (KeyError, IndexError):
        return "invalid"
    if all(can[x] == env[x] for x in fresh if x in can):
        return "canonical"
    can_env = dict(env)
    can_env.update(can)
    base = set()
    for _, r in u.roles:
        if r in s.nodes and r not in u.fresh_nodes:
            base.add(r)
        elif r in s.edges and r not in u.fresh_edges:
            base.update(s.edges[r])
    comps = {n: identity(env[n]) for n in base}
    try:
        comp = universal_component(u, s, can_env, env, comps)
    except InvalidModel:
        return "invalid"
    comp_env = dict(comps)
    comp_env.update(comp)
    if not all(c.is_bijective() for c in comp.values()):
        return "invalid"
    if not _structure_commutes(u, s, comp_env, can_env, env):
        return "invalid"
    return "non-canonical"


# ---------------------------------------------------------------- homomorphisms


@dataclass(eq=False)
class ModelHom:
    """Components on every node of the context, natural in every edge."""

    dom: Model
    cod: Model
    comps: dict

    def __getitem__(self, n):
        return self.comps[n]

    def then(self, other):
        return ModelHom(self.dom, other.cod, {n: c.then(other.comps[n]) for n, c in self.comps.items()})

    def same(self, other):
        return self.comps == other.comps

    def is_iso(self):
        return all(c.is_bijective() for c in self.comps.values())

    def is_identity(self):
        return all(c.is_identity() for c in self.comps.values())


def natural_in(s, comps, M, N, e):
    a, b = s.edges[e]
    return square_commutes(comps[a], N.edges[e] if isinstance(N, Model) else N[e],
                           M.edges[e] if isinstance(M, Model) else M[e], comps[b])


def derive_components(ctx, M, N, prim_comps, check=True):
    """Extend components on primitive nodes to a homomorphism ``M -> N``.

    Returns None when some edge is not natural.
    """
    s = ctx.sketch
    comps = {}
    menv, nenv = M.env(), N.env()
    done_edges = set()
    for st in ctx.steps:
        if isinstance(st, K.AddPrimitiveNode):
            comps[st.name] = prim_comps[st.name]
        elif isinstance(st, K.AddUniversal):
            comps.update(universal_component(st.universal, s, menv, nenv, comps))
        if check:
            nodes, edges = K.introduced_items(st)
            for e in edges:
                if e in s.edges and e not in done_edges:
                    done_edges.add(e)
                    if not natural_in(s, comps, menv, nenv, e):
                        return None
    if check:
        for e in s.edges:
            if e not in done_edges and not natural_in(s, comps, menv, nenv, e):
                return None
    return ModelHom(M, N, comps)


def enumerate_homomorphisms(ctx, M, N):
    """All homomorphisms ``M -> N``; components on primitive nodes are searched."""
    s = ctx.sketch
    menv, nenv = M.env(), N.env()
    steps = ctx.steps
    out = []

    def go(i, comps):
        while i < len(steps):
            st = steps[i]
            if isinstance(st, K.AddPrimitiveNode):
                for c in all_functions(M.nodes[st.name], N.nodes[st.name]):
                    comps2 = dict(comps)
                    comps2[st.name] = c
                    go(i + 1, comps2)
                return
            if isinstance(st, K.AddUniversal):
                comps = dict(comps)
                comps.update(universal_component(st.universal, s, menv, nenv, comps))
            for e in K.introduced_items(st)[1]:
                if e in s.edges and not natural_in(s, comps, menv, nenv, e):
                    return
            i += 1
        out.append(ModelHom(M, N, comps))

    go(0, {})
    return out


def identity_hom(M):
    return ModelHom(M, M, {n: identity(o) for n, o in M.nodes.items()})


# ---------------------------------------------------------------- AU-functors


class AUFunctor:
    """An endofunctor of the semantic universe preserving the AU structure."""

    def on_value(self, v):
        raise NotImplementedError

    def _table(self, name):
        # per-instance lookup tables; they are not dataclass fields, so equality ignores them
        try:
            return self.__dict__[name]
        except KeyError:
            t = {}
            object.__setattr__(self, name, t)
            return t

    # whether on_value preserves the structural order, so images need no sort
    monotone = False

    def image_graph(self, graph):
        f = self.on_value
        return {f(x): f(y) for x, y in graph.items()}

    def on_obj(self, X):
        t = self._table("_objs")
        got = t.get(X)
        if got is None:
            vals = map(self.on_value, X)
            new = SetObj.presorted(vals, X.complete, X.note) if self.monotone else SetObj(vals, X.complete, X.note)
            got = t[X] = intern(new)
        return got

    def on_morph(self, f):
        t = self._table("_morphs")
        got = t.get(f)
        if got is None:
            dom, cod = self.on_obj(f.dom), self.on_obj(f.cod)
            got = t[f] = intern(SetMorph(dom, cod, self.image_graph(f.graph)))
        return got

    def tags(self):
        return ()


@dataclass(frozen=True)
class Identity(AUFunctor):
    monotone = True

    def on_value(self, v):
        return v

    def image_graph(self, graph):
        return graph

    def on_obj(self, X):
        return X

    def on_morph(self, f):
        return f


@dataclass(frozen=True)
class Tagging(AUFunctor):
    """Wrap every value in a tag; a bijection on each object."""

    label: str
    monotone = True

    def on_value(self, v):
        return tag(self.label, v)

    def image_graph(self, graph):
        t = self.label
        return {("tag", t, x): ("tag", t, y) for x, y in graph.items()}

    def tags(self):
        return (self.label,)


@dataclass(frozen=True)
class Composite(AUFunctor):
    """Apply ``parts`` left to right."""

    parts: tuple

    @property
    def monotone(self):
        return all(p.monotone for p in self.parts)

    def on_value(self, v):
        for p in self.parts:
            v = p.on_value(v)
        return v

    def image_graph(self, graph):
        for p in self.parts:
            graph = p.image_graph(graph)
        return graph

    def tags(self):
        return tuple(t for p in self.parts for t in p.tags())


def apply_functor(F, model):
    """The image model F(M); generally non-strict."""
    nodes = {n: F.on_obj(o) for n, o in model.nodes.items()}
    edges = {e: F.on_morph(m) for e, m in model.edges.items()}
    return Model(model.ctx, nodes, edges, model.depth)


def _strip(v, labels):
    for t in reversed(labels):
        if v[0] != "tag" or v[1] != t:
            raise SemanticsError(f"value {v!r} does not carry tag {t}")
        v = v[2]
    return v


@dataclass(frozen=True)
class NatTransform:
    """The canonical transport between two tagging functors."""

    source: AUFunctor
    target: AUFunctor

    def component(self, X):
        def build():
            src, tgt = self.source.tags(), self.target.tags()
            FX = self.source.on_obj(X)
            GX = self.target.on_obj(X)
            g = {}
            for v in FX:
                raw = _strip(v, src)
                w = raw
                for t in tgt:
                    w = tag(t, w)
                g[v] = w
            return SetMorph(FX, GX, g)
        return _memo(("nat", self, X), build)

    def at(self, model):
        return ModelHom(apply_functor(self.source, model), apply_functor(self.target, model),
                        {n: self.component(o) for n, o in model.nodes.items()})
