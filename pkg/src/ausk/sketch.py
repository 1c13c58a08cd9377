"""Sketch kernel: checked construction of contexts from the empty sketch.

A context is a log of steps.  Extension steps (primitive nodes and edges,
universals over fresh apexes, asserted commutativities) may add genuinely new
structure; equivalence steps may only adjoin what is already implicitly
present, and each carries a justification tag from a fixed rule set:

``composite``   any composable pair has a composite
``unit``        identity laws (for composites and for commutativities)
``assoc``       pasting two triangles along a shared composite
``congruence``  composites are unique; equal edges may be substituted
``fillin``      fillins of universals, with their cone condition witnessed
``uniqueness``  two fillins with the same cone data are equal
``inverse``     comparison fillins between universals over equal data,
                or identities, are invertible
``fin-natural`` the list map of ``m`` respects a ``fin`` quotient

Commutativities are triangles ``(f, g, h)`` read as ``f ; g = h``.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, field
from functools import cached_property

KINDS = ("Terminal", "Initial", "Pullback", "Pushout", "List")

# fresh node roles and fresh edge roles per universal kind
_FRESH_NODE_ROLES = {"List": ("P",)}
_FRESH_EDGE_ROLES = {
    "Terminal": (),
    "Initial": (),
    "Pullback": ("p1", "p2"),
    "Pushout": ("i1", "i2"),
    "List": ("bang", "pa", "pl", "nil", "cons"),
}
_REF_ROLES = {
    "Terminal": (),
    "Initial": (),
    "Pullback": ("f", "g"),
    "Pushout": ("f", "g"),
    "List": ("A", "T", "bang_a"),
}


class KernelError(Exception):
    """Base class for kernel rejections; ``pos`` is a (line, col) when known."""

    def __init__(self, message, pos=None):
        super().__init__(message)
        self.message = message
        self.pos = pos

    def __str__(self):
        if self.pos is not None:
            return f"{self.pos[0]}:{self.pos[1]}: {type(self).__name__}: {self.message}"
        return f"{type(self).__name__}: {self.message}"


class FreshnessViolation(KernelError):
    pass


class DanglingReference(KernelError):
    pass


class MalformedUniversal(KernelError):
    pass


class UnjustifiedStep(KernelError):
    pass


def identity_name(node):
    return f"id({node})"


def _cached_hash(self):
    # steps and universals key many memo tables; hashing their fields every time shows up
    try:
        return self.__dict__["_hash"]
    except KeyError:
        h = hash((type(self).__name__,) + astuple(self))
        object.__setattr__(self, "_hash", h)
        return h


@dataclass(frozen=True)
class Universal:
    kind: str
    apex: str
    roles: tuple = ()

    __hash__ = _cached_hash

    @cached_property
    def _role_map(self):
        return dict(self.roles)

    def __getitem__(self, role):
        return self._role_map[role]

    def get(self, role, default=None):
        try:
            return self[role]
        except KeyError:
            return default

    @cached_property
    def fresh_nodes(self):
        return (self.apex,) + tuple(self[r] for r in _FRESH_NODE_ROLES.get(self.kind, ()))

    @cached_property
    def fresh_edges(self):
        return tuple(self[r] for r in _FRESH_EDGE_ROLES[self.kind])

    def companion(self):
        """The product universal a List universal carries for its cons domain."""
        assert self.kind == "List"
        return pullback(self["P"], self["bang_a"], self["bang"], self["pa"], self["pl"])

    def renamed(self, ren):
        return Universal(self.kind, ren(self.apex), tuple((r, ren(n)) for r, n in self.roles))


def terminal(apex):
    return Universal("Terminal", apex)


def initial(apex):
    return Universal("Initial", apex)


def pullback(apex, f, g, p1, p2):
    return Universal("Pullback", apex, (("f", f), ("g", g), ("p1", p1), ("p2", p2)))


def pushout(apex, f, g, i1, i2):
    return Universal("Pushout", apex, (("f", f), ("g", g), ("i1", i1), ("i2", i2)))


def list_universal(apex, A, T, bang_a, bang, P, pa, pl, nil, cons):
    return Universal(
        "List",
        apex,
        (("A", A), ("T", T), ("bang_a", bang_a), ("bang", bang), ("P", P),
         ("pa", pa), ("pl", pl), ("nil", nil), ("cons", cons)),
    )


# ---------------------------------------------------------------- steps


@dataclass(frozen=True)
class AddPrimitiveNode:
    name: str


@dataclass(frozen=True)
class AddPrimitiveEdge:
    name: str
    src: str
    tgt: str


@dataclass(frozen=True)
class AddUniversal:
    universal: Universal

    __hash__ = _cached_hash


@dataclass(frozen=True)
class AddCommutativity:
    f: str
    g: str
    h: str


@dataclass(frozen=True)
class AdjoinComposite:
    f: str
    g: str
    h: str
    rule: str = "composite"


@dataclass(frozen=True)
class DeduceCommutativity:
    f: str
    g: str
    h: str
    rule: str


@dataclass(frozen=True)
class DeclareFillin:
    """A fillin edge ``name`` for the universal at ``apex``.

    ``form`` is one of bang, absurd, pair, copair, rec, fin-natural and
    ``data`` holds the cone (role, item) pairs:
    bang (src), absurd (tgt), pair (x, y), copair (x, y),
    rec (B, base, step, and optionally Q, W for the parameterised form),
    fin-natural (x, y).
    """

    name: str
    apex: str
    form: str
    data: tuple = ()
    rule: str = "fillin"

    __hash__ = _cached_hash

    def get(self, role, default=None):
        for r, v in self.data:
            if r == role:
                return v
        return default


@dataclass(frozen=True)
class FillinUniqueness:
    e1: str
    e2: str
    rule: str = "uniqueness"


@dataclass(frozen=True)
class AdjoinInverse:
    name: str
    edge: str
    rule: str = "inverse"


EXTENSION_STEPS = (AddPrimitiveNode, AddPrimitiveEdge, AddUniversal, AddCommutativity)
EQUIV_STEPS = (AdjoinComposite, DeduceCommutativity, DeclareFillin, FillinUniqueness, AdjoinInverse)


def is_equiv_step(step):
    return isinstance(step, EQUIV_STEPS)


def rename_step(step, ren):
    """Apply ``ren`` to every item name a step mentions."""
    if isinstance(step, AddPrimitiveNode):
        return AddPrimitiveNode(ren(step.name))
    if isinstance(step, AddPrimitiveEdge):
        return AddPrimitiveEdge(ren(step.name), ren(step.src), ren(step.tgt))
    if isinstance(step, AddUniversal):
        return AddUniversal(step.universal.renamed(ren))
    if isinstance(step, (AddCommutativity,)):
        return AddCommutativity(ren(step.f), ren(step.g), ren(step.h))
    if isinstance(step, AdjoinComposite):
        return AdjoinComposite(ren(step.f), ren(step.g), ren(step.h), step.rule)
    if isinstance(step, DeduceCommutativity):
        return DeduceCommutativity(ren(step.f), ren(step.g), ren(step.h), step.rule)
    if isinstance(step, DeclareFillin):
        return DeclareFillin(ren(step.name), ren(step.apex), step.form,
                             tuple((r, ren(v)) for r, v in step.data), step.rule)
    if isinstance(step, FillinUniqueness):
        return FillinUniqueness(ren(step.e1), ren(step.e2), step.rule)
    if isinstance(step, AdjoinInverse):
        return AdjoinInverse(ren(step.name), ren(step.edge), step.rule)
    raise TypeError(step)


def introduced_items(step):
    """(nodes, edges) a step introduces, identities included."""
    if isinstance(step, AddPrimitiveNode):
        return (step.name,), (identity_name(step.name),)
    if isinstance(step, AddPrimitiveEdge):
        return (), (step.name,)
    if isinstance(step, AddUniversal):
        u = step.universal
        nodes = u.fresh_nodes
        return nodes, tuple(identity_name(n) for n in nodes) + u.fresh_edges
    if isinstance(step, (AdjoinComposite,)):
        return (), (step.h,)
    if isinstance(step, (DeclareFillin, AdjoinInverse)):
        return (), (step.name,)
    return (), ()


# ---------------------------------------------------------------- sketch


class Sketch:
    """Reflexive graph with commutativities and universals.

    Besides the invariant-bearing fields it keeps the bookkeeping the rule
    checker needs: fillin records, composite records and primitive marks.
    """

    def __init__(self):
        self.nodes = {}            # node -> None, insertion ordered
        self.edges = {}            # edge -> (src, tgt)
        self.identities = {}       # node -> identity edge
        self.comms = {}            # (f, g, h) -> None, insertion ordered
        self.universals = {}       # apex -> Universal (List companions under P)
        self.object_equalities = {}
        self.fillins = {}          # edge -> DeclareFillin
        self.composites = {}       # edge -> (f, g)
        self.inverses = {}         # edge -> inverted edge
        self.primitive_nodes = {}
        self.primitive_edges = {}

    def clone(self):
        s = Sketch.__new__(Sketch)
        for k, v in self.__dict__.items():
            s.__dict__[k] = dict(v)
        return s

    # plain accessors
    def src(self, e):
        return self.edges[e][0]

    def tgt(self, e):
        return self.edges[e][1]

    def is_identity(self, e):
        n = self.edges.get(e)
        return n is not None and self.identities.get(n[0]) == e

    def has_item(self, name):
        return name in self.nodes or name in self.edges

    def universal_of_kind(self, apex, kind):
        u = self.universals.get(apex)
        return u if u is not None and u.kind == kind else None

    def terminal_apexes(self):
        return [a for a, u in self.universals.items() if u.kind == "Terminal"]

    def structurally_equal(self, other):
        return all(getattr(self, k) == getattr(other, k) for k in self.__dict__)

    def __eq__(self, other):
        return isinstance(other, Sketch) and self.structurally_equal(other)

    __hash__ = None

    def summary(self):
        return {
            "nodes": list(self.nodes),
            "edges": {e: list(st) for e, st in self.edges.items()},
            "commutativities": [list(t) for t in self.comms],
            "universals": {a: {"kind": u.kind, **dict(u.roles)} for a, u in self.universals.items()},
            "object_equalities": sorted(self.object_equalities),
        }


def validate_sketch(s):
    """Return a list of invariant violations, empty when ``s`` is well formed."""
    out = []
    for e, (a, b) in s.edges.items():
        for end in (a, b):
            if end not in s.nodes:
                out.append(f"dangling endpoint: edge {e} mentions undeclared node {end}")
    for n in s.nodes:
        ids = [e for e in s.edges if s.edges[e] == (n, n) and s.identities.get(n) == e]
        if n not in s.identities or len(ids) != 1:
            out.append(f"missing identity: node {n} has no identity edge")
        elif s.identities[n] not in s.object_equalities:
            out.append(f"identity not an object equality: {s.identities[n]}")
    for n, e in s.identities.items():
        if n not in s.nodes:
            out.append(f"dangling identity: {e} for undeclared node {n}")
    for f, g, h in s.comms:
        if not all(x in s.edges for x in (f, g, h)):
            out.append(f"dangling commutativity: {f} ; {g} = {h}")
            continue
        if not _triangle_typed(s, f, g, h):
            out.append(f"ill-typed commutativity: {f} ; {g} = {h}")
    for apex, u in s.universals.items():
        try:
            _check_universal_shape(s, u, fresh=False)
        except KernelError as exc:
            out.append(f"malformed universal at {apex}: {exc.message}")
    for e in s.object_equalities:
        if e not in s.edges:
            out.append(f"dangling object equality: {e}")
    return out


def _triangle_typed(s, f, g, h):
    (fa, fb), (ga, gb), (ha, hb) = s.edges[f], s.edges[g], s.edges[h]
    return fb == ga and fa == ha and gb == hb


def _need_edge(s, e, what="edge"):
    if e not in s.edges:
        raise DanglingReference(f"unknown {what} {e}")
    return s.edges[e]


def _need_node(s, n):
    if n not in s.nodes:
        raise DanglingReference(f"unknown node {n}")


def _check_universal_shape(s, u, fresh):
    """Endpoint discipline for a universal; ``fresh`` demands fresh structure."""
    if u.kind not in KINDS:
        raise MalformedUniversal(f"unknown universal kind {u.kind}")
    for role in _REF_ROLES[u.kind] + _FRESH_EDGE_ROLES[u.kind] + _FRESH_NODE_ROLES.get(u.kind, ()):
        if u.get(role) is None:
            raise MalformedUniversal(f"{u.kind} at {u.apex} lacks role {role}")
    if fresh:
        names = list(u.fresh_nodes) + list(u.fresh_edges)
        if len(set(names)) != len(names):
            raise MalformedUniversal(f"repeated fresh names in {u.kind} at {u.apex}")
        for n in names:
            if s.has_item(n):
                raise FreshnessViolation(f"{n} already exists; universals are introduced only for fresh objects")
        env = dict(s.edges)
        nodes = set(s.nodes) | set(u.fresh_nodes)
    else:
        env = s.edges
        nodes = set(s.nodes)
        for n in u.fresh_nodes:
            if n not in nodes:
                raise MalformedUniversal(f"missing node {n}")

    def ends(e):
        if e in env:
            return env[e]
        raise DanglingReference(f"unknown edge {e}")

    if u.kind in ("Terminal", "Initial"):
        return
    if u.kind == "Pullback":
        (fa, fc), (gb, gc) = ends(u["f"]), ends(u["g"])
        if fc != gc:
            raise MalformedUniversal(f"pullback at {u.apex}: {u['f']} and {u['g']} have different targets")
        if not fresh:
            if ends(u["p1"]) != (u.apex, fa) or ends(u["p2"]) != (u.apex, gb):
                raise MalformedUniversal(f"pullback at {u.apex}: projections have wrong endpoints")
        return
    if u.kind == "Pushout":
        (fc, fa), (gc, gb) = ends(u["f"]), ends(u["g"])
        if fc != gc:
            raise MalformedUniversal(f"pushout at {u.apex}: {u['f']} and {u['g']} have different sources")
        if not fresh:
            if ends(u["i1"]) != (fa, u.apex) or ends(u["i2"]) != (gb, u.apex):
                raise MalformedUniversal(f"pushout at {u.apex}: injections have wrong endpoints")
        return
    # List
    A, T = u["A"], u["T"]
    for n in (A, T):
        if n not in nodes:
            raise DanglingReference(f"unknown node {n}")
    if s.universal_of_kind(T, "Terminal") is None:
        raise MalformedUniversal(f"list at {u.apex}: {T} is not a terminal")
    if ends(u["bang_a"]) != (A, T):
        raise MalformedUniversal(f"list at {u.apex}: {u['bang_a']} is not an edge {A} -> {T}")
    if not fresh:
        L, P = u.apex, u["P"]
        want = {"bang": (L, T), "pa": (P, A), "pl": (P, L), "nil": (T, L), "cons": (P, L)}
        for role, st in want.items():
            if ends(u[role]) != st:
                raise MalformedUniversal(f"list at {u.apex}: {role} has wrong endpoints")
        comp = s.universals.get(P)
        if comp is None or comp != u.companion():
            raise MalformedUniversal(f"list at {u.apex}: {P} is not registered as its product")


# ---------------------------------------------------------------- contexts


@dataclass(frozen=True)
class MacroRecord:
    """Provenance of a macro expansion: which steps it produced."""

    macro: str          # "fin-v1" or "finmap-v1"
    name: str           # the node/edge the macro defines
    args: tuple         # macro arguments (item names)
    prefix: str
    start: int          # index of its first step in the context log
    stop: int


@dataclass(frozen=True, eq=False)
class Context:
    name: str
    steps: tuple
    sketch: Sketch = field(repr=False)
    macros: tuple = ()
    positions: tuple = ()

    def __eq__(self, other):
        return (isinstance(other, Context) and self.steps == other.steps
                and self.macros == other.macros and self.sketch == other.sketch)

    __hash__ = object.__hash__

    @staticmethod
    def empty(name="EMPTY"):
        return Context(name, (), Sketch())

    def renamed(self, name):
        return Context(name, self.steps, self.sketch, self.macros, self.positions)

    def macro_for(self, name, macro=None):
        for rec in self.macros:
            if rec.name == name and (macro is None or rec.macro == macro):
                return rec
        return None

    def with_macro(self, rec):
        return Context(self.name, self.steps, self.sketch, self.macros + (rec,), self.positions)


def _apply_extension(s, step):
    if isinstance(step, AddPrimitiveNode):
        n = step.name
        if s.has_item(n) or s.has_item(identity_name(n)):
            raise FreshnessViolation(f"{n} already exists")
        _add_node(s, n)
        s.primitive_nodes[n] = None
    elif isinstance(step, AddPrimitiveEdge):
        if s.has_item(step.name):
            raise FreshnessViolation(f"{step.name} already exists")
        _need_node(s, step.src)
        _need_node(s, step.tgt)
        s.edges[step.name] = (step.src, step.tgt)
        s.primitive_edges[step.name] = None
    elif isinstance(step, AddUniversal):
        u = step.universal
        _check_universal_shape(s, u, fresh=True)
        for n in u.fresh_nodes:
            _add_node(s, n)
        if u.kind == "Pullback":
            s.edges[u["p1"]] = (u.apex, s.src(u["f"]))
            s.edges[u["p2"]] = (u.apex, s.src(u["g"]))
        elif u.kind == "Pushout":
            s.edges[u["i1"]] = (s.tgt(u["f"]), u.apex)
            s.edges[u["i2"]] = (s.tgt(u["g"]), u.apex)
        elif u.kind == "List":
            L, P, A, T = u.apex, u["P"], u["A"], u["T"]
            s.edges[u["bang"]] = (L, T)
            s.edges[u["pa"]] = (P, A)
            s.edges[u["pl"]] = (P, L)
            s.edges[u["nil"]] = (T, L)
            s.edges[u["cons"]] = (P, L)
            s.universals[P] = u.companion()
        s.universals[u.apex] = u
    elif isinstance(step, AddCommutativity):
        _add_triangle(s, step.f, step.g, step.h)
    else:
        raise TypeError(f"not an extension step: {step!r}")


def _add_node(s, n):
    s.nodes[n] = None
    idn = identity_name(n)
    s.edges[idn] = (n, n)
    s.identities[n] = idn
    s.object_equalities[idn] = None


def _add_triangle(s, f, g, h):
    for e in (f, g, h):
        _need_edge(s, e)
    if not _triangle_typed(s, f, g, h):
        raise DanglingReference(f"commutativity {f} ; {g} = {h} has mismatched endpoints")
    s.comms[(f, g, h)] = None


def extend(ctx, step, pos=None):
    """Append an extension step; the old context is untouched."""
    if not isinstance(step, EXTENSION_STEPS):
        raise TypeError(f"extend takes extension steps, got {type(step).__name__}")
    s = ctx.sketch.clone()
    try:
        _apply_extension(s, step)
    except KernelError as exc:
        exc.pos = exc.pos or pos
        raise
    return Context(ctx.name, ctx.steps + (step,), s, ctx.macros, ctx.positions + (pos,))


def extend_equiv(ctx, step, pos=None):
    """Append an equivalence step after checking its justification."""
    if not isinstance(step, EQUIV_STEPS):
        raise TypeError(f"extend_equiv takes equivalence steps, got {type(step).__name__}")
    s = ctx.sketch.clone()
    try:
        _apply_equiv(s, step, ctx)
    except KernelError as exc:
        exc.pos = exc.pos or pos
        raise
    return Context(ctx.name, ctx.steps + (step,), s, ctx.macros, ctx.positions + (pos,))


def apply_step(ctx, step, pos=None):
    if is_equiv_step(step):
        return extend_equiv(ctx, step, pos)
    return extend(ctx, step, pos)


def replay(steps, name="T", macros=()):
    ctx = Context(name, (), Sketch(), tuple(macros))
    for st in steps:
        ctx = apply_step(ctx, st)
    return Context(name, ctx.steps, ctx.sketch, tuple(macros), ctx.positions)


def primitive_items(ctx):
    s = ctx.sketch
    return set(s.primitive_nodes), set(s.primitive_edges)


# ---------------------------------------------------------------- justification


def _fresh_edge(s, name):
    if s.has_item(name):
        raise FreshnessViolation(f"{name} already exists")


def _apply_equiv(s, step, ctx):
    if isinstance(step, AdjoinComposite):
        f, g = step.f, step.g
        (fa, fb), (gb, gc) = _need_edge(s, f), _need_edge(s, g)
        _fresh_edge(s, step.h)
        if fb != gb:
            raise UnjustifiedStep(f"{f} and {g} are not composable")
        if step.rule == "unit" and not (s.is_identity(f) or s.is_identity(g)):
            raise UnjustifiedStep(f"unit law needs an identity among {f}, {g}")
        if step.rule not in ("unit", "composite"):
            raise UnjustifiedStep(f"rule {step.rule} does not justify a composite")
        s.edges[step.h] = (fa, gc)
        s.composites[step.h] = (f, g)
        s.comms[(f, g, step.h)] = None
    elif isinstance(step, DeduceCommutativity):
        for e in (step.f, step.g, step.h):
            _need_edge(s, e)
        if not _triangle_typed(s, step.f, step.g, step.h):
            raise UnjustifiedStep(f"{step.f} ; {step.g} = {step.h} is ill-typed")
        check = _DEDUCTION_RULES.get(step.rule)
        if check is None or not check(s, step.f, step.g, step.h):
            raise UnjustifiedStep(f"rule {step.rule!r} does not derive {step.f} ; {step.g} = {step.h}")
        s.comms[(step.f, step.g, step.h)] = None
    elif isinstance(step, DeclareFillin):
        _declare_fillin(s, step, ctx)
    elif isinstance(step, FillinUniqueness):
        _need_edge(s, step.e1)
        _need_edge(s, step.e2)
        if step.rule != "uniqueness" or not _same_fillin(s, step.e1, step.e2):
            raise UnjustifiedStep(f"{step.e1} and {step.e2} are not fillins with the same cone")
        a = s.src(step.e1)
        s.comms[(s.identities[a], step.e1, step.e2)] = None
    elif isinstance(step, AdjoinInverse):
        a, b = _need_edge(s, step.edge)
        _fresh_edge(s, step.name)
        if step.rule != "inverse" or not _invertible(s, step.edge):
            raise UnjustifiedStep(f"no invertibility justification derivable for {step.edge}")
        s.edges[step.name] = (b, a)
        s.inverses[step.name] = step.edge
        s.comms[(step.edge, step.name, s.identities[a])] = None
        s.comms[(step.name, step.edge, s.identities[b])] = None
    else:
        raise TypeError(step)


def _norm(s, e):
    seen = set()
    while e in s.composites and e not in seen:
        seen.add(e)
        f, g = s.composites[e]
        if s.is_identity(f):
            e = g
        elif s.is_identity(g):
            e = f
        else:
            break
    return e


def _rule_unit(s, f, g, h):
    if s.is_identity(f) and _norm(s, g) == _norm(s, h):
        return True
    if s.is_identity(g) and _norm(s, f) == _norm(s, h):
        return True
    return False


def _rule_assoc(s, f, v, h):
    comms = s.comms
    # f;g = u, u;k = h, g;k = v  |-  f;v = h
    for (a, g, u) in comms:
        if a != f:
            continue
        for (b, k, c) in comms:
            if b == u and c == h and (g, k, v) in comms:
                return True
    # f';g' = f, g';v = k', f';k' = h  |-  f;v = h
    for (f2, g2, u) in comms:
        if u != f:
            continue
        for (b, c, k2) in comms:
            if b == g2 and c == v and (f2, k2, h) in comms:
                return True
    return False


def _edge_classes(s):
    """Equivalence of edges generated by triangles ``id ; a = b``."""
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f, a, b in s.comms:
        if s.is_identity(f):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    return find


def _rule_congruence(s, f, g, h):
    find = _edge_classes(s)
    if s.is_identity(f):
        if find(g) == find(h):
            return True
        # composites are unique: x;y = g and x;y = h
        outs = {}
        for x, y, z in s.comms:
            outs.setdefault((x, y), set()).add(find(z))
        if any(find(g) in zs and find(h) in zs for zs in outs.values()):
            return True
    for x, y, z in s.comms:
        if find(x) == find(f) and find(y) == find(g) and find(z) == find(h):
            return True
    return False


_DEDUCTION_RULES = {"unit": _rule_unit, "assoc": _rule_assoc, "congruence": _rule_congruence}


def _equal_paths(s, x, f, y, g):
    """Evidence that ``x ; f = y ; g`` for the cone condition of a fillin."""
    if x == y and f == g:
        return True
    if s.universal_of_kind(s.tgt(f), "Terminal") is not None:
        return True
    if s.universal_of_kind(s.src(x), "Initial") is not None:
        return True
    for (a, b, w) in s.comms:
        if a == x and b == f and (y, g, w) in s.comms:
            return True
    # (x, y) are the projections of a pullback over (f, g)
    u = s.universal_of_kind(s.src(x), "Pullback")
    if u is not None and (u["p1"], u["p2"], u["f"], u["g"]) == (x, y, f, g):
        return True
    return False


def _is_product(s, apex, left, right):
    """``apex`` is a pullback over a terminal with projections to left, right."""
    u = s.universal_of_kind(apex, "Pullback")
    if u is None:
        return None
    if s.universal_of_kind(s.tgt(u["f"]), "Terminal") is None:
        return None
    if s.src(u["f"]) != left or s.src(u["g"]) != right:
        return None
    return u


def _declare_fillin(s, step, ctx):
    _fresh_edge(s, step.name)
    if step.rule != "fillin" and not (step.form == "fin-natural" and step.rule == "fin-natural"):
        raise UnjustifiedStep(f"rule {step.rule} does not justify a fillin")
    form, apex = step.form, step.apex
    _need_node(s, apex)
    u = s.universals.get(apex)
    need = {"bang": "Terminal", "absurd": "Initial", "pair": "Pullback",
            "copair": "Pushout", "rec": "List", "fin-natural": "Pushout"}.get(form)
    if need is None:
        raise UnjustifiedStep(f"unknown fillin form {form}")
    if u is None or u.kind != need:
        raise UnjustifiedStep(f"{apex} is not a {need} universal")
    d = step.get
    if form == "bang":
        z = d("src")
        _need_node(s, z)
        ends = (z, apex)
    elif form == "absurd":
        z = d("tgt")
        _need_node(s, z)
        ends = (apex, z)
    elif form == "pair":
        x, y = d("x"), d("y")
        (xz, xa), (yz, yb) = _need_edge(s, x), _need_edge(s, y)
        if xz != yz or xa != s.src(u["f"]) or yb != s.src(u["g"]):
            raise UnjustifiedStep(f"cone ({x}, {y}) does not fit pullback {apex}")
        if not _equal_paths(s, x, u["f"], y, u["g"]):
            raise UnjustifiedStep(f"cone condition {x} ; {u['f']} = {y} ; {u['g']} not derivable")
        ends = (xz, apex)
    elif form in ("copair", "fin-natural"):
        x, y = d("x"), d("y")
        (xa, xz), (yb, yz) = _need_edge(s, x), _need_edge(s, y)
        if xz != yz or xa != s.tgt(u["f"]) or yb != s.tgt(u["g"]):
            raise UnjustifiedStep(f"cocone ({x}, {y}) does not fit pushout {apex}")
        if form == "copair":
            if not _equal_paths(s, u["f"], x, u["g"], y):
                raise UnjustifiedStep(f"cocone condition {u['f']} ; {x} = {u['g']} ; {y} not derivable")
        elif not _fin_natural(s, ctx, apex, x, y):
            raise UnjustifiedStep(f"{x} is not a list map respecting the fin quotient {apex}")
        ends = (apex, xz)
    else:  # rec
        ends = _check_rec(s, u, step)
    s.edges[step.name] = ends
    s.fillins[step.name] = step
    if form == "pair":
        s.comms[(step.name, u["p1"], d("x"))] = None
        s.comms[(step.name, u["p2"], d("y"))] = None
        # comparison of two pullbacks over the same opspan is an object equality
        v = s.universal_of_kind(ends[0], "Pullback")
        if v is not None and (v["f"], v["g"], v["p1"], v["p2"]) == (u["f"], u["g"], d("x"), d("y")):
            s.object_equalities[step.name] = None
    elif form in ("copair", "fin-natural"):
        s.comms[(u["i1"], step.name, d("x"))] = None
        s.comms[(u["i2"], step.name, d("y"))] = None
        v = s.universal_of_kind(ends[1], "Pushout")
        if v is not None and (v["f"], v["g"], v["i1"], v["i2"]) == (u["f"], u["g"], d("x"), d("y")):
            s.object_equalities[step.name] = None
    elif form == "bang" and s.universal_of_kind(ends[0], "Terminal") is not None:
        s.object_equalities[step.name] = None
    elif form == "absurd" and s.universal_of_kind(ends[1], "Initial") is not None:
        s.object_equalities[step.name] = None


def _check_rec(s, u, step):
    """List recursion, plain (L -> B) or parameterised (Q = G x L -> B)."""
    d = step.get
    B, base, stp = d("B"), d("base"), d("step")
    _need_node(s, B)
    A, T, L = u["A"], u["T"], u.apex
    (b0, b1), (s0, s1) = _need_edge(s, base), _need_edge(s, stp)
    if b1 != B or s1 != B:
        raise UnjustifiedStep(f"recursion data {base}, {stp} must land in {B}")
    Q, W = d("Q"), d("W")
    if Q is None:
        if b0 != T:
            raise UnjustifiedStep(f"recursion base {base} must start at the terminal {T}")
        if _is_product(s, s0, A, B) is None:
            raise UnjustifiedStep(f"recursion step domain {s0} is not a product of {A} and {B}")
        return (L, B)
    _need_node(s, Q)
    _need_node(s, W)
    G = b0
    if _is_product(s, Q, G, L) is None:
        raise UnjustifiedStep(f"{Q} is not a product of {G} and {L}")
    wu = s.universal_of_kind(W, "Pullback")
    if wu is None or _is_product(s, W, G, s.src(wu["g"])) is None:
        raise UnjustifiedStep(f"{W} is not a product with first factor {G}")
    if _is_product(s, s.src(wu["g"]), A, B) is None:
        raise UnjustifiedStep(f"{W} second factor is not a product of {A} and {B}")
    if s0 != W:
        raise UnjustifiedStep(f"recursion step must start at {W}")
    return (Q, B)


def _same_fillin(s, e1, e2):
    if s.edges[e1] != s.edges[e2]:
        return False
    a, b = s.edges[e1]
    if s.universal_of_kind(b, "Terminal") is not None:
        return True
    if s.universal_of_kind(a, "Initial") is not None:
        return True
    u = s.universals.get(b)
    if u is not None and u.kind == "Pullback":
        p1, p2 = u["p1"], u["p2"]
        cones = {}
        for (f, g, h) in s.comms:
            if f in (e1, e2) and g in (p1, p2):
                cones.setdefault(f, {})[g] = h
        c1, c2 = cones.get(e1, {}), cones.get(e2, {})
        if p1 in c1 and p2 in c1 and c1 == c2:
            return True
    u = s.universals.get(a)
    if u is not None and u.kind == "Pushout":
        i1, i2 = u["i1"], u["i2"]
        cones = {}
        for (f, g, h) in s.comms:
            if g in (e1, e2) and f in (i1, i2):
                cones.setdefault(g, {})[f] = h
        c1, c2 = cones.get(e1, {}), cones.get(e2, {})
        if i1 in c1 and i2 in c1 and c1 == c2:
            return True
    r1, r2 = s.fillins.get(e1), s.fillins.get(e2)
    if r1 is not None and r2 is not None and r1.form == "rec" == r2.form:
        return (r1.apex, r1.data) == (r2.apex, r2.data)
    return False


def _invertible(s, e):
    if s.is_identity(e) or e in s.inverses:
        return True
    a, b = s.edges[e]
    if s.universal_of_kind(a, "Terminal") and s.universal_of_kind(b, "Terminal"):
        return True
    if s.universal_of_kind(a, "Initial") and s.universal_of_kind(b, "Initial"):
        return True
    rec = s.fillins.get(e)
    if rec is None:
        return False
    if rec.form == "pair":
        ua, ub = s.universal_of_kind(a, "Pullback"), s.universal_of_kind(b, "Pullback")
        if ua and ub and (ua["f"], ua["g"]) == (ub["f"], ub["g"]):
            return (rec.get("x"), rec.get("y")) == (ua["p1"], ua["p2"])
    if rec.form == "copair":
        ua, ub = s.universal_of_kind(a, "Pushout"), s.universal_of_kind(b, "Pushout")
        if ua and ub and (ua["f"], ua["g"]) == (ub["f"], ub["g"]):
            return (rec.get("x"), rec.get("y")) == (ub["i1"], ub["i2"])
    return False


def _is_nil(s, base, ulb):
    """``nil``, possibly reached from another terminal through its unique map."""
    if base == ulb["nil"]:
        return True
    bang, nil = s.composites.get(base, (None, None))
    r = s.fillins.get(bang)
    return nil == ulb["nil"] and r is not None and r.form == "bang" and r.apex == ulb["T"]


def _fin_natural(s, ctx, apex, x, y):
    """Recognise ``x = y = Lm ; q_B`` with ``Lm`` the list map of some ``m``."""
    if x != y:
        return False
    rec_a = ctx.macro_for(apex, "fin-v1")
    if rec_a is None or x not in s.composites:
        return False
    lm, q = s.composites[x]
    fin_b = s.tgt(q)
    rec_b = ctx.macro_for(fin_b, "fin-v1")
    if rec_b is None:
        return False
    ub = s.universals[fin_b]
    if q != ub["i1"]:
        return False
    la = rec_a.args[1]
    lb = rec_b.args[1]
    ulb = s.universals[lb]
    r = s.fillins.get(lm)
    if r is None or r.form != "rec" or r.apex != la or r.get("Q") is not None:
        return False
    if r.get("B") != lb or not _is_nil(s, r.get("base"), ulb):
        return False
    stp = r.get("step")
    if s.composites.get(stp, (None, None))[1] != ulb["cons"]:
        return False
    pp = s.composites[stp][0]
    pr = s.fillins.get(pp)
    if pr is None or pr.form != "pair" or pr.apex != ulb["P"]:
        return False
    prod = s.universal_of_kind(s.src(pp), "Pullback")
    if prod is None or pr.get("y") != prod["p2"]:
        return False
    head = s.composites.get(pr.get("x"))
    return head is not None and head[0] == prod["p1"]
