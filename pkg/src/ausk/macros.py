"""Versioned macro expansions used by the elaborator.

``fin-v1``     ``fin(A)``: the list object over A, list append by
               parameterised recursion, the adjacent-swap and duplicate
               relations on lists, and their coequalizer (a pushout of the
               reflexive relation legs).  The apex is the Kuratowski finite
               powerset of A.
``finmap-v1``  ``finmap(m)`` for ``m: A -> B``: the list map of ``m`` by
               recursion, then the induced map ``fin(A) -> fin(B)``.

Expansions are deterministic given the context they run in, so replaying a
declaration list reproduces the same steps.
"""

from __future__ import annotations

from . import sketch as K
from .sketch import (
    AddUniversal,
    AdjoinComposite,
    DeclareFillin,
    KernelError,
    MacroRecord,
    apply_step,
    identity_name,
)

FIN = "fin-v1"
FINMAP = "finmap-v1"


class MacroError(KernelError):
    pass


class _Builder:
    def __init__(self, ctx, pos):
        self.ctx = ctx
        self.pos = pos
        self.start = len(ctx.steps)

    @property
    def s(self):
        return self.ctx.sketch

    def step(self, st):
        self.ctx = apply_step(self.ctx, st, self.pos)

    def terminal(self, prefix):
        ts = self.s.terminal_apexes()
        if ts:
            return ts[0]
        name = prefix + "1"
        self.step(AddUniversal(K.terminal(name)))
        return name

    def initial(self, prefix):
        for a, u in self.s.universals.items():
            if u.kind == "Initial":
                return a
        name = prefix + "0"
        self.step(AddUniversal(K.initial(name)))
        return name

    def bang(self, prefix, X, T):
        s = self.s
        for e, rec in s.fillins.items():
            if rec.form == "bang" and rec.apex == T and rec.get("src") == X:
                return e
        for u in s.universals.values():
            if u.kind == "List" and u.apex == X and u["T"] == T:
                return u["bang"]
        name = f"{prefix}!{X}"
        self.step(DeclareFillin(name, T, "bang", (("src", X),)))
        return name

    def product(self, name, X, Y, T, prefix):
        bx, by = self.bang(prefix, X, T), self.bang(prefix, Y, T)
        p1, p2 = name + ".1", name + ".2"
        self.step(AddUniversal(K.pullback(name, bx, by, p1, p2)))
        return p1, p2

    def compose(self, name, f, g):
        self.step(AdjoinComposite(f, g, name))
        return name

    def pair(self, name, P, x, y):
        self.step(DeclareFillin(name, P, "pair", (("x", x), ("y", y))))
        return name

    def absurd(self, name, Z, X):
        self.step(DeclareFillin(name, Z, "absurd", (("tgt", X),)))
        return name

    def copair(self, name, Q, x, y):
        self.step(DeclareFillin(name, Q, "copair", (("x", x), ("y", y))))
        return name


def expand_fin(ctx, name, A, pos=None):
    """Expand ``node name = fin(A)``; returns the extended context."""
    if A not in ctx.sketch.nodes:
        raise K.DanglingReference(f"unknown node {A}", pos)
    if ctx.sketch.has_item(name):
        raise K.FreshnessViolation(f"{name} already exists", pos)
    b = _Builder(ctx, pos)
    n = name + "."
    T = b.terminal(n)
    bA = b.bang(n, A, T)
    L, P = n + "L", n + "P"
    cons = n + "cons"
    b.step(AddUniversal(K.list_universal(L, A, T, bA, n + "!L", P, n + "pa", n + "pl", n + "nil", cons)))
    idL = identity_name(L)
    # append: app((m, l)) = l ++ m, by recursion on l with parameter m
    LL = n + "LL"
    ll1, ll2 = b.product(LL, L, L, T, n)
    W = n + "W"
    w1, w2 = b.product(W, L, P, T, n)
    hstep = b.compose(n + "hstep", w2, cons)
    app = n + "app"
    b.step(DeclareFillin(app, L, "rec", (("B", L), ("base", idL), ("step", hstep), ("Q", LL), ("W", W))))
    # swap relation on A x (A x L):  [a, b | s]  vs  [b, a | s]
    AP = n + "AP"
    ap1, ap2 = b.product(AP, A, P, T, n)
    bs = b.compose(n + "bs", ap2, cons)
    k1 = b.pair(n + "k1", P, ap1, bs)
    t1 = b.compose(n + "t1", k1, cons)
    apl = b.compose(n + "apl", ap2, n + "pl")
    k2 = b.pair(n + "k2", P, ap1, apl)
    cas = b.compose(n + "cas", k2, cons)
    apa = b.compose(n + "apa", ap2, n + "pa")
    k3 = b.pair(n + "k3", P, apa, cas)
    u1 = b.compose(n + "u1", k3, cons)
    R1 = n + "R1"
    r1l, r1ap = b.product(R1, L, AP, T, n)
    r1t = b.compose(n + "r1t", r1ap, t1)
    x1 = b.pair(n + "x1", LL, r1t, r1l)
    s1 = b.compose(n + "s1", x1, app)
    r1u = b.compose(n + "r1u", r1ap, u1)
    y1 = b.pair(n + "y1", LL, r1u, r1l)
    s1b = b.compose(n + "s1b", y1, app)
    # duplicate relation on L x P:  p ++ [a, a | s]  vs  p ++ [a | s]
    k4 = b.pair(n + "k4", P, n + "pa", cons)
    t2 = b.compose(n + "t2", k4, cons)
    R2 = n + "R2"
    r2l, r2p = b.product(R2, L, P, T, n)
    r2t = b.compose(n + "r2t", r2p, t2)
    x2 = b.pair(n + "x2", LL, r2t, r2l)
    s2 = b.compose(n + "s2", x2, app)
    r2c = b.compose(n + "r2c", r2p, cons)
    y2 = b.pair(n + "y2", LL, r2c, r2l)
    s2b = b.compose(n + "s2b", y2, app)
    # reflexive relation R1 + R2 + L and its coequalizer as a pushout
    Z = b.initial(n)
    zr1 = b.absurd(n + "?R1", Z, R1)
    zr2 = b.absurd(n + "?R2", Z, R2)
    RR = n + "RR"
    b.step(AddUniversal(K.pushout(RR, zr1, zr2, RR + ".1", RR + ".2")))
    sig = b.copair(n + "sig", RR, s1, s2)
    tau = b.copair(n + "tau", RR, s1b, s2b)
    zrr = b.absurd(n + "?RR", Z, RR)
    zl = b.absurd(n + "?L", Z, L)
    RL = n + "RL"
    b.step(AddUniversal(K.pushout(RL, zrr, zl, RL + ".1", RL + ".2")))
    lhs = b.copair(n + "lhs", RL, sig, idL)
    rhs = b.copair(n + "rhs", RL, tau, idL)
    b.step(AddUniversal(K.pushout(name, lhs, rhs, n + "q", n + "q2")))
    rec = MacroRecord(FIN, name, (A, L, T), n, b.start, len(b.ctx.steps))
    return b.ctx.with_macro(rec)


def fin_record_for_base(ctx, A):
    for rec in ctx.macros:
        if rec.macro == FIN and rec.args[0] == A:
            return rec
    return None


def expand_finmap(ctx, name, m, pos=None):
    """Expand ``edge name = finmap(m)`` for an edge ``m: A -> B``."""
    s = ctx.sketch
    if m not in s.edges:
        raise K.DanglingReference(f"unknown edge {m}", pos)
    if s.has_item(name):
        raise K.FreshnessViolation(f"{name} already exists", pos)
    A, B = s.edges[m]
    ra, rb = fin_record_for_base(ctx, A), fin_record_for_base(ctx, B)
    if ra is None or rb is None:
        missing = A if ra is None else B
        raise MacroError(f"finmap({m}) needs fin({missing}) declared first", pos)
    b = _Builder(ctx, pos)
    n = name + "."
    LA, LB, T = ra.args[1], rb.args[1], rb.args[2]
    ub = s.universals[LB]
    pm1, pm2 = b.product(n + "Pm", A, LB, T, n)
    hd = b.compose(n + "hd", pm1, m)
    pp = b.pair(n + "pp", ub["P"], hd, pm2)
    stp = b.compose(n + "step", pp, ub["cons"])
    base = ub["nil"]
    TA = s.universals[LA]["T"]
    if TA != T:
        # the two list objects hang off different terminals (e.g. in an arrow context)
        base = b.compose(n + "nil", b.bang(n, TA, T), base)
    lm = n + "Lm"
    b.step(DeclareFillin(lm, LA, "rec", (("B", LB), ("base", base), ("step", stp))))
    qb = b.s.universals[rb.name]["i1"]
    k = b.compose(n + "k", lm, qb)
    b.step(DeclareFillin(name, ra.name, "fin-natural", (("x", k), ("y", k)), rule="fin-natural"))
    rec = MacroRecord(FINMAP, name, (m,), n, b.start, len(b.ctx.steps))
    return b.ctx.with_macro(rec)


def macro_items(ctx):
    """Items introduced inside macro expansions other than the defined name."""
    hidden = set()
    for rec in ctx.macros:
        for st in ctx.steps[rec.start:rec.stop]:
            nodes, edges = K.introduced_items(st)
            hidden.update(nodes)
            hidden.update(edges)
        hidden.discard(rec.name)
    return hidden
