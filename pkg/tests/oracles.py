"""Brute-force oracles shared by the tests.

They deliberately avoid the constructions under test: candidate models are
searched over, never built by conjugation or by reading off an answer.
"""

import itertools
from collections import Counter

from ausk import semantics as S
from ausk import sketch as K


def bijections(A, B):
    A, B = list(A), list(B)
    if len(A) != len(B):
        return
    for perm in itertools.permutations(B):
        yield S.SetMorph(S.SetObj(A), S.SetObj(B), dict(zip(A, perm)))


_SQUARES = {}


def _natural(env, target, comps, s, e):
    a, b = s.edges[e]
    if a not in comps or b not in comps:
        return True
    key = (comps[a], comps[b], target[e], env[e])
    if key not in _SQUARES:
        _SQUARES[key] = _square(*key)
    return _SQUARES[key]


def _square(ca, cb, te, me):
    ca, cb, te, me = ca.graph, cb.graph, te.graph, me.graph
    for x, y in me.items():
        u, v = cb.get(y), te.get(ca.get(x))
        if u is not None and v is not None and u != v:
            return False
    return True


def isomorphs(ctx, target, start_env, start_comps, start, node_options, keep=None):
    """All (strict model, iso to ``target``) pairs reachable from a partial state.

    ``node_options(X)`` lists candidate sets for a primitive node; every
    bijection onto the target's set is tried unless ``keep`` rejects it.
    Conditions on the answer that only concern primitive components can be
    passed as ``keep``; the answers are the same, found sooner.  Primitive
    edges range over all functions.  Universals are interpreted canonically and their iso
    components are the comparison maps (unique when they exist).
    """
    s = ctx.sketch
    depth = target.depth
    tenv = target.env()
    out = []
    # edges whose naturality no step below checks; identities are natural anyway
    checked = {K.identity_name(n) for n in s.nodes}
    for st in ctx.steps[start:]:
        if isinstance(st, K.AddPrimitiveEdge):
            checked.add(st.name)
        elif isinstance(st, K.AddUniversal):
            checked.update(st.universal.fresh_edges)
    late = [e for e in s.edges if e not in checked and e not in start_env]

    def go(i, env, comps, base):
        env, comps = dict(env), dict(comps)      # owned by this branch
        while i < len(ctx.steps):
            st = ctx.steps[i]
            if isinstance(st, K.AddPrimitiveNode):
                for cand in node_options(st.name):
                    for bij in bijections(cand, tenv[st.name]):
                        if keep is not None and not keep(st.name, bij):
                            continue
                        X = S.intern(S.SetObj(cand))
                        env[st.name] = X
                        env[K.identity_name(st.name)] = S.identity(X)
                        comps[st.name] = S.intern(S.SetMorph(X, tenv[st.name], bij.graph))
                        go(i + 1, env, comps, base)
                return
            if isinstance(st, K.AddPrimitiveEdge):
                for f in S.all_functions(env[st.src], env[st.tgt]):
                    env[st.name] = S.intern(f)
                    if _natural(env, tenv, comps, s, st.name):
                        go(i + 1, env, comps, base)
                return
            try:
                if isinstance(st, K.AddUniversal):
                    u = st.universal
                    env.update(S.universal_step(ctx, u, env, depth))
                    comps.update(S.universal_component(u, s, env, tenv, comps))
                    if not all(comps[n].is_bijective() for n in u.fresh_nodes):
                        return
                    if not all(_natural(env, tenv, comps, s, e) for e in u.fresh_edges):
                        return
                else:
                    S._run_step(s, st, env, depth, {}, ctx)
            except (S.CommutativityViolation, S.TypeMismatch):
                return
            i += 1
        # the starting state is assumed to be an iso on the base already
        if all(_natural(env, tenv, comps, s, e) for e in late) and \
                all(c.is_bijective() for n, c in comps.items() if n not in base):
            m = S.Model(ctx, {n: env[n] for n in s.nodes}, {e: env[e] for e in s.edges}, depth,
                        {a: "canonical" for a in s.universals})
            out.append((m, S.ModelHom(m, target, comps)))

    go(start, start_env, start_comps, set(start_env))
    return out


def strictify_solutions(U, m1, m0s, phi0, universe, early=True):
    """Every (m1s, phi1) meeting the four strictification conditions, by search."""
    from ausk.morphisms import reduce_model
    T1, T0 = U.dom, U.cod

    def options(X):
        k = len(m1.nodes[X])
        return [c for c in itertools.combinations(universe, k)]

    pn = K.primitive_items(T1)[0]
    ext_prims = [n for n in pn if n not in T0.sketch.nodes]
    keep = (lambda X, bij: bij.is_identity()) if early else None
    cands = isomorphs(T1, m1, m0s.env(), phi0.comps, len(T0.steps), options, keep)
    sols = []
    for m, phi in cands:
        if not reduce_model(m, U).same(m0s):
            continue
        if any(phi.comps[n] != phi0.comps[n] for n in T0.sketch.nodes):
            continue
        if not all(phi.comps[n].is_identity() for n in ext_prims):
            continue
        sols.append((m, phi))
    return sols


def strict_isomorphs(m):
    """Strict models agreeing with ``m`` on primitive nodes, with an iso that is the identity there."""
    ctx = m.ctx
    cands = isomorphs(ctx, m, {}, {}, 0, lambda X: [tuple(m.nodes[X])], lambda X, bij: bij.is_identity())
    return [(n, phi) for n, phi in cands
            if all(phi.comps[x].is_identity() for x in K.primitive_items(ctx)[0])]


# ---------------------------------------------------------------- equivalence steps


def _index(f):
    inv = {}
    for x, y in f.graph.items():
        inv.setdefault(y, set()).add(x)
    return inv


def _triangle_candidates(e, x, tris, env, idx):
    """Values allowed for ``e(x)`` by each new triangle; None marks truncation."""
    cands = None
    for f, g, h in tris:
        if (f, g, h).count(e) > 1:
            raise NotImplementedError(f"{e} occurs twice in a triangle")
        if e == f:
            hv = env[h].get(x)
            c = None if hv is None else idx(g).get(hv, set())
        elif e == g:
            c = set()
            for x2, y2 in env[f].graph.items():
                if y2 == x:
                    hv = env[h].get(x2)
                    if hv is None:
                        c = None
                        break
                    c.add(hv)
            if c is not None and len(c) == 0:
                continue                     # no constraint from an empty fibre
        else:
            fv = env[f].get(x)
            gv = None if fv is None else env[g].get(fv)
            c = None if gv is None else {gv}
        if c is None:
            return None
        cands = set(c) if cands is None else cands & c
    return cands


def _pairs(s, apex, env):
    u = s.universals[apex]
    p1, p2 = env[u["p1"]], env[u["p2"]]
    return {(p1.graph[z], p2.graph[z]): z for z in p1.dom}


def _rec_candidates(s, st, env):
    """Values forced by the recursion equations, shortest lists first."""
    u = s.universals[st.apex]
    L = env[st.apex]
    nil, cons = env[u["nil"]], env[u["cons"]]
    pa, pl = env[u["pa"]], env[u["pl"]]
    base, step = env[st.get("base")], env[st.get("step")]
    S_ = s.src(st.get("step"))
    ab = _pairs(s, S_, env) if st.get("W") is None else _pairs(s, s.src(s.universals[S_]["g"]), env)
    nil_of = {v: t for t, v in nil.graph.items()}
    cons_of = {v: z for z, v in cons.graph.items()}
    if st.get("W") is None:
        points = [(None, l) for l in L]
        dom = {(None, l): l for l in L}
    else:
        q = s.universals[st.get("Q")]
        q1, q2 = env[q["p1"]], env[q["p2"]]
        dom = {(q1.graph[z], q2.graph[z]): z for z in q1.dom}
        points = list(dom)
        w_of = _pairs(s, S_, env)
    val = {}
    for g, l in sorted(points, key=lambda p: len(p[1][1])):
        if l in nil_of:
            y = base.get(nil_of[l] if g is None else g)
        else:
            z = cons_of.get(l)
            prev = None if z is None else val.get((g, pl.graph[z]))
            w = None if prev is None else ab.get((pa.graph[z], prev))
            if w is not None and g is not None:
                w = w_of.get((g, w))
            y = None if w is None else step.get(w)
        val[(g, l)] = y
    return {dom[p]: (None if y is None else {y}) for p, y in val.items()}


def extension_candidates(pre, post, st, env):
    """For each edge ``st`` adds: point -> set of admissible values (None: truncated)."""
    s = post.sketch
    new_edges = [e for e in s.edges if e not in pre.sketch.edges]
    tris = [t for t in s.comms if t not in pre.sketch.comms]
    out = {}
    for e in new_edges:
        a, b = s.edges[e]
        if isinstance(st, K.DeclareFillin) and st.form == "rec":
            out[e] = _rec_candidates(s, st, env)
            continue
        mine = [t for t in tris if e in t]
        per = {}
        indexes = {}

        def idx(g):
            if g not in indexes:
                indexes[g] = _index(env[g])
            return indexes[g]

        for x in env[a]:
            c = _triangle_candidates(e, x, mine, env, idx)
            per[x] = set(env[b]) if c is None and not mine else c
        out[e] = per
    return out, tris


def check_conservative(pre, post, st, model):
    """The equivalence step ``st`` extends ``model`` (of ``post``) in exactly one way.

    Returns a list of problems; empty means the restriction of ``model`` to
    ``pre`` has exactly one extension, and it is ``model``.
    """
    env = model.env()
    cands, tris = extension_candidates(pre, post, st, env)
    problems = []
    for e, per in cands.items():
        a, b = post.sketch.edges[e]
        truncated = not (env[a].complete and env[b].complete)
        for x, c in per.items():
            have = env[e].get(x)
            if c is None or not c:
                if not truncated:
                    problems.append(f"{e} has no value at {x}")
                elif have is not None and c is not None:
                    problems.append(f"{e} defined at {x} where no value fits")
            elif len(c) > 1:
                problems.append(f"{e} not determined at {x}: {len(c)} values")
            elif have != next(iter(c)):
                problems.append(f"{e} at {x} is not the forced value")
    if not cands:
        for f, g, h in tris:
            for x, y in env[f].graph.items():
                z, w = env[g].get(y), env[h].get(x)
                if z is not None and w is not None and z != w:
                    problems.append(f"{f} ; {g} = {h} fails at {x}")
    return problems


def _mentioned(pre, post, st):
    s = post.sketch
    items = set()
    for t in s.comms:
        if t not in pre.sketch.comms:
            items.update(t)
    for e in s.edges:
        if e not in pre.sketch.edges:
            items.update(s.edges[e])
    if isinstance(st, K.DeclareFillin):
        items.add(st.apex)
        items.update(v for _, v in st.data)
        for n in list(items):
            u = s.universals.get(n)
            if u is not None:
                items.update(v for _, v in u.roles)
        if st.form == "rec":
            S_ = s.src(st.get("step"))
            for n in (S_, s.src(s.universals[S_]["g"])):
                u = s.universals.get(n)
                if u is not None:
                    items.update(v for _, v in u.roles)
    items.update(e for e in list(items) if e in s.edges)
    for e in list(items):
        if e in s.edges:
            items.update(s.edges[e])
    return sorted(i for i in items if i in pre.sketch.nodes or i in pre.sketch.edges or i in s.edges)


def _restrict(model, ctx):
    s = ctx.sketch
    return S.Model(ctx, {n: model.nodes[n] for n in s.nodes}, {e: model.edges[e] for e in s.edges}, model.depth)


def _prims(model):
    return frozenset(model.primitive_assignment().items())


def conservativity_sweep(contexts, universe=("a", "b"), bound=2):
    """Check every equivalence step of ``contexts`` over all strict models at ``bound``.

    Steps shared by several contexts (same prefix) are checked once.  Returns
    (steps checked, (step, model) pairs checked, problems).
    """
    seen = set()
    n_steps = n_pairs = 0
    problems = []
    for ctx in contexts:
        steps = ctx.steps
        cache = {}

        def models_at(k):
            """Strict models of the k-step prefix with their environments and primitive keys."""
            if k not in cache:
                ms = S.enumerate_strict_models(K.replay(steps[:k], ctx.name, ctx.macros), universe, bound)
                cache[k] = [(m, m.env(), _prims(m)) for m in ms]
            return cache[k]

        for i, st in enumerate(steps):
            if not K.is_equiv_step(st) or steps[:i + 1] in seen:
                continue
            seen.add(steps[:i + 1])
            pre = K.replay(steps[:i], ctx.name, ctx.macros)
            post = K.replay(steps[:i + 1], ctx.name, ctx.macros)
            # the run of steps around i adding no primitives and no constraints
            j = i
            while j > 0 and not isinstance(steps[j - 1], (K.AddPrimitiveNode, K.AddPrimitiveEdge, K.AddCommutativity)):
                j -= 1
            k = i + 1
            while k < len(steps) and not isinstance(steps[k], (K.AddPrimitiveNode, K.AddPrimitiveEdge, K.AddCommutativity)):
                k += 1
            full = models_at(k)
            start = models_at(j)
            if Counter(p for _, _, p in full) != Counter(p for _, _, p in start):
                problems.append(f"{ctx.name} step {i}: models do not extend along the run")
            refs = _mentioned(pre, post, st)
            memo = {}
            restricted = set()
            for m, env, prims in full:
                key = tuple(env[r] for r in refs)
                if key not in memo:
                    memo[key] = check_conservative(pre, post, st, _restrict(m, post))
                for p in memo[key]:
                    problems.append(f"{ctx.name} step {i} ({type(st).__name__}): {p}")
                restricted.add(prims)
                n_pairs += 1
            if len(restricted) != len(full):
                problems.append(f"{ctx.name} step {i}: restriction is not injective")
            n_steps += 1
    return n_steps, n_pairs, problems


def grd_point_subsets(m):
    """Subsets F of G such that every relation whose premise lies in F has a disjunct in F.

    Works on the raw model: a Kuratowski value is inside F exactly when it
    is the finite subset value of some subset of F.
    """
    from ausk.values import kuratowski
    G = list(m.nodes["G"])
    lam, rho, pi = m.edges["lambda"], m.edges["rho"], m.edges["pi"]
    out = set()
    for k in range(len(G) + 1):
        for F in itertools.combinations(G, k):
            inside = {kuratowski(T) for j in range(k + 1) for T in itertools.combinations(F, j)}
            if all(lam(r) not in inside or any(pi(d) == r and rho(d) in inside for d in m.nodes["D"])
                   for r in m.nodes["R"]):
                out.add(frozenset(F))
    return out
