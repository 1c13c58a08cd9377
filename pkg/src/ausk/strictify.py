"""Strict reindexing of models along AU-functors and the coherence isos.

``strictify`` replaces a model of an extension by the unique strict model
that agrees with it on the extension's primitive nodes and whose reduct is a
given strict model of the base.  Reindexing ``f*M`` is strictification of
``f.M`` over the extension of the empty context.  The isos ``Sigma_{f,H}(M) :
f*(MH) -> (f*M)H`` paste two strictification isos.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import semantics as S
from . import sketch as K
from .morphisms import extension_map, reduce_hom, reduce_model
from .serialize import hom_text, model_text


class NotAnExtensionMap(Exception):
    pass


class IsoMismatch(Exception):
    pass


EMPTY = K.Context.empty("EMPTY")


def empty_model(depth=S.DEFAULT_DEPTH):
    return S.Model(EMPTY, {}, {}, depth, {})


def inverse_hom(h):
    return S.ModelHom(h.cod, h.dom, {n: c.inverse() for n, c in h.comps.items()})


def homs_equal(a, b):
    return a.comps.keys() == b.comps.keys() and all(a.comps[n] == b.comps[n] for n in a.comps)


def _check_iso(h, s, what, skip=()):
    for n, c in h.comps.items():
        if n not in skip and not c.is_bijective():
            raise IsoMismatch(f"{what}: component at {n} is not invertible")
    denv, cenv = h.dom.env(), h.cod.env()
    for e in s.edges:
        if e in skip:
            continue
        if not S.natural_in(s, h.comps, denv, cenv, e):
            raise IsoMismatch(f"{what}: not natural in {e}")


def strictify(U, m1, m0s, phi0, check=True):
    """The unique strict ``m1s`` with an iso ``phi1 : m1s -> m1`` as in the four conditions.

    ``U`` is the reduct map of an extension ``T0 <= T1``; ``m1`` a model of
    ``T1``; ``m0s`` a strict model of ``T0`` and ``phi0 : m0s -> reduce(m1, U)``
    an iso.  Proceeds step by step over the extension: primitive nodes are
    kept, primitive edges are conjugated by the isos built so far, and
    universals get their canonical interpretation with the comparison as
    the iso component.
    """
    if not U.is_extension_map():
        raise NotAnExtensionMap(f"{U.name} is not the reduct map of an extension")
    T1, T0 = U.dom, U.cod
    if m1.ctx.steps != T1.steps or m0s.ctx.steps != T0.steps:
        raise IsoMismatch("models do not live over the extension's contexts")
    if check:
        if set(phi0.comps) != set(T0.sketch.nodes):
            raise IsoMismatch("phi0 must have a component on every base node")
        base = reduce_model(m1, U)
        key = ("phi0-ok", tuple(phi0.comps.items()), tuple(m0s.edges.values()), tuple(base.edges.values()))
        S._memo(key, lambda: _check_iso(S.ModelHom(m0s, base, phi0.comps), T0.sketch, "phi0") or True)
    s = T1.sketch
    depth = m1.depth
    env = m0s.env()
    target = m1.env()
    comps = dict(phi0.comps)
    for st in T1.steps[len(T0.steps):]:
        if isinstance(st, K.AddPrimitiveNode):
            X = target[st.name]
            env[st.name] = X
            env[K.identity_name(st.name)] = S.identity(X)
            comps[st.name] = S.identity(X)
        elif isinstance(st, K.AddPrimitiveEdge):
            a, b = st.src, st.tgt
            back = comps[b].inverse().graph
            fwd, e = comps[a].graph, target[st.name].graph
            graph = {}
            for x in env[a]:
                y = e.get(fwd.get(x))
                if y is not None and y in back:
                    graph[x] = back[y]
            env[st.name] = S.intern(S.SetMorph(env[a], env[b], graph))
        elif isinstance(st, K.AddUniversal):
            u = st.universal
            env.update(S.universal_step(T1, u, env, depth))
            comps.update(S.universal_component(u, s, env, target, comps))
        else:
            S._run_step(s, st, env, depth, {}, T1)
    m1s = S.Model(T1, {n: env[n] for n in s.nodes}, {e: env[e] for e in s.edges}, depth,
                  {a: "canonical" for a in s.universals})
    phi1 = S.ModelHom(m1s, m1, comps)
    if check:
        # on the base the components and structure maps are phi0's and m0s's
        base = T0.sketch
        _check_iso(phi1, s, "phi1", skip=set(base.nodes) | set(base.edges))
    return m1s, phi1


def strictify_from_empty(m1):
    """Strictify over the extension of the empty context."""
    U = extension_map(m1.ctx, EMPTY, "from-empty")
    return strictify(U, m1, empty_model(m1.depth), S.ModelHom(empty_model(m1.depth), empty_model(m1.depth), {}))


def reindex_with_iso(f, m):
    """``(f*M, phi)`` with ``phi : f*M -> f.M``."""
    fm = S.apply_functor(f, m)
    return strictify_from_empty(fm)


def reindex(f, m):
    return reindex_with_iso(f, m)[0]


def reindex_hom(f, psi):
    """``f*psi : f*M -> f*N`` for a homomorphism of strict models."""
    fm, phi_m = reindex_with_iso(f, psi.dom)
    fn, phi_n = reindex_with_iso(f, psi.cod)
    prim = K.primitive_items(psi.dom.ctx)[0]
    comps = {n: phi_m.comps[n].then(f.on_morph(psi.comps[n])).then(phi_n.comps[n].inverse()) for n in prim}
    return S.derive_components(psi.dom.ctx, fm, fn, comps, check=False)


def reindex_2cell(alpha, m):
    """``alpha*M : f0*M -> f1*M``, conjugating alpha's components by the strictification isos."""
    f0m, phi0 = reindex_with_iso(alpha.source, m)
    f1m, phi1 = reindex_with_iso(alpha.target, m)
    comps = {}
    for n, X in m.nodes.items():
        comps[n] = phi0.comps[n].then(alpha.component(X)).then(phi1.comps[n].inverse())
    return S.ModelHom(f0m, f1m, comps)


def verify_strict_composition(f0, f1, m):
    """``reindex(f1, reindex(f0, m))`` and ``reindex(f0 then f1, m)`` serialize identically."""
    a = reindex(f1, reindex(f0, m))
    b = reindex(S.Composite((f0, f1)), m)
    return model_text(a) == model_text(b)


# ---------------------------------------------------------------- Sigma


@dataclass(eq=False)
class SigmaCell:
    f: object
    H: object
    M: object
    iso: S.ModelHom = field(repr=False)

    def is_identity(self):
        return self.iso.dom.same(self.iso.cod) and self.iso.is_identity()


def sigma(f, H, M):
    """``Sigma_{f,H}(M) : f*(MH) -> (f*M)H`` for a strict model M of ``H.dom``."""
    MH = reduce_model(M, H)
    left, phi_a = reindex_with_iso(f, MH)              # f*(MH) -> f.(MH)
    fM, phi_b = reindex_with_iso(f, M)                 # f*M -> f.M
    right = reduce_model(fM, H)                        # (f*M)H
    fdotM = S.apply_functor(f, M)
    via = reduce_model(fdotM, H)                       # (f.M)H
    if not S.Model.same(via, phi_a.cod):
        raise IsoMismatch("f.(MH) and (f.M)H differ; f does not commute with reduction")
    phi_bH = reduce_hom(phi_b, H, right, via)          # (f*M)H -> (f.M)H
    comps = {n: phi_a.comps[n].then(phi_bH.comps[n].inverse()) for n in H.cod.sketch.nodes}
    return SigmaCell(f, H, M, S.ModelHom(left, right, comps))


# ---------------------------------------------------------------- cubical conditions


@dataclass
class GrayCheck:
    name: str
    passed: bool
    detail: str = ""


def _paste(*homs):
    out = homs[0]
    for h in homs[1:]:
        out = out.then(h)
    return out


def _same(a, b):
    return hom_text(a) == hom_text(b)


def _offending(a, b):
    for n in a.comps:
        if a.comps[n] != b.comps.get(n):
            return n
    return ""


def check_horizontal(f, H, K_, M):
    """``Sigma_{f,H;K}(M) = Sigma_{f,K}(MH) ; Sigma_{f,H}(M)K``."""
    from .morphisms import compose_maps
    HK = compose_maps(H, K_)
    whole = sigma(f, HK, M).iso
    first = sigma(f, K_, reduce_model(M, H)).iso
    s_h = sigma(f, H, M).iso
    second = reduce_hom(s_h, K_)
    rhs = _paste(first, second)
    ok = _same(whole, rhs)
    return GrayCheck("horizontal", ok, "" if ok else f"component {_offending(whole, rhs)}")


def check_vertical(f0, f1, H, M):
    """``Sigma_{f0 f1,H}(M) = f1*(Sigma_{f0,H}(M)) ; Sigma_{f1,H}(f0*M)``."""
    whole = sigma(S.Composite((f0, f1)), H, M).iso
    inner = reindex_hom(f1, sigma(f0, H, M).iso)
    outer = sigma(f1, H, reindex(f0, M)).iso
    rhs = _paste(inner, outer)
    ok = _same(whole, rhs)
    return GrayCheck("vertical", ok, "" if ok else f"component {_offending(whole, rhs)}")


def check_alpha(alpha, H, M):
    """``Sigma_{f0,H}(M) ; (alpha*M)H = alpha*(MH) ; Sigma_{f1,H}(M)``."""
    lhs = _paste(sigma(alpha.source, H, M).iso, reduce_hom(reindex_2cell(alpha, M), H))
    rhs = _paste(reindex_2cell(alpha, reduce_model(M, H)), sigma(alpha.target, H, M).iso)
    ok = _same(lhs, rhs)
    return GrayCheck("alpha", ok, "" if ok else f"component {_offending(lhs, rhs)}")


def check_beta(f, beta, M):
    """``Sigma_{f,H}(M) ; (f*M)beta = f*(M beta) ; Sigma_{f,H'}(M)`` for ``beta : H => H'``."""
    H, H2 = beta.source, beta.target
    fM = reindex(f, M)
    lhs = _paste(sigma(f, H, M).iso, beta.at(fM))
    rhs = _paste(reindex_hom(f, beta.at(M)), sigma(f, H2, M).iso)
    ok = _same(lhs, rhs)
    return GrayCheck("beta", ok, "" if ok else f"component {_offending(lhs, rhs)}")


@dataclass
class GrayReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def verify_gray(f, f2, alpha, H, H2, beta, M):
    """The cubical conditions on one configuration of cells.

    ``H : T0 -> T1`` and ``H2 : T1 -> T2`` are composable maps, ``f`` and
    ``f2`` functors, ``alpha : f => f2`` a transform and ``beta`` a 2-cell
    between maps out of ``T0``.
    """
    checks = [check_horizontal(f, H, H2, M), check_vertical(f, f2, H, M)]
    if alpha is not None:
        checks.append(check_alpha(alpha, H, M))
    if beta is not None:
        checks.append(check_beta(f, beta, M))
    return GrayReport(checks)
