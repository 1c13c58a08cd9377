import pytest

import oracles
from ausk import semantics as S
from ausk import sketch as K
from ausk import strictify as ST
from ausk.morphisms import extension_map, make_map, reduce_hom, reduce_model
from ausk.serialize import hom_text, model_text
from ausk.values import UNIT, atom, tag

a = atom("a")
Tt, Ts = S.Tagging("t"), S.Tagging("s")


def _from_empty(ctx):
    return extension_map(ctx, ST.EMPTY)


def test_strictify_terminal(basic):
    one = basic.models["One"]
    m1 = S.apply_functor(Tt, one)
    e = ST.empty_model()
    m1s, phi1 = ST.strictify(_from_empty(one.ctx), m1, e, S.ModelHom(e, e, {}))
    assert list(m1s.nodes["T"]) == [UNIT]
    assert phi1.comps["T"].graph == {UNIT: tag("t", UNIT)}


def test_strictify_grd_keeps_primitive_nodes(grd):
    ctx = grd.context("GRD")
    U = _from_empty(ctx)
    e = ST.empty_model()
    for name in ("M1", "M3"):
        m1 = S.apply_functor(Tt, grd.models[name])
        m1s, phi1 = ST.strictify(U, m1, e, S.ModelHom(e, e, {}))
        for n in ("G", "R", "D"):
            assert m1s.nodes[n] == m1.nodes[n]
            assert phi1.comps[n].is_identity()
        assert m1s.nodes["FinG"] != m1.nodes["FinG"]
        assert S.check_model(ctx, m1s).strict
        raw = {v for n in ("G", "R", "D") for v in grd.models[name].nodes[n]}
        universe = sorted(raw) + sorted(tag("t", v) for v in raw)
        sols = oracles.strictify_solutions(U, m1, e, S.ModelHom(e, e, {}), universe)
        assert len(sols) == 1 and sols[0][0].same(m1s) and sols[0][1].same(phi1)


def test_diagonal_is_not_an_extension_map(counter):
    delta = counter.maps["Delta"]
    m = counter.models["Pair"]
    with pytest.raises(ST.NotAnExtensionMap):
        ST.strictify(delta, m, m, S.identity_hom(m))


def test_reindex_examples(basic):
    fm = ST.reindex(Tt, basic.models["Ma"])
    assert list(fm.nodes["X"]) == [tag("t", a)]
    assert list(ST.reindex(Tt, basic.models["One"]).nodes["T"]) == [UNIT]


@pytest.mark.parametrize("name", ["PROD", "ISO", "LOOP", "PRODX"])
def test_reindex_is_strict_and_keeps_primitive_nodes(basic, name):
    for m in S.enumerate_strict_models(basic.context(name)):
        for f in (Tt, basic.functors["Tst"]):
            fm = ST.reindex(f, m)
            assert S.check_model(m.ctx, fm).strict
            for n in K.primitive_items(m.ctx)[0]:
                assert fm.nodes[n] == f.on_obj(m.nodes[n])


def test_reindex_2cell(basic):
    Ma = basic.models["Ma"]
    assert ST.reindex_2cell(S.NatTransform(Tt, Tt), Ma).is_identity()
    h = ST.reindex_2cell(S.NatTransform(Ts, Tt), Ma)
    assert h.comps["X"].graph == {tag("s", a): tag("t", a)}


def test_sigma_on_extension_maps(basic, grd):
    maps = [basic.maps[n] for n in basic.extensions] + [grd.maps["GRD_PT"]]
    for H in maps:
        models = S.enumerate_strict_models(H.dom)[::400] if H.name == "GRD_PT" else S.enumerate_strict_models(H.dom)
        for M in models:
            for f in (Tt, basic.functors["Tst"]):
                cell = ST.sigma(f, H, M)
                assert cell.is_identity()
                left = ST.reindex(f, reduce_model(M, H))
                right = reduce_model(ST.reindex(f, M), H)
                assert model_text(left) == model_text(right)


def test_sigma_on_pick_terminal(counter):
    cell = ST.sigma(Tt, counter.maps["pickT"], counter.models["One"])
    assert not cell.is_identity()
    assert cell.iso.comps["X"].graph == {tag("t", UNIT): UNIT}
    assert ST.sigma(S.Identity(), counter.maps["pickT"], counter.models["One"]).is_identity()


def test_sigma_on_inverse_equivalence(basic):
    loop = basic.context("LOOP")
    base = K.replay(loop.steps[:2], "LOOP0")
    items = {n: n for n in loop.sketch.nodes}, {e: e for e in loop.sketch.edges}
    H = make_map("back", base, loop, loop.steps[2:], *items)
    for M in S.enumerate_strict_models(base):
        cell = ST.sigma(Tt, H, M)
        assert cell.is_identity()
        assert model_text(ST.reindex(Tt, reduce_model(M, H))) == model_text(reduce_model(ST.reindex(Tt, M), H))


def test_sigma_is_natural(basic):
    H = basic.maps["pXX"]
    models = S.enumerate_strict_models(H.dom)
    checked = 0
    for M in models:
        for N in models:
            for psi in S.enumerate_homomorphisms(M.ctx, M, N):
                left = ST.sigma(Tt, H, M).iso.then(reduce_hom(ST.reindex_hom(Tt, psi), H))
                right = ST.reindex_hom(Tt, reduce_hom(psi, H)).then(ST.sigma(Tt, H, N).iso)
                assert hom_text(left) == hom_text(right)
                checked += 1
    assert checked > 10


def test_strict_composition_examples(basic, grd):
    Ma = basic.models["Ma"]
    assert ST.verify_strict_composition(S.Identity(), S.Identity(), Ma)
    assert ST.verify_strict_composition(Ts, Tt, Ma)
    twice = ST.reindex(Tt, ST.reindex(Ts, Ma))
    assert list(twice.nodes["X"]) == [tag("t", tag("s", a))]
    assert ST.verify_strict_composition(Tt, S.Identity(), grd.models["M3"])


def test_gray_examples(basic):
    one, pickT = basic.models["One"], basic.maps["pickT"]
    idt = basic.maps["idOB"]
    rep = ST.verify_gray(S.Identity(), S.Identity(), None, pickT, idt, None, one)
    assert rep.passed
    rep = ST.verify_gray(Ts, Tt, S.NatTransform(Ts, Tt), pickT, idt, None, one)
    assert rep.passed and [c.name for c in rep.checks] == ["horizontal", "vertical", "alpha"]
