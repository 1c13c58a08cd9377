import math
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from ausk import geometric as G
from ausk import semantics as S
from ausk import strictify as ST
from ausk.values import atom, kuratowski
from oracles import grd_point_subsets

a, b = atom("a"), atom("b")


@pytest.fixture(scope="module")
def gpt(grd):
    return G.compile_geometric(grd.extension("GRD_PT"))


def test_compile_ob_and_term(basic):
    assert G.compile_geometric(basic.extension("OB")).steps == [G.PrimitiveSort("X")]
    assert G.compile_geometric(basic.extension("TERM")).steps == []


def test_iso_compiles_to_two_quotients(basic):
    kinds = [type(s).__name__ for s in G.compile_geometric(basic.extension("ISO")).steps]
    assert kinds == ["PrimitiveSort", "FunctionalExtension", "FunctionalExtension",
                     "GeometricQuotient", "GeometricQuotient"]


def test_grd_pt_steps(gpt):
    kinds = [(type(s).__name__, getattr(s, "kind", None)) for s in gpt.steps]
    assert kinds == [("PrimitiveSort", None), ("FunctionalExtension", None),
                     ("GeometricQuotient", "monicity"), ("FunctionalExtension", None),
                     ("GeometricQuotient", "commutativity")]
    assert gpt.steps[1] == G.FunctionalExtension("m", G.Sort("F"), G.Sort("G"))
    # provenance points back at the context steps that produced each simple step
    steps = gpt.context.steps
    assert [type(steps[i]).__name__ for i in gpt.provenance] == [
        "AddPrimitiveNode", "AddPrimitiveEdge", "AddCommutativity", "AddPrimitiveEdge", "AddCommutativity"]


def test_normalize_shapes(basic, gpt):
    out = G.normalize(G.compile_geometric(basic.extension("ARR")))
    assert out == [G.Torsor("finite-sets", "Y"), G.Torsor("Fin(X*Y)", "f", G.Sort("X"), G.Sort("Y")),
                   G.Invert("f", "single-valued"), G.Invert("f", "total")]
    assert len(G.normalize(gpt)) == 1 + 3 + 1 + 3 + 1


def test_pullback_along_identity(gpt):
    H = G.identity_morphism(gpt.symbols, gpt)
    assert gpt.symbols == ("G", "R", "D", "lambda", "rho", "pi")
    assert G.pullback_gext(gpt, H).steps == gpt.steps


def test_instantiate_is_pullback_along_the_model(grd, gpt):
    m = grd.models["M3"]
    t = G.instantiate(gpt, m)
    pulled = G.pullback_gext(gpt, G.model_morphism(m))
    assert [type(s) for s in t.steps] == [type(s) for s in pulled.steps]
    assert t.unknowns == ("F", "m", "x")
    # only adjoined symbols stay free; base sorts and maps became constants
    for st_ in t.steps[1:]:
        c = st_.phi if isinstance(st_, G.GeometricQuotient) else st_.dom
        assert G.free_symbols(c) <= {"F", "m", "x"}
    assert t.steps[1].cod == G.Const(m.nodes["G"], "G")


@pytest.mark.parametrize("name,count,subsets", [("M1", 1, 1), ("M2", 3, 2), ("M3", 5, 3)])
def test_points_of_corpus_models(grd, gpt, name, count, subsets):
    pts = G.enumerate_points(G.instantiate(gpt, grd.models[name]))
    assert len(pts) == count
    assert len({frozenset(p.edges["m"].graph.values()) for p in pts}) == subsets
    assert all(S.check_model(p.ctx, p).strict for p in pts)


def test_points_of_term(basic):
    t = G.instantiate(G.compile_geometric(basic.extension("TERM")), ST.empty_model())
    assert len(G.enumerate_points(t)) == 1


def test_list_objects_are_not_finite():
    ev = G.Evaluator({"A": S.SetObj([a])}, {})
    with pytest.raises(G.NonFiniteConstruct):
        ev.obj(G.ListOf(G.Sort("A")))
    with pytest.raises(G.NonFiniteConstruct):
        ev.obj(G.Opaque("P"))


def test_fin_evaluates_to_kuratowski_subsets():
    ev = G.Evaluator({"A": S.SetObj([a, b])}, {})
    assert set(ev.obj(G.Fin(G.Sort("A")))) == {kuratowski(()), kuratowski((a,)), kuratowski((b,)), kuratowski((a, b))}


def test_normal_form_has_the_same_points(grd, gpt):
    for name in ("M1", "M2", "M3"):
        t = G.instantiate(gpt, grd.models[name])
        direct = {G.point_key(p.primitive_assignment()) for p in G.enumerate_points(t)}
        normal = {G.point_key(p.primitive_assignment()) for p in G.enumerate_points(t, normal=G.normal_instance(t))}
        assert direct == normal


def test_invert_order_does_not_matter(grd, gpt):
    t = G.instantiate(gpt, grd.models["M3"])
    nf = G.normal_instance(t)
    swapped = list(nf)
    for i, s in enumerate(nf):
        if isinstance(s, G.Invert) and s.reason == "single-valued":
            swapped[i], swapped[i + 1] = nf[i + 1], nf[i]
    assert swapped != nf
    key = lambda ps: Counter(G.point_key(p.primitive_assignment()) for p in ps)
    assert key(G.enumerate_points(t, normal=nf)) == key(G.enumerate_points(t, normal=swapped))


def _grd_model(grd, G_, R_, D_, lam, rho, pi):
    ctx = grd.context("GRD")
    fin = lambda X: [kuratowski(s) for k in range(len(X) + 1) for s in __import__("itertools").combinations(X, k)]
    FG = fin(G_)
    prims = {"G": G_, "R": R_, "D": D_,
             "lambda": {r: FG[i % len(FG)] for r, i in zip(R_, lam)},
             "rho": {d: FG[i % len(FG)] for d, i in zip(D_, rho)},
             "pi": {d: R_[i % len(R_)] for d, i in zip(D_, pi)} if R_ else {}}
    return S.eval_strict_model(ctx, prims)


@settings(max_examples=25, deadline=None)
@given(ng=st.integers(0, 3), nr=st.integers(0, 2), nd=st.integers(0, 2),
       lam=st.lists(st.integers(0, 7), min_size=2, max_size=2),
       rho=st.lists(st.integers(0, 7), min_size=2, max_size=2),
       pi=st.lists(st.integers(0, 1), min_size=2, max_size=2))
def test_points_match_subset_filter(grd, gpt, ng, nr, nd, lam, rho, pi):
    if nd and not nr:
        nd = 0
    Gs = [atom(x) for x in "ghk"[:ng]]
    m = _grd_model(grd, Gs, [atom(x) for x in "rs"[:nr]], [atom(x) for x in "de"[:nd]], lam, rho, pi)
    pts = G.enumerate_points(G.instantiate(gpt, m), bound=3, universe=("a", "b", "c"))
    images = Counter(frozenset(p.edges["m"].graph.values()) for p in pts)
    expected = grd_point_subsets(m)
    assert set(images) == expected
    # each allowed subset of size k is hit by every injective labelling from the universe
    for F, n in images.items():
        assert n == math.perm(3, len(F))
