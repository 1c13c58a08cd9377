import pytest

from ausk import semantics as S
from ausk import sketch as K
from ausk.morphisms import (BoundaryMismatch, PreservationViolation, arrow_context, check_homomorphism,
                            compose_maps, degeneracy, identity_map, make_map, maps_equal, reduce_model,
                            split_arrow_model, two_cell, vertical_compose)


def test_identity_homomorphism(basic):
    ob = basic.context("OB")
    h = check_homomorphism({"X": "X"}, {}, ob, ob)
    assert h.node_map == {"X": "X"} and h.edge_map == {K.identity_name("X"): K.identity_name("X")}


def test_generic_object_to_terminal(basic):
    h = check_homomorphism({"X": "T"}, {}, basic.context("OB"), basic.context("TERM"))
    assert h.node_map["X"] == "T"


def test_universal_apex_must_go_to_an_apex(basic):
    with pytest.raises(PreservationViolation):
        check_homomorphism({"T": "X"}, {}, basic.context("TERM"), basic.context("OB"))
    with pytest.raises(PreservationViolation):
        check_homomorphism({"X": "X", "T": "X", "XX": "X"}, {}, basic.context("PROD"), basic.context("OB"))


def test_identity_then_map(basic):
    for name in ("Delta", "pickT", "projY", "pXX"):
        H = basic.maps[name]
        assert maps_equal(compose_maps(identity_map(H.dom), H), H)
        assert maps_equal(compose_maps(H, identity_map(H.cod)), H)


def test_diagonal_then_projection(basic):
    ob = basic.context("OB")
    both = compose_maps(basic.maps["Delta"], basic.maps["proj1"])
    assert maps_equal(both, identity_map(ob))
    assert maps_equal(both, basic.maps["idOB"])


def test_plain_composite_has_no_equivalence_steps(basic):
    both = compose_maps(basic.maps["Delta"], basic.maps["proj2"])
    assert both.equiv_steps == ()
    assert both.hom.node_map == {"X": "X"}


def test_projections_differ(basic):
    verdict = maps_equal(basic.maps["proj1"], basic.maps["proj2"], ("a",), 1)
    assert not verdict
    w = verdict.witness
    assert w.nodes["X1"] != w.nodes["X2"]
    assert maps_equal(basic.maps["proj1"], basic.maps["proj1"])


def test_composition_is_associative(basic):
    D, p1, p2, i = (basic.maps[n] for n in ("Delta", "proj1", "proj2", "idOB"))
    for a, b, c in [(D, p1, D), (D, p2, i), (i, D, p2)]:
        assert maps_equal(compose_maps(compose_maps(a, b), c), compose_maps(a, compose_maps(b, c)))


def test_reduction_preserves_strictness(basic):
    for H in basic.maps.values():
        for m in S.enumerate_strict_models(H.dom):
            assert S.check_model(H.cod, reduce_model(m, H)).strict


def test_arrow_of_ob(basic):
    A = arrow_context(basic.context("OB"))
    s = A.ctx.sketch
    assert list(s.nodes) == ["X_0", "X_1"]
    assert s.edges["h_X"] == ("X_0", "X_1")
    assert K.primitive_items(A.ctx) == ({"X_0", "X_1"}, {"h_X"})


def test_arrow_of_empty():
    A = arrow_context(K.Context.empty())
    assert A.ctx.steps == () and not A.ctx.sketch.nodes


def test_arrow_of_arr_has_a_naturality_square(basic):
    A = arrow_context(basic.context("ARR"))
    s = A.ctx.sketch
    assert ("f_0", "h_Y", "h_f") in s.comms
    for m in S.enumerate_strict_models(A.ctx, ("a",), 1):
        M, N, hom = split_arrow_model(A, m)
        assert S.derive_components(M.ctx, M, N, hom.comps) is not None


def test_degeneracy_is_a_section(basic):
    for name in ("OB", "ARR", "OB2"):
        ctx = basic.context(name)
        A = arrow_context(ctx)
        deg = degeneracy(A)
        cell = two_cell(deg, A)
        assert maps_equal(cell.source, identity_map(ctx))
        assert maps_equal(cell.target, identity_map(ctx))


def _iso_cells(basic):
    iso = basic.context("ISO")
    A = arrow_context(basic.context("OB"))
    idn = K.identity_name

    def cell(name, x0, x1, h):
        nm = {"X_0": x0, "X_1": x1}
        em = {idn("X_0"): idn(x0), idn("X_1"): idn(x1), "h_X": h}
        return two_cell(make_map(name, iso, A.ctx, (), nm, em), A)
    return A, cell("alpha", "X", "Y", "f"), cell("beta", "Y", "X", "g")


def test_iso_cell_then_inverse_is_identity(basic):
    A, alpha, beta = _iso_cells(basic)
    assert maps_equal(alpha.source, basic.maps["projX"])
    assert maps_equal(alpha.target, basic.maps["projY"])
    both = vertical_compose(alpha, beta)
    ident = two_cell(compose_maps(basic.maps["projX"], degeneracy(A)), A)
    assert maps_equal(both.map, ident.map)
    for m in S.enumerate_strict_models(alpha.map.dom):
        assert both.at(m).is_identity()


def test_vertical_compose_mismatch(basic):
    A, alpha, beta = _iso_cells(basic)
    with pytest.raises(BoundaryMismatch):
        vertical_compose(alpha, alpha)


def test_arrow_of_grd_matches_triples(grd):
    # the two fin copies have their own terminals; finmap must bridge them
    ctx = grd.context("GRD")
    A = arrow_context(ctx)
    models = S.enumerate_strict_models(A.ctx, ("a",), 1)
    base = S.enumerate_strict_models(ctx, ("a",), 1)
    triples = sum(len(S.enumerate_homomorphisms(ctx, M, N)) for M in base for N in base)
    assert len(models) == triples == 34
