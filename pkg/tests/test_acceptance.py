"""Acceptance criteria C1-C10, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed
even when output is captured) or directly with
``python3 tests/test_acceptance.py``.
"""

import itertools
import sys
import time
from collections import Counter
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles as O  # noqa: E402
from ausk import geometric as G  # noqa: E402
from ausk import morphisms as Mo  # noqa: E402
from ausk import semantics as S  # noqa: E402
from ausk import strictify as ST  # noqa: E402
from ausk.elaborate import CORPUS, corpus_path, load  # noqa: E402
from ausk.serialize import model_text  # noqa: E402
from ausk.sweep import gray_sweep  # noqa: E402
from ausk.values import atom, tag  # noqa: E402

UNIVERSE = ("a", "b")
Tt = S.Tagging("t")
FUNCTORS = (S.Identity(), S.Tagging("s"), Tt)


def workspaces():
    return [load(f) for f in sorted(CORPUS.glob("*.ausk")) if f.name != "broken.ausk"]


def corpus_contexts():
    """Every context of the corpus once (contexts with equal steps count once)."""
    seen, out = set(), []
    for ws in workspaces():
        for c in ws.contexts.values():
            if c.steps not in seen:
                seen.add(c.steps)
                out.append(c)
    return out


def key(m):
    return frozenset(m.primitive_assignment().items())


# ---------------------------------------------------------------- criteria


def c1_strict_reindexing_uniqueness():
    """Exhaustive search finds exactly strictify's answer for every tagged model."""
    t0 = time.perf_counter()
    universe = [atom("a"), atom("b"), tag("t", atom("a")), tag("t", atom("b"))]
    total = bad = 0
    for ws in workspaces():
        for name in ws.extensions:
            U = ws.extension(name)
            bases = {}
            for N in S.enumerate_strict_models(U.dom, UNIVERSE, 2):
                m1 = S.apply_functor(Tt, N)
                base = Mo.reduce_model(N, U)
                k = key(base)
                if k not in bases:
                    bases[k] = ST.reindex_with_iso(Tt, base)
                m0s, phi0 = bases[k]
                mine, phi = ST.strictify(U, m1, m0s, phi0, check=False)
                sols = O.strictify_solutions(U, m1, m0s, phi0, universe)
                total += 1
                if not (len(sols) == 1 and sols[0][0].same(mine) and sols[0][1].same(phi)):
                    bad += 1
    dt = time.perf_counter() - t0
    over = "within" if dt < 10 else "OVER"
    return bad == 0 and total > 0, f"{total} tagged models, {bad} mismatches; {dt:.1f}s ({over} the 10s budget)"


def c2_strict_isomorph():
    total = bad = 0
    for ctx in corpus_contexts():
        for m in S.enumerate_strict_models(ctx, UNIVERSE, 2):
            for x, want in ((m, m), (S.apply_functor(Tt, m), None)):
                sols = O.strict_isomorphs(x)
                want = want or ST.reindex(Tt, m)
                total += 1
                if not (len(sols) == 1 and sols[0][0].same(want)):
                    bad += 1
    return bad == 0, f"{total} models (strict and tagged), {bad} without a unique strict isomorph"


def _composition_models():
    """Declared corpus models, every enumerated model of the small contexts, GRD/GRD_PT sampled."""
    out = []
    for ws in workspaces():
        out.extend(ws.models.values())
    for ctx in corpus_contexts():
        ms = S.enumerate_strict_models(ctx, UNIVERSE, 2)
        stride = {"GRD": 100, "GRD_PT": 300}.get(ctx.name, 1)
        out.extend(ms[::stride])
    return out


def c3_strict_functoriality():
    total = bad = 0
    for m in _composition_models():
        for f0, f1 in itertools.product(FUNCTORS, FUNCTORS):
            total += 1
            bad += not ST.verify_strict_composition(f0, f1, m)
    return bad == 0, f"{total} (model, f0, f1) checks, {bad} not byte-identical"


def c4_sigma():
    checked = bad = 0
    functors = (Tt, S.Composite((S.Tagging("s"), Tt)))
    for ws in workspaces():
        for name in ws.extensions:
            H = ws.extension(name)
            ms = S.enumerate_strict_models(H.dom, UNIVERSE, 2)
            for M in ms[::25] if len(ms) > 1000 else ms:
                for f in functors:
                    cell = ST.sigma(f, H, M)
                    left = ST.reindex(f, Mo.reduce_model(M, H))
                    right = Mo.reduce_model(ST.reindex(f, M), H)
                    checked += 1
                    bad += not (cell.is_identity() and model_text(left) == model_text(right))
    ce = load(corpus_path("counterexamples.ausk"))
    cell = ST.sigma(Tt, ce.maps["pickT"], ce.models["One"])
    counter = (not cell.is_identity() and cell.iso.comps["X"].is_bijective()
               and cell.iso.comps["X"].graph == {tag("t", S.UNIT): S.UNIT})
    return bad == 0 and counter, (f"{checked} extension-map cells, {bad} non-identity; "
                                  f"pickT with tag(t): {'non-identity iso' if counter else 'WRONG'}")


def c5_gray():
    ws = load(corpus_path("basic.ausk"))
    r = gray_sweep(ws, samples=300, seed=0)
    names = Counter(c.name for rep in r.reports for c in rep.checks)
    ok = r.passed and len(r.configs) >= 100 and all(names[n] for n in ("horizontal", "vertical", "alpha", "beta"))
    return ok, f"{len(r.configs)} cells, {r.equations()} equations {dict(names)}, {len(r.failures())} failing"


def c6_delta():
    ce = load(corpus_path("counterexamples.ausk"))
    D, pair = ce.maps["Delta"], ce.models["Pair"]
    reducts = [Mo.reduce_model(M, D) for M in S.enumerate_strict_models(D.dom, UNIVERSE, 2)]
    # OB2 has no edges besides identities, so any pair of bijections is an iso
    iso_to_reduct = any(
        all(next(O.bijections(r.nodes[n], pair.nodes[n]), None) is not None for n in ("X1", "X2"))
        for r in reducts)
    is_reduct = any(r.same(pair) for r in reducts)
    try:
        ST.strictify(D, pair, ST.empty_model(), S.ModelHom(ST.empty_model(), ST.empty_model(), {}))
        rejected = False
    except ST.NotAnExtensionMap:
        rejected = True
    ok = iso_to_reduct and not is_reduct and rejected
    return ok, (f"iso to a reduct: {iso_to_reduct}; is a reduct: {is_reduct}; "
                f"strictify(Delta) raises NotAnExtensionMap: {rejected}")


def _hom_key(ctx, M, N, comps):
    prim = Mo.K.primitive_items(ctx)[0]
    return key(M), key(N), frozenset((n, comps[n]) for n in prim)


def _arrow_bijection(ctx, universe, bound):
    A = Mo.arrow_context(ctx)
    arrows = S.enumerate_strict_models(A.ctx, universe, bound)
    images = []
    for m in arrows:
        M, N, hom = Mo.split_arrow_model(A, m)
        images.append(_hom_key(ctx, M, N, hom.comps))
    base = S.enumerate_strict_models(ctx, universe, bound)
    triples = [_hom_key(ctx, M, N, h.comps) for M in base for N in base
               for h in S.enumerate_homomorphisms(ctx, M, N)]
    ok = len(set(images)) == len(images) and set(images) == set(triples) and len(set(triples)) == len(triples)
    return ok, len(arrows), len(triples)


def c7_arrow():
    basic, grd = load(corpus_path("basic.ausk")), load(corpus_path("grd.ausk"))
    runs = [("OB", basic.context("OB"), ("a", "b"), 1), ("OB", basic.context("OB"), ("a", "b"), 2),
            ("TERM", basic.context("TERM"), ("a", "b"), 1), ("TERM", basic.context("TERM"), ("a", "b"), 2),
            ("GRD", grd.context("GRD"), ("a",), 1), ("GRD", grd.context("GRD"), ("a", "b"), 1)]
    parts, ok = [], True
    for name, ctx, u, k in runs:
        good, n, t = _arrow_bijection(ctx, u, k)
        ok &= good
        parts.append(f"{name}@{''.join(u)},k={k}: {n}/{t}")
    return ok, "; ".join(parts)


def _grd_instances():
    ws = load(corpus_path("grd.ausk"))
    U = ws.extension("GRD_PT")
    return U, G.compile_geometric(U), S.enumerate_strict_models(U.cod, UNIVERSE, 2)


def c8_compiler_bijection():
    t0 = time.perf_counter()
    U, g, bases = _grd_instances()
    bad = points = 0
    for M in bases:
        pts = G.enumerate_points(G.instantiate(g, M), 2, UNIVERSE)
        direct = S.models_over(U.dom, M, UNIVERSE, 2)
        P = {key(p): p for p in pts}
        Q = {key(q): q for q in direct}
        same = (P.keys() == Q.keys() and len(P) == len(pts) and len(Q) == len(direct)
                and all(P[k].same(Q[k]) for k in P))
        subsets = {frozenset(p.edges["m"].graph.values()) for p in pts}
        bad += not (same and subsets == O.grd_point_subsets(M))
        points += len(pts)
    dt = time.perf_counter() - t0
    over = "within" if dt < 60 else "OVER"
    return bad == 0, f"{len(bases)} base models, {points} points, {bad} mismatches; {dt:.1f}s ({over} the 60s budget)"


def c9_normalization():
    _, g, bases = _grd_instances()
    bad = 0
    for M in bases:
        t = G.instantiate(g, M)
        a = {G.point_key(p.primitive_assignment()) for p in G.enumerate_points(t, 2, UNIVERSE)}
        b = {G.point_key(p.primitive_assignment())
             for p in G.enumerate_points(t, 2, UNIVERSE, normal=G.normal_instance(t))}
        bad += a != b
    return bad == 0, f"{len(bases)} instances, {bad} with differing point sets"


def c10_conservativity():
    steps, pairs, problems = O.conservativity_sweep(corpus_contexts(), UNIVERSE, 2)
    detail = f"{steps} equivalence steps over {pairs} (step, model) pairs, {len(problems)} problems"
    if problems:
        detail += f"; first: {problems[0]}"
    return not problems and steps > 0, detail


CRITERIA = [
    ("C1", "strict reindexing uniqueness", c1_strict_reindexing_uniqueness),
    ("C2", "unique strict isomorph", c2_strict_isomorph),
    ("C3", "strict functoriality on 1-cells", c3_strict_functoriality),
    ("C4", "Sigma on extension maps / pickT", c4_sigma),
    ("C5", "cubical conditions", c5_gray),
    ("C6", "Delta negative test", c6_delta),
    ("C7", "arrow-context oracle", c7_arrow),
    ("C8", "compiler bijection oracle", c8_compiler_bijection),
    ("C9", "normalization invariance", c9_normalization),
    ("C10", "equivalence-step conservativity", c10_conservativity),
]


def run_one(code, title, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, reported like one
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = f"{code} {'PASS' if ok else 'FAIL'} {title}: {detail}"
    return ok, line


@pytest.mark.parametrize("code,title,fn", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(code, title, fn, capsys):
    ok, line = run_one(code, title, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_one(*c) for c in CRITERIA]
    for _, line in results:
        print(line, flush=True)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
