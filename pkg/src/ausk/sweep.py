"""Sampled sweeps of the cubical conditions over the cells a workspace offers."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from . import semantics as S
from . import sketch as K
from .morphisms import PreservationViolation, arrow_context, copy_name, hom_edge, make_map, two_cell
from .strictify import verify_gray


def _plain(ctx):
    """Only primitive nodes and no primitive edges: 2-cells need no squares."""
    pn, pe = K.primitive_items(ctx)
    return not pe and set(ctx.sketch.nodes) == pn


def cells_between(H, H2, arrow=None):
    """All 2-cells ``H => H2`` whose components are single edges of the domain.

    Only for maps without equivalence steps into a context of bare nodes.
    """
    if H.equiv_steps or H2.equiv_steps or H.dom.steps != H2.dom.steps or H.cod.steps != H2.cod.steps:
        return []
    if not _plain(H.cod):
        return []
    A = arrow or arrow_context(H.cod)
    s = H.dom.sketch
    nodes = sorted(H.cod.sketch.nodes)
    choices = []
    for n in nodes:
        a, b = H.hom.node_map[n], H2.hom.node_map[n]
        choices.append(sorted(e for e, (x, y) in s.edges.items() if x == a and y == b))
    out = []
    for pick in itertools.product(*choices):
        nm, em = {}, {}
        for n in nodes:
            nm[copy_name(n, 0)] = H.hom.node_map[n]
            nm[copy_name(n, 1)] = H2.hom.node_map[n]
            em[copy_name(K.identity_name(n), 0)] = H.hom.edge_map[K.identity_name(n)]
            em[copy_name(K.identity_name(n), 1)] = H2.hom.edge_map[K.identity_name(n)]
        for n, e in zip(nodes, pick):
            em[hom_edge(n)] = e
        name = f"{H.name}=>{H2.name}[{','.join(pick)}]"
        try:
            out.append(two_cell(make_map(name, H.dom, A.ctx, (), nm, em), A))
        except (K.KernelError, PreservationViolation):
            continue
    return out


@dataclass
class Config:
    f: object
    f2: object
    H: object
    H2: object
    beta: object
    model: object

    def label(self):
        return (f"f={_fname(self.f)} f2={_fname(self.f2)} H={self.H.name} H2={self.H2.name} "
                f"beta={self.beta.map.name if self.beta else '-'}")


def _fname(f):
    if isinstance(f, S.Identity):
        return "identity"
    if isinstance(f, S.Tagging):
        return f"tag:{f.label}"
    return ",".join(_fname(p) for p in f.parts)


DEFAULT_FUNCTORS = (S.Identity(), S.Tagging("s"), S.Tagging("t"), S.Composite((S.Tagging("s"), S.Tagging("t"))))


def configurations(ws, functors=DEFAULT_FUNCTORS, universe=("a", "b"), bound=2, depth=S.DEFAULT_DEPTH):
    """Every (f, f2, H, H2, beta, M) the workspace supports, in a fixed order."""
    maps = [ws.maps[k] for k in sorted(ws.maps)]
    arrows = {}
    out = []
    for H in maps:
        nexts = [H2 for H2 in maps if H2.dom.steps == H.cod.steps]
        if not nexts:
            continue
        if H.cod.name not in arrows and _plain(H.cod):
            arrows[H.cod.name] = arrow_context(H.cod)
        betas = []
        for H3 in maps:
            betas.extend(cells_between(H, H3, arrows.get(H.cod.name)))
        models = S.enumerate_strict_models(H.dom, universe, bound, depth)
        pairs = [(f, g) for f in functors for g in functors if f != g]
        for M in models:
            for (f, f2), H2 in itertools.product(pairs, nexts):
                for beta in betas or [None]:
                    out.append(Config(f, f2, H, H2, beta, M))
    return out


@dataclass
class SweepResult:
    configs: list
    reports: list
    seed: int

    @property
    def passed(self):
        return all(r.passed for r in self.reports)

    def equations(self):
        return sum(len(r.checks) for r in self.reports)

    def failures(self):
        return [(c, r) for c, r in zip(self.configs, self.reports) if not r.passed]


def gray_sweep(ws, samples=120, seed=0, **kw):
    """Check the cubical conditions on ``samples`` configurations drawn with a fixed seed."""
    configs = configurations(ws, **kw)
    if samples is not None and samples < len(configs):
        # stratified by H so every map gets its share
        rng = random.Random(seed)
        groups = {}
        for c in configs:
            groups.setdefault(c.H.name, []).append(c)
        for g in groups.values():
            rng.shuffle(g)
        picked = []
        for row in itertools.zip_longest(*(groups[k] for k in sorted(groups))):
            picked.extend(c for c in row if c is not None)
        configs = picked[:samples]
    reports = [verify_gray(c.f, c.f2, S.NatTransform(c.f, c.f2), c.H, c.H2, c.beta, c.model) for c in configs]
    return SweepResult(configs, reports, seed)
