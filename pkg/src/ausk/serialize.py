"""Canonical JSON text for models, homomorphisms, sketches and reports.

Keys are sorted, values are written in the surface value syntax and every
document carries ``"schema": "ausk-v1"``.  Two models are structurally
equal exactly when their serializations are byte-identical.
"""

from __future__ import annotations

import json

from .dsl import parse_value
from .values import render, vkey

SCHEMA = "ausk-v1"


def _obj(o):
    return {"elements": [render(v) for v in o.elems], "complete": o.complete}


def _morph(m):
    items = sorted(m.graph.items(), key=lambda kv: vkey(kv[0]))
    return [[render(a), render(b)] for a, b in items]


def model_to_dict(m):
    return {
        "schema": SCHEMA,
        "kind": "model",
        "context": m.ctx.name,
        "depth": m.depth,
        "nodes": {n: _obj(o) for n, o in m.nodes.items()},
        "edges": {e: _morph(f) for e, f in m.edges.items()},
    }


def hom_to_dict(h):
    return {
        "schema": SCHEMA,
        "kind": "homomorphism",
        "context": h.dom.ctx.name,
        "components": {n: _morph(c) for n, c in h.comps.items()},
    }


def sketch_to_dict(ctx):
    d = ctx.sketch.summary()
    d.update({"schema": SCHEMA, "kind": "context", "name": ctx.name,
              "steps": len(ctx.steps),
              "primitive_nodes": sorted(ctx.sketch.primitive_nodes),
              "primitive_edges": sorted(ctx.sketch.primitive_edges),
              "macros": [{"macro": r.macro, "name": r.name, "args": list(r.args)} for r in ctx.macros]})
    return d


def dumps(d, compact=False):
    """Sorted-key JSON; ``compact`` drops the indentation (and uses the C encoder)."""
    if compact:
        return json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return json.dumps(d, sort_keys=True, indent=1, ensure_ascii=False)


# Compact text is assembled from per-object fragments: the same sets and maps
# recur across many models, and re-encoding them dominated model comparisons.
_FRAGMENTS = {}


def _fragment(kind, x):
    key = (kind, x)
    got = _FRAGMENTS.get(key)
    if got is None:
        got = _FRAGMENTS[key] = dumps(_obj(x) if kind == "obj" else _morph(x), True)
    return got


def _table(kind, items):
    body = ",".join(f"{dumps(k, True)}:{_fragment(kind, v)}" for k, v in sorted(items.items()))
    return "{" + body + "}"


def _assemble(head, tables):
    """Compact JSON for ``head`` plus the fragment tables, keys in sorted order."""
    parts = {k: dumps(v, True) for k, v in head.items()}
    parts.update(tables)
    return "{" + ",".join(f"{dumps(k, True)}:{parts[k]}" for k in sorted(parts)) + "}"


def model_text(m, compact=True):
    if not compact:
        return dumps(model_to_dict(m))
    head = {"schema": SCHEMA, "kind": "model", "context": m.ctx.name, "depth": m.depth}
    return _assemble(head, {"nodes": _table("obj", m.nodes), "edges": _table("morph", m.edges)})


def hom_text(h, compact=True):
    if not compact:
        return dumps(hom_to_dict(h))
    head = {"schema": SCHEMA, "kind": "homomorphism", "context": h.dom.ctx.name}
    return _assemble(head, {"components": _table("morph", h.comps)})


def model_from_dict(d, ctx):
    """Rebuild a model of ``ctx`` from its serialization."""
    from .semantics import Model, SetMorph, SetObj
    if d.get("schema") != SCHEMA:
        raise ValueError(f"unknown schema {d.get('schema')!r}")
    nodes = {n: SetObj([parse_value(v) for v in o["elements"]], o["complete"]) for n, o in d["nodes"].items()}
    s = ctx.sketch
    edges = {}
    for e, pairs in d["edges"].items():
        a, b = s.edges[e]
        edges[e] = SetMorph(nodes[a], nodes[b], {parse_value(x): parse_value(y) for x, y in pairs})
    return Model(ctx, nodes, edges, d["depth"])
