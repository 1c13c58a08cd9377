"""Tree-shaped values inhabiting the computable-set semantics.

Values are plain nested tuples so they hash and compare cheaply:

    ("atom", name)  ("unit",)  ("pair", a, b)  ("inl", v)  ("inr", v)
    ("list", (v, ...))  ("tag", label, v)  ("cls", v)

The structural order (``vkey``) is shortlex on lists, so every nonempty set
of values has a least element; quotient representatives use it.
"""

from __future__ import annotations

from functools import lru_cache

UNIT = ("unit",)

_RANK = {"atom": 0, "unit": 1, "pair": 2, "inl": 3, "inr": 4, "list": 5, "tag": 6, "cls": 7}


def atom(name):
    return ("atom", name)


def pair(a, b):
    return ("pair", a, b)


def inl(v):
    return ("inl", v)


def inr(v):
    return ("inr", v)


def lst(*items):
    return ("list", tuple(items))


def tag(label, v):
    return ("tag", label, v)


def cls(v):
    return ("cls", v)


def kuratowski(elements):
    """Canonical representative of a finite subset in a ``fin`` quotient.

    It is the class of the sorted duplicate-free list injected on the first
    leg of the coequalizer pushout.
    """
    return cls(inl(lst(*sorted(set(elements), key=vkey))))


@lru_cache(maxsize=None)
def vkey(v):
    kind = v[0]
    r = _RANK[kind]
    if kind == "atom":
        return (r, v[1])
    if kind == "unit":
        return (r,)
    if kind == "pair":
        return (r, vkey(v[1]), vkey(v[2]))
    if kind in ("inl", "inr", "cls"):
        return (r, vkey(v[1]))
    if kind == "list":
        return (r, len(v[1]), tuple(vkey(x) for x in v[1]))
    if kind == "tag":
        return (r, v[1], vkey(v[2]))
    raise ValueError(f"not a value: {v!r}")


def sort_values(vs):
    return tuple(sorted(set(vs), key=vkey))


@lru_cache(maxsize=None)
def render(v):
    kind = v[0]
    if kind == "atom":
        return v[1]
    if kind == "unit":
        return "()"
    if kind == "pair":
        return f"({render(v[1])}, {render(v[2])})"
    if kind in ("inl", "inr", "cls"):
        return f"{kind}({render(v[1])})"
    if kind == "list":
        return "[" + ", ".join(render(x) for x in v[1]) + "]"
    if kind == "tag":
        return f"tag({v[1]}, {render(v[2])})"
    raise ValueError(f"not a value: {v!r}")


def is_value(v):
    try:
        vkey(v)
    except (ValueError, KeyError, IndexError, TypeError):
        return False
    return True
