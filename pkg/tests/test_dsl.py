import pytest

from ausk.dsl import ContextDecl, DSLSyntaxError, parse_dsl, parse_functor, print_dsl
from ausk.elaborate import CORPUS, corpus_path

CORPUS_FILES = sorted(p.name for p in CORPUS.glob("*.ausk"))


def test_one_context():
    decls = parse_dsl("context Ob { node X; }")
    assert len(decls) == 1 and isinstance(decls[0], ContextDecl)
    assert decls[0].name == "Ob"


@pytest.mark.parametrize("name", CORPUS_FILES)
def test_round_trip(name):
    decls = parse_dsl(corpus_path(name).read_text())
    assert parse_dsl(print_dsl(decls)) == decls


def test_grd_signature():
    decls = {d.name: d for d in parse_dsl(corpus_path("grd.ausk").read_text())}
    items = {it.args[0]: it for it in decls["GRD"].items}
    assert [n for n in ("G", "R", "D") if items[n].kind == "node"] == ["G", "R", "D"]
    assert items["FinG"].kind == "fin" and items["FinG"].args[1] == "G"
    assert items["lambda"].args[1:] == ("R", "FinG")
    assert items["rho"].args[1:] == ("D", "FinG")
    assert items["pi"].args[1:] == ("D", "R")


def test_missing_semicolon_position():
    with pytest.raises(DSLSyntaxError) as err:
        parse_dsl("context Ob {\n    node X\n}")
    assert err.value.pos == (3, 1)
    assert str(err.value).startswith("3:1:")


def test_bad_token():
    with pytest.raises(DSLSyntaxError):
        parse_dsl("context Ob { node X; } $")


@pytest.mark.parametrize("text, expr", [
    ("identity", ("identity",)),
    ("tag:t", ("tag", "t")),
    ("tag:s,tag:t", ("compose", (("tag", "s"), ("tag", "t")))),
])
def test_functor_flags(text, expr):
    assert parse_functor(text) == expr
