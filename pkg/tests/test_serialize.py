import json

from ausk import semantics as S
from ausk import strictify as ST
from ausk.serialize import (SCHEMA, dumps, hom_text, hom_to_dict, model_from_dict, model_text,
                            model_to_dict)


def _plain(d):
    return json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def test_compact_text_is_plain_json(basic, grd):
    for ws in (basic, grd):
        for m in ws.models.values():
            for x in (m, ST.reindex(S.Tagging("t"), m)):
                assert model_text(x) == _plain(model_to_dict(x))
                assert json.loads(model_text(x, compact=False)) == json.loads(model_text(x))


def test_hom_text(basic):
    m = basic.models["Mab"]
    _, phi = ST.reindex_with_iso(S.Tagging("t"), m)
    assert hom_text(phi) == _plain(hom_to_dict(phi))
    assert json.loads(hom_text(phi))["schema"] == SCHEMA


def test_round_trip(basic):
    for m in S.enumerate_strict_models(basic.context("ISO")):
        back = model_from_dict(json.loads(dumps(model_to_dict(m))), m.ctx)
        assert back.same(m)
        assert model_text(back) == model_text(m)
