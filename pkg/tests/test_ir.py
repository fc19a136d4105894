import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnnsynth import ir
from cnnsynth.errors import DocumentError, StructuralError
from cnnsynth.ir import Branch, MacroLayer, MicroLayer, Network

from strategies import networks

TABLE2 = [34848, 614400, 884736, 1327104, 884736]


def single(k, d, r=1, in_channels=3):
    return Network("one", in_channels, [MacroLayer("c", [Branch([MicroLayer(k, k, d, r, r)])])], 10)


def test_param_count_micro_examples():
    assert ir.param_count_micro(MicroLayer(5, 5, 256, 27, 27), 96) == 614400
    assert ir.param_count_micro(MicroLayer(1, 1, 1, 1, 1), 1) == 1
    assert ir.param_count_micro(MicroLayer(3, 3, 384, 13, 13), 384) == 384 * 384 * 9 == 1327104


def test_alexnet_counts(alexnet):
    assert ir.layer_param_counts(alexnet) == TABLE2
    assert ir.param_count_network(alexnet) == 3745824
    assert [round(c / 1e6, 2) for c in TABLE2] == [0.03, 0.61, 0.88, 1.33, 0.88]


def test_single_layer_count():
    assert ir.param_count_network(single(11, 96)) == 34848


def test_flops(alexnet):
    assert ir.layer_flop_counts(alexnet)[0] == 2 * 34848 * 55 * 55 == 210830400
    assert ir.flop_count(single(1, 1, in_channels=1)) == 2


def test_flops_scale_inverse_with_depth():
    a = ir.flop_count(single(3, 96, r=7))
    for f in (2, 3, 4, 8, 32):
        b = ir.flop_count(single(3, 96 // f, r=7))
        assert b * f == a


def test_inception_counts(googlenet):
    l = googlenet.macro_layers[3]
    assert l.name == "inception_3a"
    assert l.output_channels == 256
    # 1x1: 192*64, 3x3 path: 192*96 + 96*9*128, 5x5 path: 192*16 + 16*25*32, pool proj: 192*32
    expected = 192 * 64 + 192 * 96 + 96 * 9 * 128 + 192 * 16 + 16 * 25 * 32 + 192 * 32
    assert ir.macro_param_count(l, 192) == expected
    assert ir.consumed_channels(googlenet)[3] == 192


def test_validate_fixtures(alexnet, googlenet):
    assert ir.validate(alexnet) == []
    assert ir.validate(googlenet) == []


def test_validate_wiring(alexnet):
    layers = list(alexnet.macro_layers)
    layers[1] = MacroLayer(layers[1].name, layers[1].branches, layers[1].annotations, input_channels=48)
    findings = ir.validate(alexnet.replace(macro_layers=layers))
    assert len(findings) == 1
    assert findings[0].rule == "wiring" and findings[0].macro_layer == "conv2"
    with pytest.raises(StructuralError):
        ir.param_count_network(alexnet.replace(macro_layers=layers))


def test_validate_zero_depth():
    findings = ir.validate(single(3, 0))
    assert len(findings) == 1
    assert findings[0].rule == "positive" and findings[0].macro_layer == "c"


def test_validate_empty():
    n = Network("e", 3, [MacroLayer("x", [])], 10)
    assert [f.rule for f in ir.validate(n)] == ["non-empty"]
    assert [f.rule for f in ir.validate(Network("e", 3, [], 10))] == ["non-empty"]


@pytest.mark.parametrize("name", ["alexnet", "googlenet"])
def test_round_trip_fixtures(name, request):
    n = request.getfixturevalue(name)
    assert ir.loads(ir.dumps(n)) == n
    assert ir.dumps(ir.loads(ir.dumps(n))) == ir.dumps(n)


@settings(max_examples=50, deadline=None)
@given(networks())
def test_round_trip_random(n):
    assert ir.loads(ir.dumps(n)) == n


def test_missing_macro_layers(alexnet):
    doc = ir.to_document(alexnet)
    del doc["macro_layers"]
    with pytest.raises(DocumentError, match="macro_layers"):
        ir.from_document(doc)


def test_unknown_field_rejected(alexnet):
    doc = ir.to_document(alexnet)
    doc["macro_layers"][2]["branches"][0][0]["stride"] = 1
    with pytest.raises(DocumentError) as e:
        ir.from_document(doc)
    assert e.value.location == "macro_layers[2].branches[0][0]"


def test_type_error_location(alexnet):
    doc = ir.to_document(alexnet)
    doc["macro_layers"][0]["branches"][0][0]["depth"] = "96"
    with pytest.raises(DocumentError) as e:
        ir.from_document(doc)
    assert e.value.location == "macro_layers[0].branches[0][0].depth"


def test_syntax_error_location():
    with pytest.raises(DocumentError) as e:
        ir.loads('{"name": "x",\n  "input_channels": }')
    assert e.value.location == "2:21"


def test_zero_depth_parses_then_fails_validation(alexnet):
    doc = ir.to_document(alexnet)
    doc["macro_layers"][0]["branches"][0][0]["depth"] = 0
    n = ir.loads(json.dumps(doc))
    assert [f.rule for f in ir.validate(n)] == ["positive"]


@settings(max_examples=50, deadline=None)
@given(networks(max_layers=4), st.data())
def test_count_strictly_monotone_in_depth(n, data):
    i = data.draw(st.integers(0, len(n.macro_layers) - 1))
    layer = n.macro_layers[i]
    b = data.draw(st.integers(0, len(layer.branches) - 1))
    m = data.draw(st.integers(0, len(layer.branches[b].micro_layers) - 1))
    micros = list(layer.branches[b].micro_layers)
    old = micros[m]
    micros[m] = MicroLayer(old.kernel_width, old.kernel_height, old.depth + 1, old.out_rows, old.out_cols)
    branches = list(layer.branches)
    branches[b] = Branch(micros)
    layers = list(n.macro_layers)
    layers[i] = MacroLayer(layer.name, branches)
    bigger = n.replace(macro_layers=layers)
    assert ir.param_count_network(bigger) > ir.param_count_network(n)
