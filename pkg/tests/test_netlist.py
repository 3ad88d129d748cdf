import pytest
from hypothesis import given, settings

from netlist_cases import GOLDEN, corruptions, netlists, rejection
from sagnac_switch import netlist as nl
from sagnac_switch.chain import TopologyError, loop_from_netlist
from sagnac_switch.engine import SwitchConfig


def test_smallest_program():
    text = "bs main ratio=0.5\ndetector d\nconnect main.p3 -> d.in\n"
    net = nl.parse(text)
    assert [d.kind for d in net.decls] == ["detector", "bs"]
    assert net.decl("main").get("ratio") == 0.5
    assert str(net.connections[0]) == "connect main.p3 -> d.in"


def test_missing_axis_names_key_and_line():
    with pytest.raises(nl.NetlistError) as exc:
        nl.parse("# c\n\npm mod1\n", "x.sagnet")
    (d,) = exc.value.diagnostics
    assert d.line == 3 and "axis" in d.message
    assert str(d).startswith("x.sagnet:3:")


def test_all_problems_reported_together():
    text = "\n".join([
        "bs b ratio=2",
        "widget w",
        "hwp h angle=0 colour=1",
        "hwp h angle=1",
        "connect b.p9 -> ghost.p1",
        "connect b.p1 - b.p2",
    ])
    diags = nl.validate(text)
    assert [d.line for d in diags] == [1, 2, 3, 4, 5, 5, 6]
    assert all(d.col >= 1 for d in diags)


def test_port_used_twice():
    text = "hwp a angle=0\nhwp b angle=0\nhwp c angle=0\nconnect a.p2 -> b.p1\nconnect c.p2 -> b.p1\n"
    (d,) = nl.validate(text)
    assert d.line == 5 and "already connected on line 4" in d.message


def test_empty_netlist_serializes_to_header():
    assert nl.serialize(nl.Netlist()) == nl.HEADER + "\n"
    assert nl.parse(nl.HEADER + "\n") == nl.Netlist()


def test_preset_round_trip_and_validation():
    net = nl.sagnac_preset()
    text = nl.serialize(net)
    assert nl.validate(text) == []
    assert nl.parse(text) == net


def test_preset_matches_golden():
    assert nl.serialize(nl.sagnac_preset(SwitchConfig())) == GOLDEN.read_text()


def test_preset_follows_config():
    net = nl.sagnac_preset(SwitchConfig(delay_length=250.0, loss_d2_db=7.0))
    assert net.decl("delay").get("length") == 250.0
    assert net.decl("att_d2").get("loss_db") == 7.0


def test_file_order_does_not_matter():
    lines = GOLDEN.read_text().splitlines()
    shuffled = [lines[0]] + lines[1:][::-1]
    assert nl.parse("\n".join(shuffled)) == nl.parse(GOLDEN.read_text())


@settings(max_examples=300, deadline=None)
@given(netlists())
def test_parse_serialize_round_trip(net):
    text = nl.serialize(net)
    again = nl.parse(text)
    assert again == net
    assert nl.serialize(again) == text


def test_every_corruption_is_rejected_with_location():
    text = GOLDEN.read_text()
    escaped = []
    count = 0
    for label, lines in corruptions(text):
        count += 1
        diags = rejection("\n".join(lines))
        if not diags or any(d.line <= 0 or d.col <= 0 for d in diags):
            escaped.append((label, diags))
    assert count > 1000
    assert escaped == []


def test_topology_error_points_at_line():
    text = GOLDEN.read_text().replace("connect pm2.p2 -> hwp_key.p1\n", "")
    with pytest.raises(TopologyError) as exc:
        loop_from_netlist(nl.parse(text))
    d = exc.value.diagnostics[0]
    assert "unsupported topology" in d.message and d.line > 0


def test_renamed_component_still_valid():
    text = GOLDEN.read_text().replace("pm1", "mod_a")
    assert rejection(text) == []
