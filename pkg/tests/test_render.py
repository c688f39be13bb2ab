"""Display lists and SVG output."""

import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from pchart.errors import MissingLayout
from pchart.layout import layout_chart
from pchart.render import (
    BoxItem,
    LeaderItem,
    PathItem,
    SeparatorItem,
    TextItem,
    build_display_list,
    display_list_to_json,
    render_svg,
)
from pchart.build import ChartBuilder

from fixtures import ALL_FIXTURES, andstate, coin, toggle

GOLDEN = Path(__file__).parent / "golden"


def test_toggle_display_census():
    dl = build_display_list(toggle())
    boxes = [i for i in dl.items if isinstance(i, BoxItem)]
    paths = [i for i in dl.items if isinstance(i, PathItem)]
    labels = [i for i in dl.items if isinstance(i, TextItem) and i.role == "label"]
    assert len(boxes) == 3
    assert len(paths) == 2
    assert len(labels) == 2


def test_empty_chart_display():
    b = ChartBuilder("lonely")
    b.basic(b.root_id, "Only", initial=True)
    dl = build_display_list(b.build())
    assert len([i for i in dl.items if isinstance(i, BoxItem)]) == 2
    assert not [i for i in dl.items if isinstance(i, PathItem)]


def test_andstate_separators_passed_through():
    chart = andstate()
    layout = layout_chart(chart)
    dl = build_display_list(chart, layout)
    seps = [i for i in dl.items if isinstance(i, SeparatorItem)]
    m = chart.state_by_name("M").id
    assert len(seps) == len(layout.separators[m])


def test_boxes_precede_children_and_paths_precede_labels():
    chart = coin()
    dl = build_display_list(chart)
    kinds = [type(i).__name__ for i in dl.items]
    assert kinds.index("PathItem") < kinds.index("TextItem")
    box_ids = [i.state_id for i in dl.items if isinstance(i, BoxItem)]
    assert box_ids[0] == chart.root


def test_missing_layout_rejected():
    chart = andstate()
    layout = layout_chart(chart)
    broken = type(layout)(layout.scene, {}, layout.placements)
    with pytest.raises(MissingLayout):
        build_display_list(chart, broken)


@pytest.mark.parametrize("name", sorted(ALL_FIXTURES))
def test_svg_well_formed_all_fixtures(name):
    chart = ALL_FIXTURES[name]()
    svg = render_svg(build_display_list(chart))
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")


def test_svg_golden_toggle():
    svg = render_svg(build_display_list(toggle()))
    assert svg == (GOLDEN / "toggle.svg").read_text()


def test_svg_deterministic():
    a = render_svg(build_display_list(coin()))
    b = render_svg(build_display_list(coin()))
    assert a == b


def test_svg_toggle_rect_structure():
    svg = render_svg(build_display_list(toggle()))
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    rects = root.findall(f"./{ns}g/{ns}rect")
    assert len(rects) == 3


def test_model_ids_unique_in_svg():
    for name in ("toggle", "coin", "duo", "cond_demo"):
        chart = ALL_FIXTURES[name]()
        svg = render_svg(build_display_list(chart))
        root = ET.fromstring(svg)
        ids = [el.get("id") for el in root.iter() if el.get("id")]
        assert len(ids) == len(set(ids))
        for sid in chart.states:
            assert ids.count(f"state-{sid}") == 1


def test_leader_renders_dotted():
    from pchart.geometry import Point
    from pchart.render import DisplayList

    dl = DisplayList((LeaderItem(Point(0, 0), Point(10, 10), "x:0"),), (50, 50))
    svg = render_svg(dl)
    assert 'stroke-dasharray="2 3"' in svg


def test_empty_display_list_valid_svg():
    from pchart.render import DisplayList

    svg = render_svg(DisplayList((), (100, 80)))
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    g = root.find(f"./{ns}g")
    assert g is not None and len(list(g)) == 0


def test_text_escaped():
    b = ChartBuilder("esc")
    s = b.basic(b.root_id, "S", initial=True)
    b.var(b.root_id, "x: 0..5 = 0")
    b.trans(s, "go [x < 5 and x > 0]", to=s)
    svg = render_svg(build_display_list(b.build()))
    ET.fromstring(svg)  # parse fails if < or & leaked unescaped
    assert "x &lt; 5" in svg


def test_json_roundtrip_shape():
    dl = build_display_list(coin())
    doc = display_list_to_json(dl)
    assert doc["size"] == [dl.size[0], dl.size[1]]
    kinds = {item["kind"] for item in doc["items"]}
    assert {"box", "path", "text", "marker"} <= kinds
    marker = next(i for i in doc["items"] if i["kind"] == "marker")
    assert marker["shape"] == "prob"
