"""Editor actions, protocol handling, broadcast, persistence, replay."""

import json
from pathlib import Path

import pytest

from pchart.chartio import parse_chart, serialize_chart
from pchart.geometry import Rect
from pchart.model import validate
from pchart.service import ServerState, apply_action, handle_message

from fixtures import coin, counter_bad, toggle


# --- apply_action -----------------------------------------------------------------


def test_add_state():
    chart = toggle()
    new, diags = apply_action(chart, {"action": "AddState", "parent": chart.root,
                                      "kind": "basic"})
    assert diags == []
    assert len(new.states) == 4
    assert validate(new) == []
    assert len(chart.states) == 3  # original untouched


def test_add_state_into_basic_promotes():
    chart = toggle()
    off = chart.state_by_name("Off").id
    new, diags = apply_action(chart, {"action": "AddState", "parent": off, "kind": "basic"})
    assert diags == []
    assert new.states[off].kind == "xor"
    inner = new.states[off].children[0]
    assert new.states[off].initial == inner


def test_rename_state_clash_rejected():
    chart = toggle()
    on = chart.state_by_name("On").id
    new, diags = apply_action(chart, {"action": "RenameState", "id": on, "name": "Off"})
    assert new == chart
    assert any("share the name" in d.message for d in diags)


def test_edit_label_syntax_error_rejected():
    chart = toggle()
    tid = sorted(chart.transitions)[0]
    new, diags = apply_action(chart, {"action": "EditLabel", "id": tid, "label": "E [x<"})
    assert new == chart
    assert diags and "label" in diags[0].message


def test_move_state_shifts_subtree():
    chart = toggle()
    off = chart.state_by_name("Off")
    box = [off.box.x, off.box.y + 5, off.box.w, off.box.h]
    new, diags = apply_action(chart, {"action": "MoveState", "id": off.id, "box": box})
    assert diags == []
    assert new.states[off.id].box.y == off.box.y + 5


def test_delete_state_cascades():
    chart = coin()
    sink = chart.state_by_name("Sink").id
    new, diags = apply_action(chart, {"action": "DeleteState", "id": sink})
    # the prob transition targets Sink on one branch, so it goes too
    assert diags == []
    assert sink not in new.states
    assert len(new.transitions) == 0
    assert validate(new) == []


def test_delete_initial_reassigns():
    chart = toggle()
    off = chart.state_by_name("Off").id
    on = chart.state_by_name("On").id
    new, diags = apply_action(chart, {"action": "DeleteState", "id": off})
    assert diags == []
    assert new.states[chart.root].initial == on


def test_delete_root_rejected():
    chart = toggle()
    new, diags = apply_action(chart, {"action": "DeleteState", "id": chart.root})
    assert new == chart and diags


def test_add_transition_with_target():
    chart = toggle()
    off = chart.state_by_name("Off").id
    new, diags = apply_action(chart, {"action": "AddTransition", "source": off,
                                      "label": "go [true]", "target": off})
    assert diags == []
    assert len(new.transitions) == 3


def test_add_transition_prob_body_allocates_nodes():
    chart = toggle()
    off = chart.state_by_name("Off").id
    on = chart.state_by_name("On").id
    body = {"prob": {"branches": [
        {"p": "1/2", "to": {"goto": {"target": on}}},
        {"p": "1/2", "to": {"goto": {"target": off}}},
    ]}}
    new, diags = apply_action(chart, {"action": "AddTransition", "source": off,
                                      "label": "gamble", "body": body})
    assert diags == []
    assert validate(new) == []
    assert new.next_id > chart.next_id + 1  # transition and pseudo node allocated


def test_set_invariant_and_clear():
    chart = counter_bad()
    new, diags = apply_action(chart, {"action": "SetInvariant", "id": chart.root,
                                      "text": "x <= 5"})
    assert diags == [] and new.states[chart.root].invariant is not None
    cleared, diags = apply_action(new, {"action": "SetInvariant", "id": chart.root,
                                        "text": ""})
    assert diags == [] and cleared.states[chart.root].invariant is None


def test_set_variable_add_replace_delete():
    chart = toggle()
    new, diags = apply_action(chart, {"action": "SetVariable", "id": chart.root,
                                      "decl": "n: 0..5 = 1"})
    assert diags == []
    new2, diags = apply_action(new, {"action": "SetVariable", "id": chart.root,
                                     "decl": "n: 0..9 = 2 // wider"})
    assert diags == []
    assert new2.states[chart.root].variables[0].vtype.hi == 9
    new3, diags = apply_action(new2, {"action": "SetVariable", "id": chart.root,
                                      "decl": "n"})
    assert diags == []
    assert new3.states[chart.root].variables == ()


def test_move_label_manual_and_clear():
    chart = toggle()
    tid = sorted(chart.transitions)[0]
    cid = f"{tid}:0"
    new, diags = apply_action(chart, {"action": "MoveLabelManual", "connectionId": cid,
                                      "rect": [200, 5, 40, 14]})
    assert diags == []
    assert new.label_overrides[cid] == Rect(200, 5, 40, 14)
    back, diags = apply_action(new, {"action": "MoveLabelManual", "connectionId": cid,
                                     "rect": None})
    assert diags == [] and cid not in back.label_overrides


def test_add_query():
    chart = toggle()
    on = chart.state_by_name("On").id
    new, diags = apply_action(chart, {"action": "AddQuery", "kind": "Pmax", "target": on})
    assert diags == []
    assert new.queries[-1].kind == "Pmax"


def test_unknown_action():
    chart = toggle()
    new, diags = apply_action(chart, {"action": "Explode"})
    assert new == chart and diags


def test_apply_action_pure():
    chart = toggle()
    action = {"action": "AddState", "parent": chart.root, "kind": "basic"}
    a, _ = apply_action(chart, action)
    b, _ = apply_action(chart, action)
    assert a == b
    assert serialize_chart(a) == serialize_chart(b)


# --- protocol ----------------------------------------------------------------------


def _server(tmp_path: Path) -> ServerState:
    (tmp_path / "toggle.pchart").write_text(serialize_chart(toggle()))
    (tmp_path / "coin.pchart").write_text(serialize_chart(coin()))
    return ServerState.from_directory(tmp_path)


def _msg(mtype, chart_id, seq, payload=None):
    return {"type": mtype, "chartId": chart_id, "seq": seq, "payload": payload or {}}


def test_hello_replies_state_and_display(tmp_path):
    state = _server(tmp_path)
    replies = handle_message(state, "alice", _msg("hello", "toggle", 1))
    assert [r[0] for r in replies] == ["alice", "alice"]
    types = [r[1]["type"] for r in replies]
    assert types == ["chart_state", "display_list"]
    assert replies[0][1]["payload"]["chart"]["name"] == "toggle"
    assert replies[0][1]["seq"] == 1 and replies[1][1]["seq"] == 2


def test_hello_unknown_chart(tmp_path):
    state = _server(tmp_path)
    replies = handle_message(state, "alice", _msg("hello", "nope", 1))
    assert replies[0][1]["type"] == "error"


def test_apply_actions_broadcasts_to_all_sessions(tmp_path):
    state = _server(tmp_path)
    handle_message(state, "alice", _msg("hello", "toggle", 1))
    handle_message(state, "bob", _msg("hello", "toggle", 1))
    root = state.charts["toggle"].root
    replies = handle_message(state, "alice", _msg(
        "apply_actions", "toggle", 2,
        {"actions": [{"action": "AddState", "parent": root, "kind": "basic"}]},
    ))
    by_target = {}
    for sid, m in replies:
        by_target.setdefault(sid, []).append(m["type"])
    assert by_target["alice"][0] == "action_ack"
    assert by_target["alice"][1:] == ["chart_state", "display_list"]
    assert by_target["bob"] == ["chart_state", "display_list"]
    assert len(state.charts["toggle"].states) == 4


def test_rejected_batch_leaves_chart_unchanged(tmp_path):
    state = _server(tmp_path)
    handle_message(state, "alice", _msg("hello", "toggle", 1))
    before = state.charts["toggle"]
    on = before.state_by_name("On").id
    replies = handle_message(state, "alice", _msg(
        "apply_actions", "toggle", 2,
        {"actions": [
            {"action": "AddState", "parent": before.root, "kind": "basic"},
            {"action": "RenameState", "id": on, "name": "Off"},
        ]},
    ))
    assert replies[0][1]["type"] == "error"
    assert state.charts["toggle"] == before
    assert "toggle" not in state.action_log or state.action_log["toggle"] == []


def test_stale_seq_rejected(tmp_path):
    state = _server(tmp_path)
    handle_message(state, "alice", _msg("hello", "toggle", 5))
    replies = handle_message(state, "alice", _msg("apply_actions", "toggle", 5,
                                                  {"actions": []}))
    assert replies[0][1]["type"] == "error"
    assert "seq" in replies[0][1]["payload"]["message"]


def test_analysis_compile_matches_golden(tmp_path):
    state = _server(tmp_path)
    handle_message(state, "alice", _msg("hello", "toggle", 1))
    replies = handle_message(state, "alice", _msg(
        "analysis_request", "toggle", 2, {"kind": "compile"}))
    (sid, m), = replies
    assert m["type"] == "analysis_result"
    golden = (Path(__file__).parent / "golden" / "toggle.gc.txt").read_text()
    assert m["payload"]["intermediate"] == golden


def test_analysis_query(tmp_path):
    state = _server(tmp_path)
    handle_message(state, "alice", _msg("hello", "coin", 1))
    replies = handle_message(state, "alice", _msg(
        "analysis_request", "coin", 2,
        {"kind": "query", "queryKind": "Pmax", "target": "Goal"}))
    (sid, m), = replies
    assert m["payload"]["result"]["value"] == pytest.approx(0.5)


def test_analysis_codegen(tmp_path):
    state = _server(tmp_path)
    handle_message(state, "alice", _msg("hello", "coin", 1))
    (sid, m), = handle_message(state, "alice", _msg(
        "analysis_request", "coin", 2, {"kind": "codegen", "target": "prism"}))
    assert set(m["payload"]["files"]) == {"coin.prism", "coin.props"}


def test_persistence_on_accepted_action(tmp_path):
    state = _server(tmp_path)
    handle_message(state, "alice", _msg("hello", "toggle", 1))
    root = state.charts["toggle"].root
    handle_message(state, "alice", _msg(
        "apply_actions", "toggle", 2,
        {"actions": [{"action": "AddState", "parent": root, "kind": "basic"}]},
    ))
    on_disk = parse_chart((tmp_path / "toggle.pchart").read_text())
    assert on_disk == state.charts["toggle"]


def test_action_log_replay_reproduces_chart(tmp_path):
    state = _server(tmp_path)
    handle_message(state, "alice", _msg("hello", "toggle", 1))
    initial = toggle()
    root = initial.root
    seq = 2
    batches = [
        [{"action": "AddState", "parent": root, "kind": "basic", "name": "Extra"}],
        [{"action": "SetVariable", "id": root, "decl": "n: 0..3 = 0"}],
        [{"action": "AddQuery", "kind": "Pmax", "target": root}],
    ]
    for batch in batches:
        handle_message(state, "alice", _msg("apply_actions", "toggle", seq,
                                            {"actions": batch}))
        seq += 1
    replayed = initial
    for action in state.action_log["toggle"]:
        replayed, diags = apply_action(replayed, action)
        assert not diags
    assert serialize_chart(replayed) == serialize_chart(state.charts["toggle"])


def test_broadcast_seq_strictly_increases(tmp_path):
    state = _server(tmp_path)
    handle_message(state, "alice", _msg("hello", "toggle", 1))
    seqs = []
    root = state.charts["toggle"].root
    for i in range(3):
        replies = handle_message(state, "alice", _msg(
            "apply_actions", "toggle", 2 + i,
            {"actions": [{"action": "SetVariable", "id": root, "decl": f"v{i}: 0..1 = 0"}]},
        ))
        seqs.extend(m["seq"] for sid, m in replies if sid == "alice")
    assert seqs == sorted(seqs)
    assert len(set(seqs)) == len(seqs)


def test_websocket_transport_roundtrip(tmp_path):
    from starlette.testclient import TestClient

    from pchart.server import create_app

    state = _server(tmp_path)
    app = create_app(state)
    with TestClient(app) as client:
        assert client.get("/charts").json() == ["coin", "toggle"]
        with client.websocket_connect("/ws") as ws:
            ws.send_json(_msg("hello", "toggle", 1))
            first = ws.receive_json()
            second = ws.receive_json()
            assert first["type"] == "chart_state"
            assert second["type"] == "display_list"
