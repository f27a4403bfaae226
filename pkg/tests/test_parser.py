"""Source parsing: definition metadata, inputs, subscriptions, handler bodies."""

import pytest

from overpriv.parser import (
    AppParseError,
    parse_app,
    extract_subscriptions,
    resolve_device_capability,
)


def subs(source):
    return extract_subscriptions(parse_app(source))


def test_motion_unlock_fixture(fixture_text):
    ast = parse_app(fixture_text("motion_unlock.groovy"))
    assert [(d.device_id, d.capability) for d in ast.inputs] == [
        ("themotion", "motionSensor"),
        ("thelock", "lock"),
    ]
    got = extract_subscriptions(ast)
    assert [(s.device_id, s.attribute, s.value, s.handler) for s in got] == [
        ("themotion", "motion", "active", "activeHandler"),
    ]
    handler = ast.methods["activeHandler"]
    calls = [(st.device_id, st.name) for st in handler if st.kind == "device_call"]
    assert ("thelock", "unlock") in calls


def test_empty_source():
    ast = parse_app("")
    assert ast.meta.name == ""
    assert ast.meta.description == ""
    assert ast.inputs == []
    assert ast.methods == {}


def test_condition_wraps_its_branch(fixture_text):
    ast = parse_app(fixture_text("motion_switch_guard.groovy"))
    got = extract_subscriptions(ast)
    assert [(s.device_id, s.attribute, s.value, s.handler) for s in got] == [
        ("motion1", "motion", "active", "motionActiveHandler"),
    ]
    body = ast.methods["motionActiveHandler"]
    conditions = [st for st in body if st.kind == "condition"]
    assert len(conditions) == 1
    cond = conditions[0]
    assert (cond.device_id, cond.name, cond.value) == ("switch1", "switch", "off")
    assert [(st.kind, st.device_id, st.name) for st in cond.body] == [
        ("device_call", "switch1", "on"),
    ]


def test_current_property_condition_shape():
    source = """
def h(evt) {
    if (thelock.currentLock == "locked") {
        thelock.unlock()
    }
}
"""
    ast = parse_app(source)
    cond = ast.methods["h"][0]
    assert cond.kind == "condition"
    assert (cond.device_id, cond.name, cond.value) == ("thelock", "lock", "locked")


def test_subscribe_argument_shapes():
    source = """
def installed() {
    subscribe(driver, "presence.present", presence)
    subscribe(theAlarm, "contact", contactTriggered)
    subscribe(app, appTouch)
    subscribe(location, changedLocationMode)
}
"""
    got = [(s.device_id, s.attribute, s.value, s.handler) for s in subs(source)]
    assert got == [
        ("driver", "presence", "present", "presence"),
        ("theAlarm", "contact", None, "contactTriggered"),
        ("app", "appTouch", None, "appTouch"),
        ("location", "changedLocationMode", None, "changedLocationMode"),
    ]


def test_parenless_subscribe_is_found(fixture_text):
    # statement-style call without parentheses, as older app sources write it
    got = subs(fixture_text("motion_unlock.groovy"))
    assert len(got) == 1


def test_short_subscribe_warns_instead_of_failing():
    ast = parse_app("def installed() {\n    subscribe(onlyone)\n}\n")
    assert extract_subscriptions(ast) == []
    assert any("subscribe" in w for w in ast.warnings)


def test_resolve_device_capability(fixture_text):
    ast = parse_app(fixture_text("motion_unlock.groovy"))
    assert resolve_device_capability(ast, "themotion") == "motionSensor"
    assert resolve_device_capability(ast, "location") is None
    assert resolve_device_capability(ast, "app") is None
    assert resolve_device_capability(ast, "nosuchid") is None


def test_identifier_named_after_another_capability(fixture_text):
    # the input id is irrelevant; only the declared capability counts
    ast = parse_app(fixture_text("water_alarm.groovy"))
    assert resolve_device_capability(ast, "alarm") == "waterSensor"
    got = extract_subscriptions(ast)
    assert {(s.device_id, s.attribute, s.value) for s in got} == {
        ("alarm", "water", "wet"),
        ("alarm", "water", "dry"),
    }


def test_elision_lines_parse_as_other(fixture_text):
    ast = parse_app(fixture_text("big_turn_off.groovy"))
    assert ast.meta.name == "Big Turn OFF"
    assert ast.meta.description == "Turn your lights off when the SmartApp is tapped"
    assert [(d.device_id, d.capability) for d in ast.inputs] == [("switches", "switch")]
    calls = [
        (st.device_id, st.name)
        for st in ast.methods["appTouch"]
        if st.kind == "device_call"
    ]
    assert calls == [("switches", "off")]


def test_optional_chain_calls_count_as_device_calls():
    ast = parse_app('def h(evt) {\n    lamp?.on()\n}\n')
    assert [(st.kind, st.device_id, st.name) for st in ast.methods["h"]] == [
        ("device_call", "lamp", "on"),
    ]


def test_log_statements_are_other():
    ast = parse_app('def h(evt) {\n    log.debug "hello $evt"\n}\n')
    kinds = {st.kind for st in ast.methods["h"]}
    assert "device_call" not in kinds
    assert "condition" not in kinds


def test_unbalanced_brace_is_fatal():
    with pytest.raises(AppParseError) as err:
        parse_app("def h(evt) {\n    lamp.on()\n")
    assert err.value.line >= 1


def test_unterminated_string_is_fatal():
    with pytest.raises(AppParseError):
        parse_app('def h(evt) {\n    log.debug "oops\n}\n')


def test_parse_is_stable_across_runs(fixture_text):
    source = fixture_text("motion_switch_guard.groovy")
    assert parse_app(source) == parse_app(source)


def test_every_fixture_parses(fixture_text):
    for name in (
        "motion_unlock.groovy",
        "prefs_only_switches.groovy",
        "motion_switch_guard.groovy",
        "alarm_activity_notifier.groovy",
        "water_alarm.groovy",
        "big_turn_off.groovy",
        "big_turn_off_case1.groovy",
        "big_turn_off_case2.groovy",
        "big_turn_off_case3.groovy",
    ):
        ast = parse_app(fixture_text(name))
        for sub in extract_subscriptions(ast):
            if sub.handler in ast.methods:
                assert ast.methods[sub.handler] is not None
