"""Capability model: loading, ownership queries, and validation errors.

The ownership helpers are checked against an oracle that rescans the raw
KB file text, so an indexing bug in the loader cannot hide itself.
"""

from importlib import resources

import pytest

from overpriv.kb import (
    CapabilityKB,
    KBError,
    attribute_command_of,
    is_dual_role,
    load_default_kb,
    load_kb_text,
    owners_of_resource,
    value_of_attribute_of,
)


# --- oracle: independent scan of the raw file text ---------------------------

def file_relations():
    text = resources.files("overpriv.data").joinpath("capabilities.kb").read_text("utf-8")
    attr_pairs = []
    value_pairs = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=>" in line:
            left, right = (p.strip() for p in line.split("=>"))
            value_pairs.append((left, right))
        else:
            left, right = (p.strip() for p in line.split("->"))
            attr_pairs.append((left, right))
    return attr_pairs, value_pairs


def owners_by_file_scan(res):
    attr_pairs, value_pairs = file_relations()
    owners = {cap for cap, member in attr_pairs if member == res}
    for cap, member in attr_pairs:
        for attr, val in value_pairs:
            if attr == member and val == res:
                owners.add(cap)
    return owners


def every_file_name():
    attr_pairs, value_pairs = file_relations()
    names = set()
    for pair in attr_pairs + value_pairs:
        names.update(pair)
    return names


def test_owners_agree_with_file_scan_on_every_name(kb):
    for name in sorted(every_file_name()):
        assert owners_of_resource(kb, name) == owners_by_file_scan(name), name


def test_owners_of_unknown_name_is_empty(kb):
    assert owners_of_resource(kb, "noSuchResourceAnywhere") == set()


def test_attribute_ownership_implies_owner_membership(kb):
    for cap, members in kb.attr_cmd_of.items():
        for res in members:
            assert cap in owners_of_resource(kb, res)


# --- bundled model content ----------------------------------------------------

def test_default_kb_is_reasonably_complete(kb):
    assert len(kb.capabilities) >= 40
    assert {"accelerationSensor", "switch", "lock", "alarm", "refresh"} <= kb.capabilities


def test_known_ownership_facts(kb):
    assert attribute_command_of(kb, "lock", "unlock")
    assert not attribute_command_of(kb, "accelerationSensor", "on")
    assert not attribute_command_of(kb, "unknownCap", "anything")
    assert value_of_attribute_of(kb, "accelerationSensor", "active")
    assert not value_of_attribute_of(kb, "accelerationSensor", "on")
    assert "switch" in owners_of_resource(kb, "on")


def test_value_query_on_capability_without_attributes(kb):
    empty = CapabilityKB(
        capabilities=frozenset({"bare"}),
        attr_cmd_of={},
        value_of={},
    )
    assert not value_of_attribute_of(empty, "bare", "anyValue")


def test_dual_role_names(kb):
    assert is_dual_role(kb, "on")
    assert is_dual_role(kb, "off")
    assert is_dual_role(kb, "siren")
    # attribute-only and value-only names are not dual
    assert not is_dual_role(kb, "switch")
    assert not is_dual_role(kb, "active")
    assert not is_dual_role(kb, "noSuchName")


# --- loading ------------------------------------------------------------------

def test_load_collects_multiple_members():
    kb = load_kb_text("lock -> lock\nlock -> unlock\n")
    assert {"lock", "unlock"} <= kb.attr_cmd_of["lock"]


def test_empty_file_gives_empty_model():
    kb = load_kb_text("")
    assert kb.capabilities == frozenset()


def test_reload_is_deterministic():
    assert load_default_kb() == load_default_kb()


def test_comments_and_blank_lines_ignored():
    kb = load_kb_text("# heading\n\nswitch -> switch   # trailing\nswitch => on\n")
    assert kb.attr_cmd_of["switch"] == frozenset({"switch"})
    assert kb.value_of["switch"] == frozenset({"on"})


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("switch on\n", "expected"),
        ("switch -> two words\n", "malformed"),
        ("switch -> on\nswitch -> on\n", "duplicate"),
        ("switch -> na\n", "na"),
        ("na -> on\n", "na"),
    ],
)
def test_load_errors_carry_line_and_reason(text, fragment):
    with pytest.raises(KBError) as err:
        load_kb_text(text, origin="bad.kb")
    assert "bad.kb:" in str(err.value)
    assert fragment in str(err.value)


def test_value_key_must_be_owned_somewhere():
    with pytest.raises(KBError):
        load_kb_text("switch -> on\nmystery => whatever\n")


def test_direct_construction_validates_invariants():
    with pytest.raises(KBError):
        CapabilityKB(
            capabilities=frozenset(),
            attr_cmd_of={"ghost": frozenset({"x"})},
            value_of={},
        )
