"""Reference detector: plain exhaustive scans, no indexing.

Re-states the three detection rules with nested loops over the raw fact
tuples. Deliberately shares no evaluation code with the engine; tests
compare the two on randomized fact sets. Keep it slow and obvious.
"""

from __future__ import annotations

from .engine import CASE3_CLAUSES, Finding
from .facts import FactSet
from .kb import CapabilityKB

_NA = "na"
_COMPOSITIONS = ("triggerComposition", "conditionComposition", "actionComposition")


def brute_force_oracle(kb: CapabilityKB, fs: FactSet, clauses=CASE3_CLAUSES) -> list[Finding]:
    raw: list[Finding] = []
    raw.extend(_case1(kb, fs))
    raw.extend(_case2(fs))
    raw.extend(_case3(fs, frozenset(clauses)))

    kept = [f for f in raw if f.capability != _NA]
    kept.sort(key=lambda f: (
        f.case, f.app, f.capability, f.resource or "", f.rule_id or "",
        f.component_id or "", f.detail,
    ))
    out: list[Finding] = []
    seen = set()
    for f in kept:
        key = (f.case, f.capability, f.resource, f.component_id)
        if key not in seen:
            seen.add(key)
            out.append(f)
    return out


def _is_attr_cmd(kb: CapabilityKB, cap: str, word: str) -> bool:
    return cap in kb.attr_cmd_of and word in kb.attr_cmd_of[cap]


def _is_value_of_cap(kb: CapabilityKB, cap: str, word: str) -> bool:
    for attr in kb.attr_cmd_of.get(cap, frozenset()):
        if word in kb.value_of.get(attr, frozenset()):
            return True
    return False


def _case1(kb: CapabilityKB, fs: FactSet) -> list[Finding]:
    found = []
    for f in fs.facts:
        if f.name not in _COMPOSITIONS or f.args[0] != "code":
            continue
        _, app, rule, comp, cap, attr_cmd, value = f.args
        if cap == _NA:
            continue
        if attr_cmd != _NA and cap in kb.capabilities and not _is_attr_cmd(kb, cap, attr_cmd):
            for other in kb.capabilities:
                if other != cap and _is_attr_cmd(kb, other, attr_cmd):
                    found.append(Finding(
                        1, app, cap, attr_cmd, rule, comp,
                        f"case 1 on attribute/command {attr_cmd}",
                    ))
                    break
        if value != _NA and not _is_attr_cmd(kb, cap, value) and not _is_value_of_cap(kb, cap, value):
            for other in kb.capabilities:
                if other != cap and _is_value_of_cap(kb, other, value):
                    found.append(Finding(
                        1, app, cap, value, rule, comp,
                        f"case 1 on value {value}",
                    ))
                    break
    return found


def _case2(fs: FactSet) -> list[Finding]:
    found = []
    for f in fs.facts:
        if f.name != "requestedCapability":
            continue
        app, cap = f.args
        if cap == _NA:
            continue
        mentioned = False
        for g in fs.facts:
            if g.name == "device_capability" and g.args[0] == "desc" and g.args[2] == cap:
                mentioned = True
                break
        if not mentioned:
            found.append(Finding(2, app, cap, detail=f"case 2 on {cap}"))
    return found


def _case3(fs: FactSet, clauses: frozenset) -> list[Finding]:
    found = []
    if "a" in clauses:
        for f in fs.facts:
            if f.name != "actionComposition" or f.args[0] != "code":
                continue
            _, app, rule, comp, cap, attr_cmd, value = f.args
            matched = False
            for g in fs.facts:
                if (
                    g.name == "actionComposition" and g.args[0] == "desc"
                    and g.args[1] == app and g.args[4:] == (cap, attr_cmd, value)
                ):
                    matched = True
                    break
            if matched:
                continue
            if cap == _NA and attr_cmd == _NA and value == _NA:
                continue
            if attr_cmd == _NA and value == _NA:
                has_desc_action_with_cap = False
                for g in fs.facts:
                    if (
                        g.name == "actionComposition" and g.args[0] == "desc"
                        and g.args[1] == app and g.args[4] == cap
                    ):
                        has_desc_action_with_cap = True
                        break
                if has_desc_action_with_cap:
                    continue
            found.append(Finding(
                3, app, cap, _res(attr_cmd, value), rule, comp,
                "case 3 action not in description",
            ))
    for left_name, clause in (("triggerComposition", "b"), ("conditionComposition", "c")):
        if clause not in clauses:
            continue
        for f in fs.facts:
            if f.name != left_name or f.args[0] != "code":
                continue
            _, app, rule, _comp, lc, la, lv = f.args
            if lc == _NA or la == _NA or lv == _NA:
                continue
            for g in fs.facts:
                if g.name != "actionComposition" or g.args[0] != "code":
                    continue
                if g.args[1] != app or g.args[2] != rule:
                    continue
                acomp = g.args[3]
                atup = g.args[4:]
                described = False
                for dl in fs.facts:
                    if (
                        dl.name != left_name or dl.args[0] != "desc"
                        or dl.args[1] != app or dl.args[4:] != (lc, la, lv)
                    ):
                        continue
                    for da in fs.facts:
                        if (
                            da.name == "actionComposition" and da.args[0] == "desc"
                            and da.args[1] == app and da.args[2] == dl.args[2]
                            and da.args[4:] == atup
                        ):
                            described = True
                            break
                    if described:
                        break
                if not described:
                    found.append(Finding(
                        3, app, atup[0], _res(atup[1], atup[2]), rule, acomp,
                        f"case 3 combination via {left_name}",
                    ))
    return found


def _res(attr_cmd: str, value: str) -> str | None:
    if attr_cmd != _NA:
        return attr_cmd
    if value != _NA:
        return value
    return None
