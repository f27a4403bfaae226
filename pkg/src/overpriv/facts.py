"""Relational fact schema and the three extraction stages.

Facts are ground tuples `name(arg,...)` with source `desc` or `code`
(requestedCapability carries no source). Rule ids restart at 1 per app and
source; trigger/condition/action ids are numbered globally per source so
they never reset mid-app.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .annotate import AnnotatedRule, RuleComponent
from .kb import NA, CapabilityKB, is_dual_role
from .parser import SmartAppAst, Stmt, extract_subscriptions, resolve_device_capability

SOURCE_DESC = "desc"
SOURCE_CODE = "code"

FACT_ARITY = {
    "application": 2,
    "permission_rule": 3,
    "trigger": 3,
    "condition": 3,
    "action": 3,
    "attribute_command": 3,
    "device_capability": 3,
    "value": 3,
    "triggerComposition": 7,
    "conditionComposition": 7,
    "actionComposition": 7,
    "requestedCapability": 2,
}

# call-following depth when a handler delegates to helper methods
INLINE_DEPTH = 3


# relations that describe the capability model itself; they live in the
# capability file, never in an app fact set
_KB_RELATIONS = frozenset({"capability", "attributeCommandOf", "valueOf"})


class FactError(ValueError):
    """Raised for schema violations and fact-file syntax errors."""


@dataclass(frozen=True, order=True)
class Fact:
    name: str
    args: tuple[str, ...]

    def __post_init__(self) -> None:
        arity = FACT_ARITY.get(self.name)
        if arity is None:
            if self.name in _KB_RELATIONS:
                raise FactError(
                    f"{self.name!r} is a capability-model relation, not an app fact"
                )
            raise FactError(f"unknown fact name {self.name!r}")
        if len(self.args) != arity:
            raise FactError(f"{self.name} expects {arity} args, got {len(self.args)}")
        if not all(isinstance(a, str) and a for a in self.args):
            raise FactError(f"{self.name} args must be non-empty strings")


@dataclass(frozen=True)
class FactSet:
    app: str
    facts: tuple[Fact, ...]

    def __post_init__(self) -> None:
        if len(set(self.facts)) != len(self.facts):
            raise FactError("duplicate facts in FactSet")

    def by_name(self, name: str) -> list[Fact]:
        return [f for f in self.facts if f.name == name]


def merge_fact_sets(*sets: FactSet) -> FactSet:
    app = next((s.app for s in sets if s.app), "")
    seen: list[Fact] = []
    have = set()
    for s in sets:
        for f in s.facts:
            if f not in have:
                have.add(f)
                seen.append(f)
    return FactSet(app, tuple(seen))


class _Counters:
    """Global per-source component numbering; rules count separately."""

    def __init__(self) -> None:
        self.rule = 0
        self.kind = {"trigger": 0, "condition": 0, "action": 0}

    def next_rule(self) -> str:
        self.rule += 1
        return f"rule{self.rule}"

    def next_component(self, kind: str) -> str:
        self.kind[kind] += 1
        return f"{kind}{self.kind[kind]}"


def _emit_component(
    facts: list[Fact],
    source: str,
    app: str,
    rule_id: str,
    kind: str,
    comp_id: str,
    cap: str,
    attr_cmd: str,
    value: str,
) -> None:
    facts.append(Fact(kind, (source, rule_id, comp_id)))
    if cap != NA:
        facts.append(Fact("device_capability", (source, comp_id, cap)))
    if attr_cmd != NA:
        facts.append(Fact("attribute_command", (source, comp_id, attr_cmd)))
    if value != NA:
        facts.append(Fact("value", (source, comp_id, value)))
    facts.append(
        Fact(f"{kind}Composition", (source, app, rule_id, comp_id, cap, attr_cmd, value))
    )


def facts_from_description(rules: Iterable[AnnotatedRule], app: str) -> FactSet:
    facts = [Fact("application", (SOURCE_DESC, app))]
    counters = _Counters()
    for rule in rules:
        rule_id = counters.next_rule()
        facts.append(Fact("permission_rule", (SOURCE_DESC, app, rule_id)))
        for comp in rule.actions:
            _emit(facts, SOURCE_DESC, app, rule_id, "action", comp, counters)
        for comp in rule.conditions:
            _emit(facts, SOURCE_DESC, app, rule_id, "condition", comp, counters)
        if rule.trigger is not None:
            _emit(facts, SOURCE_DESC, app, rule_id, "trigger", rule.trigger, counters)
    return FactSet(app, tuple(facts))


def _emit(
    facts: list[Fact],
    source: str,
    app: str,
    rule_id: str,
    kind: str,
    comp: RuleComponent,
    counters: _Counters,
) -> None:
    comp_id = counters.next_component(kind)
    _emit_component(
        facts, source, app, rule_id, kind, comp_id,
        comp.capability, comp.attribute_command, comp.value,
    )


def facts_from_preferences(ast: SmartAppAst, app: str | None = None) -> FactSet:
    app = app if app is not None else ast.meta.name
    facts: list[Fact] = []
    seen: set[str] = set()
    for decl in ast.inputs:
        if decl.capability not in seen:
            seen.add(decl.capability)
            facts.append(Fact("requestedCapability", (app, decl.capability)))
    return FactSet(app, tuple(facts))


def facts_from_code(ast: SmartAppAst, kb: CapabilityKB, app: str | None = None) -> FactSet:
    app = app if app is not None else ast.meta.name
    facts = [Fact("application", (SOURCE_CODE, app))]
    counters = _Counters()
    for sub in extract_subscriptions(ast):
        rule_id = counters.next_rule()
        facts.append(Fact("permission_rule", (SOURCE_CODE, app, rule_id)))
        cap = resolve_device_capability(ast, sub.device_id) or NA
        attr_cmd = sub.attribute or NA
        value = sub.value if sub.value else NA
        if value == NA and attr_cmd != NA and is_dual_role(kb, attr_cmd):
            value = attr_cmd
        comp_id = counters.next_component("trigger")
        _emit_component(facts, SOURCE_CODE, app, rule_id, "trigger", comp_id, cap, attr_cmd, value)
        handler = ast.methods.get(sub.handler)
        if handler:
            _walk_handler(facts, ast, kb, app, rule_id, handler, counters, (sub.handler,))
    return FactSet(app, tuple(facts))


def _walk_handler(
    facts: list[Fact],
    ast: SmartAppAst,
    kb: CapabilityKB,
    app: str,
    rule_id: str,
    stmts: Iterable[Stmt],
    counters: _Counters,
    stack: tuple[str, ...],
) -> None:
    for st in stmts:
        if st.kind == "condition":
            cap = resolve_device_capability(ast, st.device_id) or NA
            attr_cmd, value = st.name or NA, st.value or NA
            # the compared word lands in both slots when it is both an
            # attribute/command and a value; the positional attribute yields
            if value != NA and is_dual_role(kb, value):
                attr_cmd = value
            comp_id = counters.next_component("condition")
            _emit_component(
                facts, SOURCE_CODE, app, rule_id, "condition", comp_id, cap, attr_cmd, value
            )
            _walk_handler(facts, ast, kb, app, rule_id, st.body, counters, stack)
        elif st.kind in ("device_call", "device_property"):
            cap = resolve_device_capability(ast, st.device_id) or NA
            attr_cmd, value = st.name or NA, NA
            if attr_cmd != NA and is_dual_role(kb, attr_cmd):
                value = attr_cmd
            comp_id = counters.next_component("action")
            _emit_component(
                facts, SOURCE_CODE, app, rule_id, "action", comp_id, cap, attr_cmd, value
            )
        else:
            if st.body:
                _walk_handler(facts, ast, kb, app, rule_id, st.body, counters, stack)
            callee = st.name
            if (
                callee
                and callee != "subscribe"
                and callee in ast.methods
                and callee not in stack
                and len(stack) <= INLINE_DEPTH
            ):
                _walk_handler(
                    facts, ast, kb, app, rule_id,
                    ast.methods[callee], counters, stack + (callee,),
                )


_BARE_ATOM = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_FACT_LINE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\((.*)\)\.\Z")


def _atom(arg: str) -> str:
    if _BARE_ATOM.match(arg) or arg == "_":
        return arg
    return "'" + arg.replace("'", "''") + "'"


def serialize_facts_text(fs: FactSet) -> str:
    lines = []
    if fs.app:
        lines.append(f"% app: {_atom(fs.app)}")
    lines.extend(f"{f.name}({','.join(_atom(a) for a in f.args)})." for f in fs.facts)
    return "\n".join(lines) + "\n"


def serialize_facts(fs: FactSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_facts_text(fs))


def parse_facts(path) -> FactSet:
    with open(path, encoding="utf-8") as fh:
        return parse_facts_text(fh.read(), str(path))


def parse_facts_text(text: str, origin: str = "<string>") -> FactSet:
    facts: list[Fact] = []
    app = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("% app:"):
            app = _parse_atom(line[len("% app:") :].strip(), origin, lineno)
            continue
        if not line or line.startswith("%"):
            continue
        if line.startswith("/*") and line.endswith("*/"):
            continue
        m = _FACT_LINE.match(line)
        if not m:
            raise FactError(f"{origin}:{lineno}: not a fact line: {line!r}")
        name, argtext = m.group(1), m.group(2)
        try:
            args = tuple(_split_args(argtext, origin, lineno))
            facts.append(Fact(name, args))
        except FactError as exc:
            raise FactError(f"{origin}:{lineno}: {exc}") from None
    if not app:
        app = _recover_app(facts)
    return FactSet(app, tuple(facts))


def _split_args(argtext: str, origin: str, lineno: int) -> list[str]:
    args: list[str] = []
    i, n = 0, len(argtext)
    while i < n:
        while i < n and argtext[i] in " \t":
            i += 1
        if i >= n:
            break
        if argtext[i] == "'":
            j = i + 1
            out = []
            while j < n:
                if argtext[j] == "'" and j + 1 < n and argtext[j + 1] == "'":
                    out.append("'")
                    j += 2
                elif argtext[j] == "'":
                    break
                else:
                    out.append(argtext[j])
                    j += 1
            else:
                raise FactError(f"{origin}:{lineno}: unterminated quoted atom")
            args.append("".join(out))
            i = j + 1
        else:
            j = i
            while j < n and argtext[j] not in ",":
                j += 1
            token = argtext[i:j].strip()
            if not (_BARE_ATOM.match(token) or token == "_"):
                raise FactError(f"{origin}:{lineno}: bad atom {token!r}")
            args.append(token)
            i = j
        while i < n and argtext[i] in " \t":
            i += 1
        if i < n:
            if argtext[i] != ",":
                raise FactError(f"{origin}:{lineno}: expected ',' in arguments")
            i += 1
    return args


def _parse_atom(token: str, origin: str, lineno: int) -> str:
    if token.startswith("'") and token.endswith("'") and len(token) >= 2:
        return token[1:-1].replace("''", "'")
    if _BARE_ATOM.match(token):
        return token
    raise FactError(f"{origin}:{lineno}: bad atom {token!r}")


def _recover_app(facts: list[Fact]) -> str:
    for f in facts:
        if f.name == "application":
            return f.args[1]
    for f in facts:
        if f.name in ("permission_rule", "triggerComposition", "conditionComposition", "actionComposition"):
            return f.args[1]
    for f in facts:
        if f.name == "requestedCapability":
            return f.args[0]
    return ""
