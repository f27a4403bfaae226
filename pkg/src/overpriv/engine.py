"""Over-privilege detection over a FactSet.

Three checks, each a stratified negation-as-failure rule over the finite
fact base, evaluated with plain indexed loops:

  case 1: a code composition uses a resource owned by a different capability
  case 2: a requested capability never implied by the description
  case 3: code actions (alone or combined with their trigger/condition) that
          the description does not mention

Findings never carry capability na; case-1 findings always carry a resource.
Duplicate proofs collapse on (case, capability, resource, component id).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .annotate import Lexicon, annotate_description
from .facts import FactSet, facts_from_code, facts_from_description, facts_from_preferences, merge_fact_sets
from .kb import NA, CapabilityKB, attribute_command_of, value_of_attribute_of
from .parser import parse_app

CASE3_CLAUSES = ("a", "b", "c")


@dataclass(frozen=True)
class Finding:
    case: int
    app: str
    capability: str
    resource: str | None = None
    rule_id: str | None = None
    component_id: str | None = None
    detail: str = ""

    def sort_key(self):
        return (
            self.case,
            self.app,
            self.capability,
            self.resource or "",
            self.rule_id or "",
            self.component_id or "",
            self.detail,
        )

    def dedup_key(self):
        return (self.case, self.capability, self.resource, self.component_id)


def _finish(findings: list[Finding]) -> list[Finding]:
    findings = [f for f in findings if f.capability != NA]
    findings.sort(key=Finding.sort_key)
    out: list[Finding] = []
    seen = set()
    for f in findings:
        k = f.dedup_key()
        if k not in seen:
            seen.add(k)
            out.append(f)
    return out


def _code_compositions(fs: FactSet):
    for f in fs.facts:
        if f.name in ("triggerComposition", "conditionComposition", "actionComposition"):
            if f.args[0] == "code":
                yield f.name[: -len("Composition")], f.args


def check_case1(kb: CapabilityKB, fs: FactSet) -> list[Finding]:
    findings: list[Finding] = []
    for kind, (source, app, rule, comp, cap, attr_cmd, value) in _code_compositions(fs):
        if cap == NA:
            continue
        if attr_cmd != NA and cap in kb.capabilities and not attribute_command_of(kb, cap, attr_cmd):
            owners = sorted(
                c2 for c2 in kb.capabilities
                if c2 != cap and attribute_command_of(kb, c2, attr_cmd)
            )
            if owners:
                findings.append(Finding(
                    1, app, cap, attr_cmd, rule, comp,
                    f"{kind} uses {attr_cmd}, an attribute/command of "
                    f"{', '.join(owners)}, not of {cap}",
                ))
        if (
            value != NA
            and not attribute_command_of(kb, cap, value)
            and not value_of_attribute_of(kb, cap, value)
        ):
            owners = sorted(
                c2 for c2 in kb.capabilities
                if c2 != cap and value_of_attribute_of(kb, c2, value)
            )
            if owners:
                findings.append(Finding(
                    1, app, cap, value, rule, comp,
                    f"{kind} uses value {value}, which belongs to "
                    f"{', '.join(owners)}, not to {cap}",
                ))
    return _finish(findings)


def check_case2(fs: FactSet) -> list[Finding]:
    desc_caps = {
        f.args[2] for f in fs.facts
        if f.name == "device_capability" and f.args[0] == "desc"
    }
    findings = []
    for f in fs.facts:
        if f.name != "requestedCapability":
            continue
        app, cap = f.args
        if cap != NA and cap not in desc_caps:
            findings.append(Finding(
                2, app, cap,
                detail=f"preferences request {cap} but the description never implies it",
            ))
    return _finish(findings)


def check_case3(fs: FactSet, clauses=CASE3_CLAUSES) -> list[Finding]:
    clauses = frozenset(clauses)
    desc_actions: set[tuple] = set()
    desc_action_caps: set[tuple[str, str]] = set()
    desc_rules: dict[tuple[str, str], dict[str, list]] = {}
    code_rules: dict[tuple[str, str], dict[str, list]] = {}
    code_actions = []
    for f in fs.facts:
        if f.name in ("triggerComposition", "conditionComposition", "actionComposition"):
            kind = f.name[: -len("Composition")]
            source, app, rule, comp, cap, attr_cmd, value = f.args
            tup = (cap, attr_cmd, value)
            if source == "desc":
                group = desc_rules.setdefault((app, rule), {"trigger": [], "condition": [], "action": []})
                group[kind].append(tup)
                if kind == "action":
                    desc_actions.add((app, tup))
                    desc_action_caps.add((app, cap))
            else:
                group = code_rules.setdefault((app, rule), {"trigger": [], "condition": [], "action": []})
                group[kind].append((comp, tup))
                if kind == "action":
                    code_actions.append((app, rule, comp, tup))

    # all (trigger|condition, action) pairs the description states, per app
    desc_pairs = {"trigger": set(), "condition": set()}
    for (app, _rule), groups in desc_rules.items():
        for kind in ("trigger", "condition"):
            for left in groups[kind]:
                for act in groups["action"]:
                    desc_pairs[kind].add((app, left, act))

    findings: list[Finding] = []
    if "a" in clauses:
        for app, rule, comp, (cap, attr_cmd, value) in code_actions:
            if (app, (cap, attr_cmd, value)) in desc_actions:
                continue
            if cap == NA and attr_cmd == NA and value == NA:
                continue
            if attr_cmd == NA and value == NA and (app, cap) in desc_action_caps:
                continue
            findings.append(Finding(
                3, app, cap, _resource(attr_cmd, value), rule, comp,
                f"code action ({cap},{attr_cmd},{value}) does not appear in the description",
            ))
    for kind, clause in (("trigger", "b"), ("condition", "c")):
        if clause not in clauses:
            continue
        for (app, rule), groups in code_rules.items():
            for _, left in groups[kind]:
                if NA in left:
                    continue
                for comp, act in groups["action"]:
                    if (app, left, act) in desc_pairs[kind]:
                        continue
                    cap, attr_cmd, value = act
                    findings.append(Finding(
                        3, app, cap, _resource(attr_cmd, value), rule, comp,
                        f"{kind} {left} combined with action ({cap},{attr_cmd},{value}) "
                        "is not a described pairing",
                    ))
    return _finish(findings)


def _resource(attr_cmd: str, value: str) -> str | None:
    if attr_cmd != NA:
        return attr_cmd
    if value != NA:
        return value
    return None


@dataclass
class AnalysisReport:
    app: str
    findings: list[Finding]
    facts: FactSet
    warnings: list[str] = field(default_factory=list)
    loc: int = 0
    seconds: float = 0.0


def analyze_app(
    kb: CapabilityKB,
    lex: Lexicon,
    source: str,
    cases=(1, 2, 3),
    case3_clauses=CASE3_CLAUSES,
) -> AnalysisReport:
    started = time.perf_counter()
    ast = parse_app(source)
    app = ast.meta.name or "unnamedApp"
    rules = annotate_description(ast.meta.description, lex)
    fs = merge_fact_sets(
        facts_from_description(rules, app),
        facts_from_preferences(ast, app),
        facts_from_code(ast, kb, app),
    )
    findings: list[Finding] = []
    if 1 in cases:
        findings.extend(check_case1(kb, fs))
    if 2 in cases:
        findings.extend(check_case2(fs))
    if 3 in cases:
        findings.extend(check_case3(fs, case3_clauses))
    findings.sort(key=Finding.sort_key)
    return AnalysisReport(
        app=app,
        findings=findings,
        facts=fs,
        warnings=list(ast.warnings),
        loc=len(source.splitlines()),
        seconds=time.perf_counter() - started,
    )


def finding_to_dict(f: Finding) -> dict:
    return {
        "case": f.case,
        "app": f.app,
        "ruleId": f.rule_id,
        "componentId": f.component_id,
        "capability": f.capability,
        "resource": f.resource,
        "detail": f.detail,
    }


def findings_to_jsonl(findings) -> str:
    import json

    return "".join(
        json.dumps(finding_to_dict(f), sort_keys=True, separators=(",", ":")) + "\n"
        for f in findings
    )


def findings_table(findings) -> str:
    headers = ("case", "app", "rule", "component", "capability", "resource", "detail")
    rows = [
        (
            str(f.case), f.app, f.rule_id or "-", f.component_id or "-",
            f.capability, f.resource or "-", f.detail,
        )
        for f in findings
    ]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(headers))).rstrip(),
    ]
    lines.extend(
        "  ".join(r[i].ljust(widths[i]) for i in range(len(headers))).rstrip() for r in rows
    )
    return "\n".join(lines) + "\n"
