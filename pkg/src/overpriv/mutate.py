"""Labeled over-privilege mutants, a synthetic corpus, and the scoring harness.

Each injector takes benign source, plants exactly one over-privilege of its
case, and returns the mutant together with the finding signature a detector
is expected to raise. evaluate() scores any findings stream against a list
of such records plus the benign remainder of the corpus.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable

from .annotate import Lexicon, annotate_description, load_default_lexicon
from .engine import Finding
from .kb import NA, CapabilityKB, is_dual_role, value_of_attribute_of
from .parser import SmartAppAst, Stmt, extract_subscriptions, parse_app, resolve_device_capability


class MutationError(ValueError):
    pass


class NoEligibleSiteError(MutationError):
    pass


class NoEligibleCapabilityError(MutationError):
    pass


class CorpusMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class MutantRecord:
    app: str
    case: int
    capability: str
    resource: str | None
    site: tuple[int, int]  # 1-based line span of the injected text
    seed_source: str
    mutated_source: str

    def __post_init__(self) -> None:
        if self.mutated_source == self.seed_source:
            raise MutationError("mutant identical to seed")


def _splice(source: str, offset: int, text: str) -> tuple[str, tuple[int, int]]:
    mutated = source[:offset] + text + source[offset:]
    lead = len(text) - len(text.lstrip("\n"))
    start = source[:offset].count("\n") + 1 + lead
    end = start + text.strip("\n").count("\n")
    return mutated, (start, end)


def _app_name(ast: SmartAppAst) -> str:
    return ast.meta.name or "unnamedApp"


def _subscription_handlers(ast: SmartAppAst) -> list[str]:
    return sorted({s.handler for s in extract_subscriptions(ast)} & set(ast.methods))


def inject_case1(source: str, kb: CapabilityKB, seed: int) -> MutantRecord:
    ast = parse_app(source)
    handlers = _subscription_handlers(ast)
    if not handlers:
        raise NoEligibleSiteError("no subscribed handler method to extend")
    candidates = []
    for decl in ast.inputs:
        own = kb.attr_cmd_of.get(decl.capability)
        if decl.capability not in kb.capabilities or own is None:
            continue
        foreign = set()
        for other, cmds in kb.attr_cmd_of.items():
            if other != decl.capability:
                foreign.update(cmd for cmd in cmds if cmd not in own)
        for cmd in sorted(foreign):
            candidates.append((decl.device_id, decl.capability, cmd))
    if not candidates:
        raise NoEligibleSiteError("no input device with a foreign command available")
    rng = random.Random(seed)
    handler = rng.choice(handlers)
    device_id, capability, cmd = rng.choice(sorted(set(candidates)))
    close = ast.method_body_spans[handler][1]
    mutated, site = _splice(source, close, f"\n\t{device_id}?.{cmd}()")
    return MutantRecord(
        app=_app_name(ast), case=1, capability=capability, resource=cmd,
        site=site, seed_source=source, mutated_source=mutated,
    )


def inject_case2(
    source: str, kb: CapabilityKB, seed: int, lexicon: Lexicon | None = None
) -> MutantRecord:
    ast = parse_app(source)
    if ast.preferences_span is None:
        raise NoEligibleSiteError("app has no preferences block")
    lex = lexicon if lexicon is not None else load_default_lexicon(kb)
    desc_caps = _described_capabilities(ast, lex)
    requested = {d.capability for d in ast.inputs}
    eligible = sorted(kb.capabilities - desc_caps - requested)
    if not eligible:
        raise NoEligibleCapabilityError("every capability is already described or requested")
    capability = random.Random(seed).choice(eligible)
    device_id = _fresh_input_id(ast)
    close = ast.preferences_span[1]
    text = f'\n\tsection("") {{\n\t\tinput "{device_id}", "capability.{capability}", multiple: true\n\t}}\n'
    mutated, site = _splice(source, close, text)
    return MutantRecord(
        app=_app_name(ast), case=2, capability=capability, resource=None,
        site=site, seed_source=source, mutated_source=mutated,
    )


def inject_case3(
    source: str, kb: CapabilityKB, seed: int, lexicon: Lexicon | None = None
) -> MutantRecord:
    ast = parse_app(source)
    lex = lexicon if lexicon is not None else load_default_lexicon(kb)
    desc_actions = set()
    for rule in annotate_description(ast.meta.description, lex):
        for comp in rule.actions:
            desc_actions.add((comp.capability, comp.attribute_command, comp.value))
    candidates = []
    for st in _reachable_device_calls(ast):
        cap = resolve_device_capability(ast, st.device_id)
        if cap is None or cap not in kb.capabilities or not st.name:
            continue
        for sibling in sorted(kb.attr_cmd_of.get(cap, frozenset()) - {st.name}):
            value = sibling if is_dual_role(kb, sibling) else NA
            if (cap, sibling, value) in desc_actions:
                continue
            # avoid smuggling a case-1 value along with the case-3 action
            if value != NA and not value_of_attribute_of(kb, cap, value):
                continue
            candidates.append((st.span.start, st.span.end, st.device_id, cap, sibling))
    if not candidates:
        raise NoEligibleSiteError("no actuated command with an undescribed sibling")
    start, end, device_id, capability, sibling = random.Random(seed).choice(sorted(set(candidates)))
    line_start = source.rfind("\n", 0, start) + 1
    indent = source[line_start : line_start + (len(source[line_start:]) - len(source[line_start:].lstrip(" \t")))]
    mutated, site = _splice(source, end, f"\n{indent}{device_id}?.{sibling}()")
    return MutantRecord(
        app=_app_name(ast), case=3, capability=capability, resource=sibling,
        site=site, seed_source=source, mutated_source=mutated,
    )


def _described_capabilities(ast: SmartAppAst, lex: Lexicon) -> set[str]:
    caps = set()
    for rule in annotate_description(ast.meta.description, lex):
        components = list(rule.actions) + list(rule.conditions)
        if rule.trigger is not None:
            components.append(rule.trigger)
        caps.update(c.capability for c in components)
    caps.discard(NA)
    return caps


def _fresh_input_id(ast: SmartAppAst) -> str:
    taken = {d.device_id for d in ast.inputs}
    if "sensor" not in taken:
        return "sensor"
    n = 2
    while f"sensor{n}" in taken:
        n += 1
    return f"sensor{n}"


def _reachable_device_calls(ast: SmartAppAst) -> list[Stmt]:
    out: list[Stmt] = []
    seen_spans = set()
    for sub in extract_subscriptions(ast):
        stmts = ast.methods.get(sub.handler)
        if stmts:
            _collect_calls(ast, stmts, (sub.handler,), out, seen_spans)
    out.sort(key=lambda st: st.span.start)
    return out


def _collect_calls(ast, stmts, stack, out, seen_spans) -> None:
    for st in stmts:
        if st.kind == "device_call":
            key = (st.span.start, st.span.end)
            if key not in seen_spans:
                seen_spans.add(key)
                out.append(st)
        if st.body:
            _collect_calls(ast, st.body, stack, out, seen_spans)
        elif (
            st.kind == "other"
            and st.name
            and st.name != "subscribe"
            and st.name in ast.methods
            and st.name not in stack
            and len(stack) <= 3
        ):
            _collect_calls(ast, ast.methods[st.name], stack + (st.name,), out, seen_spans)


@dataclass(frozen=True)
class TruthRecord:
    """Signature-only stand-in for a MutantRecord, e.g. loaded from a manifest."""

    app: str
    case: int
    capability: str
    resource: str | None = None


@dataclass(frozen=True)
class CaseScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float | None:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> float | None:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None


@dataclass(frozen=True)
class AppTally:
    detected_mutants: int = 0
    missed_mutants: int = 0
    flagged_benign: int = 0
    clean_benign: int = 0


@dataclass
class EvalResult:
    cases: dict[int, CaseScore] = field(default_factory=dict)
    cross_case: int = 0
    apps: AppTally = AppTally()


def matches_signature(f: Finding, rec: MutantRecord) -> bool:
    return (
        f.case == rec.case
        and f.capability == rec.capability
        and (rec.resource is None or f.resource == rec.resource)
    )


def evaluate(
    findings: Iterable[Finding],
    truth: Iterable[MutantRecord],
    benign_apps: Iterable[str] = (),
) -> EvalResult:
    truth_by_app: dict[str, MutantRecord] = {}
    for rec in truth:
        if rec.app in truth_by_app:
            raise CorpusMismatchError(f"two mutants claim app {rec.app!r}")
        truth_by_app[rec.app] = rec
    benign = set(benign_apps)
    both = benign & truth_by_app.keys()
    if both:
        raise CorpusMismatchError(f"apps listed as both benign and mutant: {sorted(both)}")

    counts = {1: [0, 0, 0], 2: [0, 0, 0], 3: [0, 0, 0]}  # [tp, fp, fn]
    cross = 0
    detected: set[str] = set()
    flagged: set[str] = set()
    for f in findings:
        rec = truth_by_app.get(f.app)
        if rec is not None:
            if matches_signature(f, rec):
                counts[f.case][0] += 1
                detected.add(f.app)
            elif f.case == rec.case:
                counts[f.case][1] += 1
            else:
                cross += 1
        elif f.app in benign:
            counts[f.case][1] += 1
            flagged.add(f.app)
        else:
            raise CorpusMismatchError(f"finding for app {f.app!r} outside the corpus")
    for app, rec in truth_by_app.items():
        if app not in detected:
            counts[rec.case][2] += 1
    return EvalResult(
        cases={c: CaseScore(*counts[c]) for c in (1, 2, 3)},
        cross_case=cross,
        apps=AppTally(
            detected_mutants=len(detected),
            missed_mutants=len(truth_by_app) - len(detected),
            flagged_benign=len(flagged),
            clean_benign=len(benign) - len(flagged),
        ),
    )


# --- synthetic corpus -------------------------------------------------------

@dataclass(frozen=True)
class Template:
    title: str
    cases: tuple[int, ...]
    body: str

    def build(self, name: str, filler: str) -> str:
        return self.body.replace("@NAME@", name) + filler


_TEMPLATES = (
    Template(
        "Motion Light",
        (1, 2, 3),
        '''definition(
    name: "@NAME@",
    namespace: "synthetic",
    author: "Corpus Generator",
    description: "Turn the lights on when motion is active if the switch is off.")

preferences {
    section("Devices") {
        input "themotion", "capability.motionSensor"
        input "theswitch", "capability.switch"
    }
}

def installed() {
    initialize()
}

def updated() {
    unsubscribe()
    initialize()
}

def initialize() {
    subscribe(themotion, "motion.active", motionHandler)
}

def motionHandler(evt) {
    if (theswitch.currentValue("switch") == "off") {
        theswitch.on()
    }
}
''',
    ),
    Template(
        "Arrival Lock",
        (1, 2, 3),
        '''definition(
    name: "@NAME@",
    namespace: "synthetic",
    author: "Corpus Generator",
    description: "Lock the door when presence is present.")

preferences {
    section("Presence") {
        input "thepresence", "capability.presenceSensor"
    }
    section("Lock") {
        input "thelock", "capability.lock"
    }
}

def installed() {
    subscribe(thepresence, "presence.present", presenceHandler)
}

def presenceHandler(evt) {
    thelock.lock()
}
''',
    ),
    Template(
        "Contact Notifier",
        (1, 2),
        '''definition(
    name: "@NAME@",
    namespace: "synthetic",
    author: "Corpus Generator",
    description: "Notify me when the contact opens.")

preferences {
    section("Door") {
        input "thecontact", "capability.contactSensor"
    }
}

def installed() {
    subscribe(thecontact, "contact.open", contactHandler)
}

def contactHandler(evt) {
    sendPush("The door opened")
}
''',
    ),
    Template(
        "Leak Guard",
        (1, 2, 3),
        '''definition(
    name: "@NAME@",
    namespace: "synthetic",
    author: "Corpus Generator",
    description: "Turn the pump off when water is wet.")

preferences {
    section("Leak sensor") {
        input "thewater", "capability.waterSensor"
    }
    section("Pump") {
        input "thepump", "capability.switch"
    }
}

def installed() {
    subscribe(thewater, "water.wet", waterHandler)
}

def waterHandler(evt) {
    thepump.off()
}
''',
    ),
    Template(
        "Smoke Siren",
        (1, 2, 3),
        '''definition(
    name: "@NAME@",
    namespace: "synthetic",
    author: "Corpus Generator",
    description: "Sound the alarm siren when smoke is detected.")

preferences {
    section("Smoke") {
        input "thesmoke", "capability.smokeDetector"
    }
    section("Alarm") {
        input "thealarm", "capability.alarm"
    }
}

def installed() {
    subscribe(thesmoke, "smoke.detected", smokeHandler)
}

def smokeHandler(evt) {
    thealarm.siren()
}
''',
    ),
)


@dataclass(frozen=True)
class CorpusApp:
    name: str
    source: str
    mutant: MutantRecord | None


def generate_corpus(
    count: int,
    seed: int,
    kb: CapabilityKB,
    lexicon: Lexicon | None = None,
    mutant_fraction: float = 0.35,
) -> list[CorpusApp]:
    """Deterministic benign/mutant mix built from the five app templates."""
    lex = lexicon if lexicon is not None else load_default_lexicon(kb)
    rng = random.Random(seed)
    injectors = {1: inject_case1, 2: inject_case2, 3: inject_case3}
    apps: list[CorpusApp] = []
    for i in range(count):
        template = _TEMPLATES[i % len(_TEMPLATES)]
        name = f"{template.title} {i:03d}"
        source = template.build(name, _filler(rng))
        if rng.random() < mutant_fraction:
            case = rng.choice(template.cases)
            inject = injectors[case]
            sub_seed = rng.randrange(2**31)
            if case == 1:
                rec = inject(source, kb, sub_seed)
            else:
                rec = inject(source, kb, sub_seed, lexicon=lex)
            apps.append(CorpusApp(name, rec.mutated_source, rec))
        else:
            apps.append(CorpusApp(name, source, None))
    return apps


def _filler(rng: random.Random) -> str:
    # unreferenced housekeeping methods pad LOC without adding facts
    chunks = []
    for j in range(rng.randint(0, 6)):
        lines = [f"def tidy{j}() {{"]
        for k in range(rng.randint(1, 3)):
            lines.append(f'    log.trace "tidy pass {j}.{k}"')
        lines.append("}")
        chunks.append("\n".join(lines))
    return ("\n" + "\n\n".join(chunks) + "\n") if chunks else ""
