"""Annotates a free-form app description into permission rules.

A lexicon maps surface words to (kind, canonical) entities. Words before the
first trigger indicator form the action span; the span after a trigger
indicator forms the trigger; `and` starts a new rule; a condition marker
(`if`, `unless`) opens a condition span. Within a span the first hit wins
per slot, and a word with several kinds fills each slot it can.

Capability hits emit the canonical name; attribute/command and value hits
emit the surface word (the grammar tags `detected` as the active value but
the extracted fact keeps the word `detected`).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Mapping

from .kb import NA, CapabilityKB

KIND_CAPABILITY = "capability"
KIND_ATTRIBUTE_COMMAND = "attribute_command"
KIND_VALUE = "value"
_KINDS = (KIND_CAPABILITY, KIND_ATTRIBUTE_COMMAND, KIND_VALUE)

MANDATORY_TRIGGER_INDICATORS = frozenset({"when", "whenever", "case"})
MANDATORY_RULE_SPLITTERS = frozenset({"and"})
# description-side condition markers; a fixed choice, not a lexicon field
CONDITION_MARKERS = frozenset({"if", "unless"})

_PUNCTUATION = str.maketrans({c: " " for c in ".,;:!?\"'()"})


class LexiconError(ValueError):
    """Raised for malformed lexicon files or unknown canonical capabilities."""


@dataclass(frozen=True)
class Lexicon:
    trigger_indicators: frozenset[str]
    entity_map: Mapping[str, frozenset[tuple[str, str]]]
    rule_splitters: frozenset[str]


@dataclass(frozen=True)
class RuleComponent:
    capability: str = NA
    attribute_command: str = NA
    value: str = NA

    def is_empty(self) -> bool:
        return self.capability == NA and self.attribute_command == NA and self.value == NA


@dataclass(frozen=True)
class AnnotatedRule:
    trigger: RuleComponent | None
    conditions: tuple[RuleComponent, ...]
    actions: tuple[RuleComponent, ...]


def load_lexicon(path, kb: CapabilityKB) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return _parse_lexicon(fh.read(), kb, str(path))


def load_lexicon_text(text: str, kb: CapabilityKB, origin: str = "<string>") -> Lexicon:
    return _parse_lexicon(text, kb, origin)


def load_default_lexicon(kb: CapabilityKB) -> Lexicon:
    data = resources.files("overpriv.data").joinpath("lexicon.txt").read_text("utf-8")
    return _parse_lexicon(data, kb, "bundled lexicon.txt")


def _parse_lexicon(text: str, kb: CapabilityKB, origin: str) -> Lexicon:
    triggers = set(MANDATORY_TRIGGER_INDICATORS)
    splitters = set(MANDATORY_RULE_SPLITTERS)
    entity_map: dict[str, set[tuple[str, str]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("@"):
            directive, _, word = line.partition(" ")
            word = word.strip().lower()
            if directive == "@trigger" and word:
                triggers.add(word)
            elif directive == "@split" and word:
                splitters.add(word)
            else:
                raise LexiconError(f"{origin}:{lineno}: bad directive {line!r}")
            continue
        parts = [p.strip() for p in line.split(":")]
        if len(parts) != 3 or not all(parts):
            raise LexiconError(f"{origin}:{lineno}: expected 'word : kind : canonical'")
        word, kind, canonical = parts[0].lower(), parts[1], parts[2]
        if kind not in _KINDS:
            raise LexiconError(f"{origin}:{lineno}: unknown kind {kind!r}")
        if kind == KIND_CAPABILITY and canonical not in kb.capabilities:
            raise LexiconError(
                f"{origin}:{lineno}: canonical capability {canonical!r} not in the capability model"
            )
        entity_map.setdefault(word, set()).add((kind, canonical))
    return Lexicon(
        trigger_indicators=frozenset(triggers),
        entity_map={w: frozenset(e) for w, e in entity_map.items()},
        rule_splitters=frozenset(splitters),
    )


class _ComponentBuilder:
    __slots__ = ("capability", "attribute_command", "value")

    def __init__(self) -> None:
        self.capability = NA
        self.attribute_command = NA
        self.value = NA

    def offer(self, entities: frozenset[tuple[str, str]], surface: str) -> None:
        # first hit wins per slot; multi-kind words fill every empty slot they can
        for kind, canonical in sorted(entities):
            if kind == KIND_CAPABILITY and self.capability == NA:
                self.capability = canonical
            elif kind == KIND_ATTRIBUTE_COMMAND and self.attribute_command == NA:
                self.attribute_command = surface
            elif kind == KIND_VALUE and self.value == NA:
                self.value = surface

    def build(self) -> RuleComponent:
        return RuleComponent(self.capability, self.attribute_command, self.value)


class _RuleBuilder:
    def __init__(self) -> None:
        self.trigger: RuleComponent | None = None
        self.conditions: list[RuleComponent] = []
        self.actions: list[RuleComponent] = []
        self._current = _ComponentBuilder()
        self._role = "action"

    def switch(self, role: str) -> None:
        self.close_component()
        self._current = _ComponentBuilder()
        self._role = role

    def offer(self, entities: frozenset[tuple[str, str]], surface: str) -> None:
        self._current.offer(entities, surface)

    def close_component(self) -> None:
        comp = self._current.build()
        if comp.is_empty():
            return
        if self._role == "trigger":
            if self.trigger is None:
                self.trigger = comp
        elif self._role == "condition":
            self.conditions.append(comp)
        else:
            self.actions.append(comp)

    def build(self) -> AnnotatedRule | None:
        self.close_component()
        if self.trigger is None and not self.conditions and not self.actions:
            return None
        return AnnotatedRule(self.trigger, tuple(self.conditions), tuple(self.actions))


def annotate_description(text: str, lex: Lexicon) -> list[AnnotatedRule]:
    """Deterministic, case-insensitive. Unannotatable text yields []."""
    tokens = text.lower().translate(_PUNCTUATION).split()
    rules: list[AnnotatedRule] = []
    builder = _RuleBuilder()
    for word in tokens:
        if word in lex.rule_splitters:
            rule = builder.build()
            if rule is not None:
                rules.append(rule)
            builder = _RuleBuilder()
            continue
        if word in lex.trigger_indicators:
            builder.switch("trigger")
            continue
        if word in CONDITION_MARKERS:
            builder.switch("condition")
            continue
        entities = lex.entity_map.get(word)
        if entities:
            builder.offer(entities, word)
    rule = builder.build()
    if rule is not None:
        rules.append(rule)
    return rules
