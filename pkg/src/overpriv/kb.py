"""Capability model: which attributes/commands belong to which capability,
and which values an attribute can take.

The model is loaded from a plain-text file with one relation per line:

    capability -> attributeOrCommand
    attributeOrCommand => value

``#`` starts a comment. Names are case-sensitive. Attributes and commands
are deliberately not distinguished (one merged relation); the value relation
is keyed by attribute/command name, not by capability.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

NA = "na"


class KBError(ValueError):
    """Raised for malformed, duplicated, or reserved-name KB entries."""


@dataclass(frozen=True)
class CapabilityKB:
    capabilities: frozenset[str]
    attr_cmd_of: Mapping[str, frozenset[str]]
    value_of: Mapping[str, frozenset[str]]

    def __post_init__(self) -> None:
        for cap in self.attr_cmd_of:
            if cap not in self.capabilities:
                raise KBError(f"attr_cmd_of key {cap!r} is not a capability")
        owned = set()
        for members in self.attr_cmd_of.values():
            owned.update(members)
        for attr in self.value_of:
            if attr not in owned:
                raise KBError(
                    f"value_of key {attr!r} is not an attribute/command of any capability"
                )
        for name in self._all_names():
            if name == NA:
                raise KBError(f"reserved sentinel {NA!r} used as a KB name")

    def _all_names(self) -> Iterable[str]:
        yield from self.capabilities
        for cap, members in self.attr_cmd_of.items():
            yield from members
        for attr, values in self.value_of.items():
            yield from values


def load_kb(path) -> CapabilityKB:
    """Parse a KB file. Raises KBError with a line number on bad input."""
    with open(path, encoding="utf-8") as fh:
        return _parse_kb(fh.read(), str(path))


def load_kb_text(text: str, origin: str = "<string>") -> CapabilityKB:
    return _parse_kb(text, origin)


def load_default_kb() -> CapabilityKB:
    data = resources.files("overpriv.data").joinpath("capabilities.kb").read_text("utf-8")
    return _parse_kb(data, "bundled capabilities.kb")


def _parse_kb(text: str, origin: str) -> CapabilityKB:
    capabilities: set[str] = set()
    attr_cmd: dict[str, set[str]] = {}
    values: dict[str, set[str]] = {}
    seen_lines: set[tuple[str, str, str]] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=>" in line:
            left, _, right = line.partition("=>")
            rel = "value"
        elif "->" in line:
            left, _, right = line.partition("->")
            rel = "attrcmd"
        else:
            raise KBError(f"{origin}:{lineno}: expected '->' or '=>' in {line!r}")
        left, right = left.strip(), right.strip()
        if not left or not right or " " in left or " " in right:
            raise KBError(f"{origin}:{lineno}: malformed names in {line!r}")
        if NA in (left, right):
            raise KBError(f"{origin}:{lineno}: reserved sentinel 'na' used as a name")
        key = (rel, left, right)
        if key in seen_lines:
            raise KBError(f"{origin}:{lineno}: duplicate entry {line!r}")
        seen_lines.add(key)
        if rel == "attrcmd":
            capabilities.add(left)
            attr_cmd.setdefault(left, set()).add(right)
        else:
            values.setdefault(left, set()).add(right)

    kb = CapabilityKB(
        capabilities=frozenset(capabilities),
        attr_cmd_of={c: frozenset(m) for c, m in attr_cmd.items()},
        value_of={a: frozenset(v) for a, v in values.items()},
    )
    return kb


def attribute_command_of(kb: CapabilityKB, cap: str, res: str) -> bool:
    """True iff res is an attribute/command of cap. Unknown names are False."""
    return res in kb.attr_cmd_of.get(cap, frozenset())


def value_of_attribute_of(kb: CapabilityKB, cap: str, val: str) -> bool:
    """True iff some attribute of cap can take the value val."""
    for attr in kb.attr_cmd_of.get(cap, frozenset()):
        if val in kb.value_of.get(attr, frozenset()):
            return True
    return False


def owners_of_resource(kb: CapabilityKB, res: str) -> set[str]:
    """Every capability owning res as an attribute/command or as a value of
    one of its attributes. Sort before serializing; the set itself is unordered."""
    owners = set()
    for cap in kb.capabilities:
        if attribute_command_of(kb, cap, res) or value_of_attribute_of(kb, cap, res):
            owners.add(cap)
    return owners


def is_dual_role(kb: CapabilityKB, name: str) -> bool:
    """A name that is both an attribute/command (of any capability) and a value
    (of any attribute). Extraction fills such a name into both slots."""
    is_ac = any(name in members for members in kb.attr_cmd_of.values())
    is_val = any(name in vals for vals in kb.value_of.values())
    return is_ac and is_val
