"""Random FactSet generator for engine/oracle equivalence runs.

Bounded so the deliberately unindexed oracle stays fast: at most two apps,
three rules per app per source, two components per kind per rule, and a hard
cap near 200 facts. Capability/resource pools mix names the bundled model
knows, names it does not, and the na sentinel so every guard gets exercised.
"""

import random

from overpriv.facts import Fact, FactSet
from overpriv.kb import NA

CAPS = ["switch", "motionSensor", "alarm", "lock", "contactSensor", "ghostCap", NA]
RESOURCES = ["on", "off", "motion", "siren", "contact", "lock", "unlock", "weird", NA]
VALUES = ["on", "off", "active", "inactive", "locked", "siren", "strange", NA]

_KINDS = (
    ("trigger", "triggerComposition"),
    ("condition", "conditionComposition"),
    ("action", "actionComposition"),
)


def random_fact_set(rng: random.Random, max_facts: int = 200) -> FactSet:
    facts = []
    seen = set()

    def add(name, *args):
        fact = Fact(name, tuple(args))
        if fact not in seen:
            seen.add(fact)
            facts.append(fact)

    apps = ["appA"] + (["appB"] if rng.random() < 0.4 else [])
    comp_serial = 0
    for source in ("desc", "code"):
        for app in apps:
            if rng.random() < 0.9:
                add("application", source, app)
            for r in range(rng.randint(0, 3)):
                if len(facts) > max_facts - 20:
                    break
                rule = f"rule{r + 1}"
                add("permission_rule", source, app, rule)
                for kind, comp_name in _KINDS:
                    for _ in range(rng.randint(0, 2)):
                        comp_serial += 1
                        comp = f"{kind}{comp_serial}"
                        cap = rng.choice(CAPS)
                        res = rng.choice(RESOURCES)
                        val = rng.choice(VALUES)
                        add(kind, source, rule, comp)
                        if cap != NA:
                            add("device_capability", source, comp, cap)
                        if res != NA:
                            add("attribute_command", source, comp, res)
                        if val != NA:
                            add("value", source, comp, val)
                        add(comp_name, source, app, rule, comp, cap, res, val)
    for app in apps:
        for cap in rng.sample(CAPS, k=rng.randint(0, 3)):
            add("requestedCapability", app, cap)
    return FactSet("appA", tuple(facts))


def finding_view(findings):
    """Projection used to compare engine and oracle output; the free-text
    detail is the one field allowed to differ."""
    return [
        (f.case, f.app, f.capability, f.resource, f.rule_id, f.component_id)
        for f in findings
    ]
