"""Permission over-privilege analysis for SmartThings-style home automation apps.

Pipeline: parse the app source, annotate its store description, distill both
into a relational fact base, then evaluate three over-privilege rules
against a capability knowledge base.
"""

from .annotate import (
    AnnotatedRule,
    Lexicon,
    LexiconError,
    RuleComponent,
    annotate_description,
    load_default_lexicon,
    load_lexicon,
    load_lexicon_text,
)
from .engine import (
    AnalysisReport,
    Finding,
    analyze_app,
    check_case1,
    check_case2,
    check_case3,
    findings_table,
    findings_to_jsonl,
)
from .facts import (
    Fact,
    FactError,
    FactSet,
    facts_from_code,
    facts_from_description,
    facts_from_preferences,
    merge_fact_sets,
    parse_facts,
    parse_facts_text,
    serialize_facts,
    serialize_facts_text,
)
from .kb import (
    NA,
    CapabilityKB,
    KBError,
    attribute_command_of,
    is_dual_role,
    load_default_kb,
    load_kb,
    load_kb_text,
    owners_of_resource,
    value_of_attribute_of,
)
from .mutate import (
    CaseScore,
    CorpusApp,
    CorpusMismatchError,
    EvalResult,
    MutantRecord,
    MutationError,
    NoEligibleCapabilityError,
    NoEligibleSiteError,
    TruthRecord,
    evaluate,
    generate_corpus,
    inject_case1,
    inject_case2,
    inject_case3,
)
from .oracle import brute_force_oracle
from .parser import (
    AppParseError,
    InputDecl,
    SmartAppAst,
    Subscription,
    extract_subscriptions,
    parse_app,
    resolve_device_capability,
)

__version__ = "0.1.0"

__all__ = [
    "NA",
    "AnalysisReport",
    "AnnotatedRule",
    "AppParseError",
    "CapabilityKB",
    "CaseScore",
    "CorpusApp",
    "CorpusMismatchError",
    "EvalResult",
    "Fact",
    "FactError",
    "FactSet",
    "Finding",
    "InputDecl",
    "KBError",
    "Lexicon",
    "LexiconError",
    "MutantRecord",
    "MutationError",
    "NoEligibleCapabilityError",
    "NoEligibleSiteError",
    "RuleComponent",
    "SmartAppAst",
    "Subscription",
    "TruthRecord",
    "analyze_app",
    "annotate_description",
    "attribute_command_of",
    "brute_force_oracle",
    "check_case1",
    "check_case2",
    "check_case3",
    "evaluate",
    "extract_subscriptions",
    "facts_from_code",
    "facts_from_description",
    "facts_from_preferences",
    "findings_table",
    "findings_to_jsonl",
    "generate_corpus",
    "inject_case1",
    "inject_case2",
    "inject_case3",
    "is_dual_role",
    "load_default_kb",
    "load_default_lexicon",
    "load_kb",
    "load_kb_text",
    "load_lexicon",
    "load_lexicon_text",
    "merge_fact_sets",
    "owners_of_resource",
    "parse_app",
    "parse_facts",
    "parse_facts_text",
    "resolve_device_capability",
    "serialize_facts",
    "serialize_facts_text",
    "value_of_attribute_of",
]
