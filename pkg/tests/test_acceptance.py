"""End-to-end checks of the shipped behaviors: golden fact extractions from
description, code, and preferences; detection correctness on recorded fact
bases; mutation round trips on the reference app; metric arithmetic; engine
equivalence against the brute-force oracle; corpus-scale performance; and
report determinism across worker counts."""

import random
import time

import pytest

from factgen import finding_view, random_fact_set
from overpriv.annotate import annotate_description
from overpriv.cli import RunConfig, cmd_analyze, cmd_bench
from overpriv.engine import Finding, analyze_app, check_case1, check_case2, check_case3
from overpriv.facts import (
    facts_from_code,
    facts_from_description,
    facts_from_preferences,
    parse_facts_text,
)
from overpriv.kb import load_kb_text
from overpriv.mutate import CaseScore, TruthRecord, evaluate, generate_corpus
from overpriv.oracle import brute_force_oracle
from overpriv.parser import parse_app


def compositions(fs):
    return [(f.name, f.args) for f in fs.facts if f.name.endswith("Composition")]


def rule_sigs(findings):
    return {(f.case, f.capability, f.resource) for f in findings}


def test_description_extraction_golden(lex):
    started = time.perf_counter()
    rules = annotate_description("Turn your lights on when motion is detected.", lex)
    fs = facts_from_description(rules, "AppName")
    elapsed = time.perf_counter() - started
    assert compositions(fs) == [
        ("actionComposition", ("desc", "AppName", "rule1", "action1", "switch", "on", "on")),
        ("triggerComposition",
         ("desc", "AppName", "rule1", "trigger1", "motionSensor", "motion", "detected")),
    ]
    assert elapsed < 1.0


def test_code_extraction_golden(kb, fixture_text):
    ast = parse_app(fixture_text("motion_switch_guard.groovy"))
    fs = facts_from_code(ast, kb)
    assert compositions(fs) == [
        ("triggerComposition",
         ("code", "AppName", "rule1", "trigger1", "motionSensor", "motion", "active")),
        ("conditionComposition",
         ("code", "AppName", "rule1", "condition1", "switch", "off", "off")),
        ("actionComposition",
         ("code", "AppName", "rule1", "action1", "switch", "on", "on")),
    ]


def test_preferences_extraction_golden(fixture_text):
    ast = parse_app(fixture_text("prefs_only_switches.groovy"))
    fs = facts_from_preferences(ast, app="App")
    assert [(f.name, f.args) for f in fs.facts] == [
        ("requestedCapability", ("App", "switch")),
    ]


def test_detection_rules_on_recorded_fact_bases(kb, fixture_text):
    # a foreign command in the trigger slot, judged against the capability
    # model the fixture itself records
    mini = load_kb_text(
        "accelerationSensor -> acceleration\n"
        "acceleration => active\n"
        "acceleration => inactive\n"
        "switch -> switch\n"
        "switch -> off\n"
        "switch -> on\n"
        "switch => off\n"
        "switch => on\n"
    )
    app_lines = [
        line for line in fixture_text("foreign_trigger_with_kb.facts").splitlines()
        if not line.startswith(("/*", "capability", "attributeCommandOf", "valueOf"))
        if line.strip()
    ]
    fs = parse_facts_text("\n".join(app_lines))
    assert rule_sigs(check_case1(mini, fs)) == {(1, "accelerationSensor", "on")}
    assert check_case2(fs) == []
    assert check_case3(fs) == []

    # a requested capability the description never mentions
    fs = parse_facts_text(fixture_text("undescribed_request.facts"))
    assert rule_sigs(check_case2(fs)) == {(2, "switch", None)}
    assert check_case1(kb, fs) == []
    assert check_case3(fs) == []

    # a code action the description never declares
    fs = parse_facts_text(fixture_text("undeclared_on_action.facts"))
    assert rule_sigs(check_case3(fs)) == {(3, "switch", "on")}
    assert check_case1(kb, fs) == []
    assert check_case2(fs) == []


def test_mutation_round_trip_on_reference_app(kb, lex, fixture_text):
    seed = analyze_app(kb, lex, fixture_text("big_turn_off.groovy"))
    assert [f for f in seed.findings if f.case == 1] == []
    assert seed.findings == []

    planted_command = analyze_app(kb, lex, fixture_text("big_turn_off_case1.groovy"))
    found = {(f.capability, f.resource) for f in planted_command.findings if f.case == 1}
    assert found == {("switch", "siren")}
    for f in planted_command.findings:
        if f.case != 1:
            # the planted call also surfaces as an undeclared action; that
            # cross-case echo is reported separately, never as extra case 1
            assert (f.case, f.capability, f.resource) == (3, "switch", "siren")

    planted_request = analyze_app(kb, lex, fixture_text("big_turn_off_case2.groovy"))
    assert rule_sigs(planted_request.findings) == {(2, "accelerationSensor", None)}

    planted_action = analyze_app(kb, lex, fixture_text("big_turn_off_case3.groovy"))
    assert rule_sigs(planted_action.findings) == {(3, "switch", "on")}


@pytest.mark.parametrize(
    "case, tp, fp, fn, precision, recall",
    [
        (1, 33, 7, 8, 0.8250, 0.8049),
        (2, 101, 8, 34, 0.9266, 0.7481),
        (3, 39, 8, 32, 0.8298, 0.5493),
        (1, 25, 0, 16, 1.0000, 0.6098),
    ],
)
def test_metric_arithmetic_at_four_decimals(case, tp, fp, fn, precision, recall):
    truth = [TruthRecord(f"t{i}", case, "switch") for i in range(tp)]
    truth += [TruthRecord(f"u{i}", case, "switch") for i in range(fn)]
    findings = [Finding(case=case, app=f"t{i}", capability="switch") for i in range(tp)]
    findings += [Finding(case=case, app=f"b{i}", capability="lock") for i in range(fp)]
    score = evaluate(findings, truth, [f"b{i}" for i in range(fp)]).cases[case]
    assert score == CaseScore(tp, fp, fn)
    assert score.precision == pytest.approx(precision, abs=5e-5)
    assert score.recall == pytest.approx(recall, abs=5e-5)


def test_engine_equals_oracle_on_randomized_fact_sets(kb):
    rng = random.Random(77)
    started = time.perf_counter()
    for i in range(1000):
        fs = random_fact_set(rng, max_facts=200)
        assert len(fs.facts) <= 200
        engine = check_case1(kb, fs) + check_case2(fs) + check_case3(fs)
        oracle = brute_force_oracle(kb, fs)
        assert finding_view(engine) == finding_view(oracle), f"iteration {i}"
    assert time.perf_counter() - started < 60.0


def test_synthetic_corpus_scale_and_recall(kb, lex):
    corpus = generate_corpus(230, seed=2024, kb=kb, lexicon=lex)
    assert len(corpus) == 230
    mutants = [a for a in corpus if a.mutant is not None]
    assert 0 < len(mutants) < 230

    started = time.perf_counter()
    findings = []
    for app in corpus:
        findings.extend(analyze_app(kb, lex, app.source).findings)
    assert time.perf_counter() - started < 60.0

    result = evaluate(
        findings,
        [a.mutant for a in mutants],
        [a.name for a in corpus if a.mutant is None],
    )
    assert result.apps.missed_mutants == 0
    for score in result.cases.values():
        if score.tp + score.fn:
            assert score.recall == 1.0

    _, exponent = cmd_bench(RunConfig(inputs=("<synthetic>",)), (10, 25, 60, 150))
    assert exponent < 1.3


def test_reports_identical_across_worker_counts(tmp_path, kb):
    apps = generate_corpus(20, seed=5, kb=kb, mutant_fraction=0.4)
    corpus_dir = tmp_path / "corpus"
    corpus_dir.mkdir()
    for i, app in enumerate(apps):
        (corpus_dir / f"app{i:02d}.groovy").write_text(app.source, encoding="utf-8")
    serial_code, serial_text, _ = cmd_analyze(RunConfig(inputs=(str(corpus_dir),), jobs=1))
    pooled_code, pooled_text, _ = cmd_analyze(RunConfig(inputs=(str(corpus_dir),), jobs=8))
    assert serial_code == pooled_code
    assert serial_text.encode("utf-8") == pooled_text.encode("utf-8")
