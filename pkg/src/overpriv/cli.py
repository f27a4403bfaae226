"""Command-line front end: analyze, facts, mutate, eval, bench."""

from __future__ import annotations

import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import click

from .annotate import Lexicon, LexiconError, load_default_lexicon, load_lexicon
from .engine import (
    AnalysisReport,
    Finding,
    analyze_app,
    findings_table,
    findings_to_jsonl,
)
from .facts import FactError, serialize_facts
from .kb import CapabilityKB, KBError, load_default_kb, load_kb
from .mutate import (
    CorpusMismatchError,
    MutationError,
    TruthRecord,
    evaluate,
    generate_corpus,
    inject_case1,
    inject_case2,
    inject_case3,
)
from .parser import AppParseError

_USER_ERRORS = (KBError, LexiconError, AppParseError, FactError, MutationError,
                CorpusMismatchError, OSError, ValueError, json.JSONDecodeError)


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...]
    kb_path: str | None = None
    lexicon_path: str | None = None
    cases: tuple[int, ...] = (1, 2, 3)
    case3_clauses: tuple[str, ...] = ("a", "b", "c")
    fmt: str = "jsonl"
    jobs: int = 1
    seed: int = 0
    out: str | None = None

    def __post_init__(self) -> None:
        if not self.inputs:
            raise ValueError("at least one input path is required")
        if not self.cases:
            raise ValueError("at least one case must be enabled")
        bad = set(self.cases) - {1, 2, 3}
        if bad:
            raise ValueError(f"unknown cases: {sorted(bad)}")
        if set(self.case3_clauses) - {"a", "b", "c"}:
            raise ValueError("case-3 clauses must be drawn from a,b,c")
        if self.fmt not in ("jsonl", "table"):
            raise ValueError(f"unknown format {self.fmt!r}")
        if self.jobs < 1:
            raise ValueError("--jobs must be >= 1")


@dataclass(frozen=True)
class CorpusStats:
    apps: int
    loc: int
    facts: int
    seconds: float

    def __post_init__(self) -> None:
        if self.apps < 0 or self.loc < 0 or self.facts < 0 or self.seconds < 0:
            raise ValueError("corpus stats must be non-negative")


def _parse_cases(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


def _parse_clauses(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _load_kb_lex(cfg: RunConfig) -> tuple[CapabilityKB, Lexicon]:
    kb = load_kb(cfg.kb_path) if cfg.kb_path else load_default_kb()
    lex = load_lexicon(cfg.lexicon_path, kb) if cfg.lexicon_path else load_default_lexicon(kb)
    return kb, lex


def _collect_sources(inputs) -> list[Path]:
    paths: list[Path] = []
    for raw in inputs:
        p = Path(raw)
        if p.is_dir():
            paths.extend(sorted(p.rglob("*.groovy")))
        else:
            paths.append(p)
    return sorted(set(paths))


def _analyze_corpus(cfg: RunConfig, kb, lex, paths: list[Path]) -> list[AnalysisReport]:
    def run(path: Path) -> AnalysisReport:
        return analyze_app(
            kb, lex, path.read_text(encoding="utf-8"),
            cases=cfg.cases, case3_clauses=cfg.case3_clauses,
        )

    if cfg.jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            reports = list(pool.map(run, paths))
    else:
        reports = [run(p) for p in paths]
    order = sorted(range(len(reports)), key=lambda i: (reports[i].app, str(paths[i])))
    return [reports[i] for i in order]


def cmd_analyze(cfg: RunConfig) -> tuple[int, str, CorpusStats]:
    kb, lex = _load_kb_lex(cfg)
    paths = _collect_sources(cfg.inputs)
    started = time.perf_counter()
    reports = _analyze_corpus(cfg, kb, lex, paths)
    seconds = time.perf_counter() - started
    findings = [f for r in reports for f in r.findings]
    stats = CorpusStats(
        apps=len(reports),
        loc=sum(r.loc for r in reports),
        facts=sum(len(r.facts.facts) for r in reports),
        seconds=seconds,
    )
    if cfg.fmt == "table":
        text = findings_table(findings) if findings else "no findings\n"
        text += (
            f"apps={stats.apps} loc={stats.loc} facts={stats.facts} "
            f"seconds={stats.seconds:.3f}\n"
        )
    else:
        text = findings_to_jsonl(findings)
    return (1 if findings else 0), text, stats


def cmd_facts(cfg: RunConfig) -> list[Path]:
    kb, lex = _load_kb_lex(cfg)
    out_dir = Path(cfg.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in _collect_sources(cfg.inputs):
        report = analyze_app(kb, lex, path.read_text(encoding="utf-8"))
        target = out_dir / (path.stem + ".facts")
        serialize_facts(report.facts, target)
        written.append(target)
    return written


def cmd_mutate(cfg: RunConfig) -> tuple[Path, int]:
    kb, lex = _load_kb_lex(cfg)
    out_dir = Path(cfg.out or "mutants")
    out_dir.mkdir(parents=True, exist_ok=True)
    injectors = {1: inject_case1, 2: inject_case2, 3: inject_case3}
    entries = []
    skipped = 0
    for idx, path in enumerate(_collect_sources(cfg.inputs)):
        case = cfg.cases[idx % len(cfg.cases)]
        source = path.read_text(encoding="utf-8")
        try:
            if case == 1:
                rec = injectors[case](source, kb, cfg.seed + idx)
            else:
                rec = injectors[case](source, kb, cfg.seed + idx, lexicon=lex)
        except MutationError as exc:
            click.echo(f"skipping {path}: {exc}", err=True)
            skipped += 1
            continue
        target = out_dir / f"{path.stem}.case{case}.groovy"
        target.write_text(rec.mutated_source, encoding="utf-8")
        entries.append({
            "app": rec.app,
            "case": rec.case,
            "capability": rec.capability,
            "resource": rec.resource,
            "path": target.name,
            "site": list(rec.site),
        })
    manifest = out_dir / "manifest.json"
    manifest.write_text(
        json.dumps({"mutants": entries, "benign": []}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return manifest, skipped


def load_manifest(path) -> tuple[list[TruthRecord], list[str]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    truth = [
        TruthRecord(
            app=e["app"], case=int(e["case"]),
            capability=e["capability"], resource=e.get("resource"),
        )
        for e in data.get("mutants", [])
    ]
    benign = [e["app"] if isinstance(e, dict) else str(e) for e in data.get("benign", [])]
    return truth, benign


def load_findings_jsonl(path) -> list[Finding]:
    findings = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        findings.append(Finding(
            case=int(d["case"]), app=d["app"], capability=d["capability"],
            resource=d.get("resource"), rule_id=d.get("ruleId"),
            component_id=d.get("componentId"), detail=d.get("detail", ""),
        ))
    return findings


def fit_exponent(sizes, seconds) -> float:
    """Least-squares slope of log(seconds) against log(size)."""
    xs = [math.log(max(s, 1)) for s in sizes]
    ys = [math.log(max(t, 1e-9)) for t in seconds]
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    num = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    den = sum((x - mean_x) ** 2 for x in xs)
    return num / den if den else 0.0


def cmd_bench(cfg: RunConfig, sizes: tuple[int, ...]) -> tuple[str, float]:
    kb, lex = _load_kb_lex(cfg)
    rows = []
    for size in sizes:
        corpus = generate_corpus(size, cfg.seed + size, kb, lexicon=lex)
        started = time.perf_counter()
        reports = [analyze_app(kb, lex, app.source) for app in corpus]
        seconds = time.perf_counter() - started
        rows.append(CorpusStats(
            apps=len(reports),
            loc=sum(r.loc for r in reports),
            facts=sum(len(r.facts.facts) for r in reports),
            seconds=seconds,
        ))
    csv = "apps,loc,facts,seconds\n" + "".join(
        f"{r.apps},{r.loc},{r.facts},{r.seconds:.6f}\n" for r in rows
    )
    exponent = fit_exponent([r.loc for r in rows], [r.seconds for r in rows])
    return csv, exponent


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _common_options(fn):
    fn = click.option("--kb", "kb_path", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="Capability KB file (bundled KB by default).")(fn)
    fn = click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False),
                      default=None, help="Annotation lexicon file (bundled by default).")(fn)
    fn = click.option("--cases", default="1,2,3", show_default=True,
                      help="Comma-separated over-privilege cases to run.")(fn)
    fn = click.option("--case3-clauses", "case3_clauses", default="a,b,c", show_default=True,
                      help="Case-3 clauses to enable.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["jsonl", "table"]),
                      default="jsonl", show_default=True)(fn)
    fn = click.option("--jobs", type=int, default=1, show_default=True,
                      help="Worker threads for per-app analysis.")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="Write the report/artifacts here instead of stdout.")(fn)
    return fn


def _config(inputs, kb_path, lexicon_path, cases, case3_clauses, fmt, jobs, seed, out) -> RunConfig:
    return RunConfig(
        inputs=tuple(str(p) for p in inputs),
        kb_path=kb_path,
        lexicon_path=lexicon_path,
        cases=_parse_cases(cases),
        case3_clauses=_parse_clauses(case3_clauses),
        fmt=fmt,
        jobs=jobs,
        seed=seed,
        out=out,
    )


@click.group()
def main() -> None:
    """Permission over-privilege analysis for smart-home app source."""


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@_common_options
def analyze(inputs, kb_path, lexicon_path, cases, case3_clauses, fmt, jobs, seed, out):
    """Detect over-privilege in .groovy files or directories."""
    try:
        cfg = _config(inputs, kb_path, lexicon_path, cases, case3_clauses, fmt, jobs, seed, out)
        code, text, stats = cmd_analyze(cfg)
        _emit(text, cfg.out)
        if cfg.fmt == "jsonl":
            click.echo(
                f"apps={stats.apps} loc={stats.loc} facts={stats.facts} "
                f"seconds={stats.seconds:.3f}",
                err=True,
            )
    except _USER_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(code)


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@_common_options
def facts(inputs, kb_path, lexicon_path, cases, case3_clauses, fmt, jobs, seed, out):
    """Extract and serialize the fact base for each app."""
    try:
        cfg = _config(inputs, kb_path, lexicon_path, cases, case3_clauses, fmt, jobs, seed, out)
        written = cmd_facts(cfg)
        click.echo(f"wrote {len(written)} fact files", err=True)
    except _USER_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@_common_options
def mutate(inputs, kb_path, lexicon_path, cases, case3_clauses, fmt, jobs, seed, out):
    """Inject one labeled over-privilege case per input app."""
    try:
        cfg = _config(inputs, kb_path, lexicon_path, cases, case3_clauses, fmt, jobs, seed, out)
        manifest, skipped = cmd_mutate(cfg)
        click.echo(f"manifest: {manifest} (skipped {skipped})", err=True)
    except _USER_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


@main.command("eval")
@click.option("--report", "report_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL findings produced by analyze.")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Ground-truth manifest produced by mutate.")
@click.option("--benign-file", "benign_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Extra benign app names, one per line.")
def eval_cmd(report_path, manifest_path, benign_path):
    """Score a findings report against a mutant manifest."""
    try:
        findings = load_findings_jsonl(report_path)
        truth, benign = load_manifest(manifest_path)
        if benign_path:
            benign += [
                line.strip() for line in Path(benign_path).read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
        result = evaluate(findings, truth, benign)
        payload = {
            f"case{c}": {
                "tp": s.tp, "fp": s.fp, "fn": s.fn,
                "precision": s.precision, "recall": s.recall,
            }
            for c, s in sorted(result.cases.items())
        }
        payload["crossCase"] = result.cross_case
        payload["apps"] = {
            "detectedMutants": result.apps.detected_mutants,
            "missedMutants": result.apps.missed_mutants,
            "flaggedBenign": result.apps.flagged_benign,
            "cleanBenign": result.apps.clean_benign,
        }
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    except _USER_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


@main.command()
@click.option("--sizes", default="10,25,60,150", show_default=True,
              help="Comma-separated synthetic corpus sizes.")
@click.option("--kb", "kb_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Write the CSV here.")
def bench(sizes, kb_path, lexicon_path, seed, out):
    """Time analysis over growing synthetic corpora; emit a CSV of stats."""
    try:
        cfg = RunConfig(
            inputs=("<synthetic>",), kb_path=kb_path, lexicon_path=lexicon_path,
            seed=seed, out=out,
        )
        size_list = tuple(int(p) for p in sizes.split(",") if p.strip())
        if not size_list:
            raise ValueError("--sizes must name at least one corpus size")
        csv, exponent = cmd_bench(cfg, size_list)
        _emit(csv, out)
        click.echo(f"fit exponent: {exponent:.3f}", err=True)
    except _USER_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
