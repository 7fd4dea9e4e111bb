"""Evaluation machinery: F1 metrics, the tool-ablation matrix, and
per-tool usage/duration statistics.

Conventions, pinned for reproducibility:
  - "F1" is the F1 of the hate (positive) class.
  - Micro F1 is computed over pooled counts; for binary single-label data
    it equals accuracy.
  - A class with zero support or zero predictions contributes F1 = 0.
  - A post whose decision raises is scored as not_hate with an error flag
    and counted in the report rather than aborting the run.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path

from .agent import AgentConfig, AgentRuntime, run
from .core import Label, Post, Tool, decision_to_dict
from .errors import EmptyInput, LengthMismatch, ModerationError


@dataclass(frozen=True)
class EvalResult:
    f1: float
    f1_micro: float
    f1_macro: float
    confusion: tuple[tuple[int, int], tuple[int, int]]  # rows gold, cols pred; [not_hate, hate]
    n: int


@dataclass(frozen=True)
class AblationRow:
    config_name: str
    disabled_tool: Tool | None
    result: EvalResult


@dataclass(frozen=True)
class ToolStats:
    """Per-tool invocation rates and pooled duration stats (seconds)."""

    invocation_rate: dict[str, float]
    duration_mean: dict[str, float]
    duration_median: dict[str, float]
    duration_p95: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "invocation_rate": self.invocation_rate,
            "duration_mean": self.duration_mean,
            "duration_median": self.duration_median,
            "duration_p95": self.duration_p95,
        }


def _prf(tp: int, fp: int, fn: int) -> float:
    # zero support or zero predictions -> F1 = 0
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def f1_scores(gold: list[Label], pred: list[Label]) -> EvalResult:
    if len(gold) != len(pred):
        raise LengthMismatch(f"gold has {len(gold)} labels, pred has {len(pred)}")
    if not gold:
        raise EmptyInput("empty label lists")
    # confusion[gold][pred], index 0 = not_hate, 1 = hate
    confusion = [[0, 0], [0, 0]]
    for g, p in zip(gold, pred):
        confusion[g is Label.HATE][p is Label.HATE] += 1
    tn, fp = confusion[0]
    fn, tp = confusion[1]
    f1_hate = _prf(tp, fp, fn)
    f1_not = _prf(tn, fn, fp)
    n = len(gold)
    f1_micro = (tp + tn) / n  # pooled F1 = accuracy for binary single-label
    f1_macro = (f1_hate + f1_not) / 2
    return EvalResult(
        f1=f1_hate,
        f1_micro=f1_micro,
        f1_macro=f1_macro,
        confusion=((tn, fp), (fn, tp)),
        n=n,
    )


def tool_stats(traces: list[list]) -> ToolStats:
    """Usage stats over per-post trace lists.

    A tool counts once per post for the invocation rate however many times
    it ran, while every event contributes to the duration pool.
    """
    if not traces:
        raise EmptyInput("no traces")
    n = len(traces)
    rates: dict[str, float] = {}
    means: dict[str, float] = {}
    medians: dict[str, float] = {}
    p95s: dict[str, float] = {}
    for tool in Tool:
        posts_using = sum(1 for trace in traces if any(e.tool is tool for e in trace))
        durations = [e.duration for trace in traces for e in trace if e.tool is tool]
        rates[tool.value] = posts_using / n
        if durations:
            means[tool.value] = sum(durations) / len(durations)
            medians[tool.value] = statistics.median(durations)
            p95s[tool.value] = _percentile(durations, 95.0)
        else:
            means[tool.value] = 0.0
            medians[tool.value] = 0.0
            p95s[tool.value] = 0.0
    return ToolStats(
        invocation_rate=rates,
        duration_mean=means,
        duration_median=medians,
        duration_p95=p95s,
    )


def _percentile(values: list[float], q: float) -> float:
    """Linear-interpolation percentile (matches numpy's default)."""
    ordered = sorted(values)
    if len(ordered) == 1:
        return ordered[0]
    rank = (q / 100.0) * (len(ordered) - 1)
    low = int(rank)
    high = min(low + 1, len(ordered) - 1)
    frac = rank - low
    return ordered[low] * (1 - frac) + ordered[high] * frac


@dataclass
class EvalReport:
    result: EvalResult
    stats: ToolStats
    decisions: list
    gold: list[Label]
    errors: int = 0  # posts scored as not_hate because deciding them failed


def run_eval(
    corpus: list[tuple[Post, Label]],
    config: AgentConfig,
    runtime: AgentRuntime,
    out_dir: str | Path | None = None,
) -> EvalReport:
    """Decide every post and reduce to metrics + tool stats.

    Deterministic under a scripted planner and stub tools. When ``out_dir``
    is given the run is persisted: config snapshot, per-post decisions as
    JSON lines, metrics, stats, and a plain-text summary table.
    """
    if not corpus:
        raise EmptyInput("empty evaluation corpus")
    decisions = []
    gold = []
    pred = []
    errors = 0
    for post, true_label in corpus:
        gold.append(true_label)
        try:
            decision = run(post, config, runtime)
            decisions.append(decision)
            pred.append(decision.label)
        except ModerationError:
            errors += 1
            decisions.append(None)
            pred.append(Label.NOT_HATE)  # declared failure policy
    result = f1_scores(gold, pred)
    traces = [list(d.trace) if d is not None else [] for d in decisions]
    stats = tool_stats(traces)
    report = EvalReport(result=result, stats=stats, decisions=decisions, gold=gold, errors=errors)
    if out_dir is not None:
        persist_run(Path(out_dir), config, report)
    return report


ABLATION_ORDER: list[tuple[str, Tool | None]] = [
    ("all_tools", None),
    ("no_tools", None),
    ("wo_classifier", Tool.CLASSIFIER),
    ("wo_similar_posts", Tool.SIMILAR_POSTS),
    ("wo_slang_dictionary", Tool.SLANG_DICTIONARY),
    ("wo_reasoning", Tool.REASONING),
]


def run_ablation(
    corpus: list[tuple[Post, Label]],
    base_config: AgentConfig,
    runtime: AgentRuntime,
    out_dir: str | Path | None = None,
) -> list[AblationRow]:
    """The six-configuration matrix: full, none, and one tool removed at a
    time. Guidelines are never ablated; they only contextualise decisions."""
    from dataclasses import replace

    rows = []
    reports = {}
    for name, removed in ABLATION_ORDER:
        if name == "all_tools":
            config = base_config
        elif name == "no_tools":
            config = replace(base_config, enabled_tools=frozenset())
        else:
            config = base_config.without(removed)
        report = run_eval(corpus, config, runtime)
        rows.append(AblationRow(config_name=name, disabled_tool=removed, result=report.result))
        reports[name] = report
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "ablation.json").write_text(
            json.dumps([_row_to_dict(r) for r in rows], indent=2) + "\n", encoding="utf-8"
        )
        (out_dir / "ablation.txt").write_text(
            render_metrics_table([(r.config_name, r.result) for r in rows]), encoding="utf-8"
        )
    return rows


def _row_to_dict(row: AblationRow) -> dict:
    return {
        "config_name": row.config_name,
        "disabled_tool": row.disabled_tool.value if row.disabled_tool else None,
        "result": _result_to_dict(row.result),
    }


def _result_to_dict(result: EvalResult) -> dict:
    return {
        "f1": result.f1,
        "f1_micro": result.f1_micro,
        "f1_macro": result.f1_macro,
        "confusion": [list(r) for r in result.confusion],
        "n": result.n,
    }


def render_metrics_table(rows: list[tuple[str, EvalResult]]) -> str:
    """Plain-text table in the reference column order: F1, F1_MICRO, F1_MACRO."""
    name_width = max(len("configuration"), max(len(name) for name, _ in rows))
    header = f"{'configuration':<{name_width}}  {'F1':>8}  {'F1_MICRO':>8}  {'F1_MACRO':>8}"
    lines = [header, "-" * len(header)]
    for name, result in rows:
        lines.append(
            f"{name:<{name_width}}  {result.f1:>8.4f}  {result.f1_micro:>8.4f}  {result.f1_macro:>8.4f}"
        )
    return "\n".join(lines) + "\n"


def persist_run(out_dir: Path, config: AgentConfig, report: EvalReport) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(
        json.dumps(
            {
                "enabled_tools": sorted(t.value for t in config.enabled_tools),
                "max_retries": config.max_retries,
                "max_tool_calls_per_run": config.max_tool_calls_per_run,
                "mode": config.mode,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    with open(out_dir / "decisions.jsonl", "w", encoding="utf-8") as fh:
        for decision in report.decisions:
            if decision is None:
                fh.write(json.dumps({"error": True}) + "\n")
            else:
                fh.write(json.dumps(decision_to_dict(decision), ensure_ascii=False) + "\n")
    (out_dir / "metrics.json").write_text(
        json.dumps({**_result_to_dict(report.result), "errors": report.errors}, indent=2) + "\n",
        encoding="utf-8",
    )
    (out_dir / "stats.json").write_text(
        json.dumps(report.stats.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    (out_dir / "summary.txt").write_text(
        render_metrics_table([("this_run", report.result)]), encoding="utf-8"
    )
