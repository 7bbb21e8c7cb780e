"""Energy and latency accounting over stage traces.

The cost model is linear: each executed stage contributes a fixed energy
and latency taken from a CostProfile. Totals are computed by summing raw
stage counts first and multiplying once per stage, so the grand total is
immune to per-sample rounding. Percentiles use the nearest-rank order
statistic. The duplication experiment rebuilds the input stream at each
ratio and runs a fresh engine, which is how the memory component's
flat-energy behavior shows up against a linear baseline.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .calibration import CascadeConfig
from .engine import (
    PATH_MEMORY_HIT,
    PATHS,
    CascadeEngine,
    MacroMetrics,
    SampleRef,
    StageTrace,
    macro_metrics,
    run_batch,
)
from .errors import DataError
from .images import TRANSFORMS
from .records import STAGES, CostProfile


def cost_of(trace: StageTrace, costs: CostProfile) -> tuple[float, float]:
    """(energy, latency) of one trace: the sum over its executed stages."""
    energy = 0.0
    latency = 0.0
    for stage in trace.stages:
        if stage not in costs.stages:
            raise DataError(f"unknown stage {stage!r} in trace {trace.sample_id!r}")
        energy += costs.energy(stage)
        latency += costs.latency(stage)
    return energy, latency


@dataclass
class RunReport:
    sample_count: int
    path_counts: dict[str, int]
    stage_counts: dict[str, int]
    total_energy_wh: float
    total_current_mah: float | None
    latencies_ms: list[float]
    mean_latency_ms: float
    p95_latency_ms: float
    p99_latency_ms: float
    metrics: MacroMetrics | None = None
    config: CascadeConfig | None = None

    def to_dict(self) -> dict:
        metrics = None
        if self.metrics is not None:
            metrics = {
                "accuracy": self.metrics.accuracy,
                "precision": self.metrics.precision,
                "recall": self.metrics.recall,
                "f1": self.metrics.f1,
            }
        return {
            "sample_count": self.sample_count,
            "path_counts": dict(self.path_counts),
            "stage_counts": dict(self.stage_counts),
            "total_energy_wh": self.total_energy_wh,
            "total_current_mah": self.total_current_mah,
            "latencies_ms": list(self.latencies_ms),
            "mean_latency_ms": self.mean_latency_ms,
            "p95_latency_ms": self.p95_latency_ms,
            "p99_latency_ms": self.p99_latency_ms,
            "metrics": metrics,
            "config": self.config.to_dict() if self.config is not None else None,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RunReport":
        try:
            metrics = None
            if obj["metrics"] is not None:
                m = obj["metrics"]
                metrics = MacroMetrics(m["accuracy"], m["precision"], m["recall"], m["f1"])
            config = None
            if obj["config"] is not None:
                config = CascadeConfig.from_dict(obj["config"])
            return cls(
                sample_count=int(obj["sample_count"]),
                path_counts={k: int(v) for k, v in obj["path_counts"].items()},
                stage_counts={k: int(v) for k, v in obj["stage_counts"].items()},
                total_energy_wh=float(obj["total_energy_wh"]),
                total_current_mah=(
                    None if obj["total_current_mah"] is None else float(obj["total_current_mah"])
                ),
                latencies_ms=[float(v) for v in obj["latencies_ms"]],
                mean_latency_ms=float(obj["mean_latency_ms"]),
                p95_latency_ms=float(obj["p95_latency_ms"]),
                p99_latency_ms=float(obj["p99_latency_ms"]),
                metrics=metrics,
                config=config,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed run report: {exc}") from None


def nearest_rank(values: Sequence[float], percentile: float) -> float:
    """Value at 1-based index ceil(percentile * n / 100) of the sorted list."""
    if not values:
        raise DataError("no values for percentile")
    if not 0 < percentile <= 100:
        raise DataError(f"percentile {percentile} outside (0, 100]")
    ordered = sorted(values)
    rank = math.ceil(percentile * len(ordered) / 100)
    return ordered[rank - 1]


def aggregate(
    traces: Sequence[StageTrace],
    costs: CostProfile,
    config: CascadeConfig | None = None,
    include_metrics: bool = True,
) -> RunReport:
    """Sum a trace list into a RunReport against one cost profile."""
    if not traces:
        raise DataError("no traces to aggregate")
    for stage in STAGES:
        if stage not in costs.stages:
            raise DataError(f"cost profile missing stage {stage!r}")
    path_counts = {p: 0 for p in PATHS}
    stage_counts = {s: 0 for s in STAGES}
    for t in traces:
        if t.path not in path_counts:
            raise DataError(f"unknown path {t.path!r} in trace {t.sample_id!r}")
        path_counts[t.path] += 1
        for stage in t.stages:
            if stage not in stage_counts:
                raise DataError(f"unknown stage {stage!r} in trace {t.sample_id!r}")
            stage_counts[stage] += 1
    total_energy = sum(count * costs.energy(s) for s, count in stage_counts.items())
    currents = [costs.stages[s].current_mah for s in STAGES]
    total_current = None
    if all(c is not None for c in currents):
        total_current = sum(count * costs.stages[s].current_mah for s, count in stage_counts.items())
    latencies = [cost_of(t, costs)[1] for t in traces]
    metrics = None
    if include_metrics and all(t.label is not None for t in traces):
        metrics = macro_metrics([t.label for t in traces], [t.predicted for t in traces])
    return RunReport(
        sample_count=len(traces),
        path_counts=path_counts,
        stage_counts=stage_counts,
        total_energy_wh=total_energy,
        total_current_mah=total_current,
        latencies_ms=latencies,
        mean_latency_ms=sum(latencies) / len(latencies),
        p95_latency_ms=nearest_rank(latencies, 95),
        p99_latency_ms=nearest_rank(latencies, 99),
        metrics=metrics,
        config=config,
    )


@dataclass(frozen=True)
class Reduction:
    """Percentage reductions of a candidate run against a baseline."""

    energy_pct: float
    mean_latency_pct: float
    p95_latency_pct: float
    p99_latency_pct: float


def compare(baseline: RunReport, candidate: RunReport) -> Reduction:
    """100 * (base - cand) / base per quantity; negative means the candidate is worse."""
    if baseline.sample_count != candidate.sample_count:
        raise DataError(
            f"sample counts differ: {baseline.sample_count} vs {candidate.sample_count}"
        )

    def pct(base: float, cand: float, what: str) -> float:
        if base == 0:
            raise DataError(f"baseline {what} is zero")
        return 100.0 * (base - cand) / base

    return Reduction(
        energy_pct=pct(baseline.total_energy_wh, candidate.total_energy_wh, "energy"),
        mean_latency_pct=pct(baseline.mean_latency_ms, candidate.mean_latency_ms, "mean latency"),
        p95_latency_pct=pct(baseline.p95_latency_ms, candidate.p95_latency_ms, "p95 latency"),
        p99_latency_pct=pct(baseline.p99_latency_ms, candidate.p99_latency_ms, "p99 latency"),
    )


def memory_overhead(plain: RunReport, memory_run: RunReport) -> float:
    """Energy overhead (%) of a memory-enabled run over the same plain run."""
    return -compare(plain, memory_run).energy_pct


TRANSFORM_CHOICES = ("identity", "rot90", "rot180", "mirror_h", "mirror_v")


@dataclass
class DuplicationCurve:
    """Energy/hit trajectory of one engine across duplication ratios."""

    engine_name: str
    points: list[tuple[float, float, int]]  # (ratio, total energy Wh, memory hits)


def _duplicate(sample: SampleRef, transform_name: str, rng: random.Random) -> SampleRef:
    if transform_name == "random_of_these":
        transform_name = rng.choice(TRANSFORM_CHOICES)
    if sample.image is None:
        if transform_name == "identity":
            return sample
        raise DataError(f"transform {transform_name!r} requires images")
    transformed = TRANSFORMS[transform_name](sample.image)
    return SampleRef(sample.id, transformed, sample.label)


def build_duplicated_stream(
    samples: Sequence[SampleRef],
    ratio: float,
    transform_name: str,
    rng: random.Random,
) -> list[SampleRef]:
    """Originals in order, with the duplicate of sample i at position 2i+1
    while duplicates remain; floor(ratio * N) duplicates total."""
    if not 0.0 <= ratio <= 1.0:
        raise DataError(f"duplication ratio {ratio} outside [0, 1]")
    if transform_name not in TRANSFORM_CHOICES and transform_name != "random_of_these":
        raise DataError(f"unknown transform {transform_name!r}")
    ndup = math.floor(ratio * len(samples))
    stream: list[SampleRef] = []
    for i, sample in enumerate(samples):
        stream.append(sample)
        if i < ndup:
            stream.append(_duplicate(sample, transform_name, rng))
    return stream


def duplication_experiment(
    samples: Sequence[SampleRef],
    ratios: Sequence[float],
    transform_name: str,
    engines: Sequence[tuple[str, Callable[[], CascadeEngine]]],
    costs: CostProfile,
    seed: int = 0,
) -> list[DuplicationCurve]:
    """Run every engine over the same duplicated streams, one per ratio.

    Each engine instance is built fresh per ratio so its memory starts
    cold. Streams are built once per ratio and shared across engines for a
    fair comparison; the seed only matters for transform "random_of_these".
    """
    if not samples:
        raise DataError("no samples")
    if not ratios:
        raise DataError("no ratios")
    ordered_ratios = sorted(ratios)
    rng = random.Random(seed)
    streams = [build_duplicated_stream(samples, r, transform_name, rng) for r in ordered_ratios]
    curves = []
    for name, factory in engines:
        points = []
        for ratio, stream in zip(ordered_ratios, streams):
            engine = factory()
            traces, summary = run_batch(engine, stream)
            report = aggregate(traces, costs, include_metrics=False)
            points.append((ratio, report.total_energy_wh, summary.path_counts[PATH_MEMORY_HIT]))
        curves.append(DuplicationCurve(name, points))
    return curves


def format_report_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def load_report(path: str) -> RunReport:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read report {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid report JSON in {path}: {exc}") from None
    return RunReport.from_dict(obj)


def format_report_csv(report: RunReport) -> str:
    """One-row summary for spreadsheet comparison."""
    header = (
        "samples,total_energy_wh,mean_latency_ms,p95_latency_ms,p99_latency_ms,"
        "accuracy,memory_hit,model_a_only,model_ab"
    )
    acc = "" if report.metrics is None else repr(report.metrics.accuracy)
    row = ",".join(
        [
            str(report.sample_count),
            repr(report.total_energy_wh),
            repr(report.mean_latency_ms),
            repr(report.p95_latency_ms),
            repr(report.p99_latency_ms),
            acc,
            str(report.path_counts.get(PATH_MEMORY_HIT, 0)),
            str(report.path_counts.get("model_a_only", 0)),
            str(report.path_counts.get("model_ab", 0)),
        ]
    )
    return header + "\n" + row + "\n"


def format_curves_csv(curves: Sequence[DuplicationCurve]) -> str:
    lines = ["ratio,engine,total_energy_wh,hits"]
    for curve in curves:
        for ratio, energy, hits in curve.points:
            lines.append(f"{ratio!r},{curve.engine_name},{energy!r},{hits}")
    return "\n".join(lines) + "\n"
