"""Runtime cascade engine: memory lookup, model A, threshold test, model B.

Each classified sample produces a StageTrace naming the path taken and the
exact stages executed, which is what the metering module prices. With
memory enabled the engine fingerprints the (grayscaled) image first and
skips both models on a hit; the predicted label of every non-hit sample is
inserted afterwards, so hits replay earlier cascade decisions, mistakes
included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

from .calibration import CascadeConfig
from .complementarity import predicted_label
from .confidence import better_score, passes_threshold, score, softmax
from .errors import DataError
from .images import ImageBuffer, to_grayscale
from .phash import Fingerprint, MemoStore, dhash_fingerprint, moments_fingerprint
from .records import PredictionRecord

PATH_MEMORY_HIT = "memory_hit"
PATH_MODEL_A_ONLY = "model_a_only"
PATH_MODEL_AB = "model_ab"
PATHS = (PATH_MEMORY_HIT, PATH_MODEL_A_ONLY, PATH_MODEL_AB)


class Classifier(Protocol):
    name: str

    def infer(self, sample_id: str) -> Sequence[float]: ...


class ReplayClassifier:
    """Classifier backed by precomputed logits, keyed by sample id."""

    def __init__(self, name: str, records: Iterable[PredictionRecord]):
        self.name = name
        self._logits = {r.id: r.logits for r in records}

    def infer(self, sample_id: str) -> tuple[float, ...]:
        try:
            return self._logits[sample_id]
        except KeyError:
            raise DataError(f"{self.name}: unknown sample id {sample_id!r}") from None

    def __len__(self) -> int:
        return len(self._logits)


@dataclass(frozen=True)
class SampleRef:
    """One input sample: id for the classifiers, optional image and label."""

    id: str
    image: ImageBuffer | None = None
    label: int | None = None


@dataclass(frozen=True)
class StageTrace:
    sample_id: str
    path: str                 # one of PATHS
    chosen: str               # "memory", "a" or "b"
    predicted: int
    label: int | None
    score_a: float | None
    score_b: float | None
    stages: tuple[str, ...]
    hash_error: str | None = None


class CascadeEngine:
    """Wires a CascadeConfig to two classifiers and an optional memo store."""

    def __init__(
        self,
        config: CascadeConfig,
        classifier_a: Classifier,
        classifier_b: Classifier,
        store: MemoStore | None = None,
    ):
        self.config = config
        self.classifier_a = classifier_a
        self.classifier_b = classifier_b
        if config.memory == "none":
            self.store = None
        else:
            self.store = store if store is not None else MemoStore()

    def _fingerprint(self, image: ImageBuffer) -> Fingerprint:
        gray = to_grayscale(image)
        if self.config.memory == "dhash":
            return dhash_fingerprint(gray)
        return moments_fingerprint(gray)

    def classify(self, sample: SampleRef) -> StageTrace:
        """Run one sample through the pipeline and trace every stage.

        A hash failure (for instance an all-black image under the moments
        method) does not abort the sample: it degrades to the no-memory
        path and is recorded on the trace.
        """
        stages: list[str] = []
        fp: Fingerprint | None = None
        hash_error: str | None = None
        if self.store is not None:
            if sample.image is None:
                raise DataError(
                    f"sample {sample.id!r}: image required when memory={self.config.memory}"
                )
            try:
                fp = self._fingerprint(sample.image)
            except DataError as exc:
                hash_error = str(exc)
            if fp is not None:
                stages.append("memory_lookup")
                hit = self.store.lookup(fp)
                if hit is not None:
                    return StageTrace(
                        sample_id=sample.id,
                        path=PATH_MEMORY_HIT,
                        chosen="memory",
                        predicted=hit,
                        label=sample.label,
                        score_a=None,
                        score_b=None,
                        stages=tuple(stages),
                    )

        stages.append("model_a")
        probs_a = softmax(self.classifier_a.infer(sample.id))
        score_a = score(probs_a, self.config.score_fn)
        if passes_threshold(score_a, self.config.threshold, self.config.score_fn):
            path, chosen, score_b = PATH_MODEL_A_ONLY, "a", None
            predicted = predicted_label(probs_a)
        else:
            stages.append("model_b")
            probs_b = softmax(self.classifier_b.infer(sample.id))
            score_b = score(probs_b, self.config.score_fn)
            path = PATH_MODEL_AB
            if self.config.post_check:
                chosen = better_score(score_a, score_b, self.config.score_fn)
            else:
                chosen = "b"
            predicted = predicted_label(probs_a if chosen == "a" else probs_b)

        if fp is not None:
            stages.append("memory_insert")
            assert self.store is not None
            self.store.insert(fp, predicted)
        return StageTrace(
            sample_id=sample.id,
            path=path,
            chosen=chosen,
            predicted=predicted,
            label=sample.label,
            score_a=score_a,
            score_b=score_b,
            stages=tuple(stages),
            hash_error=hash_error,
        )


@dataclass(frozen=True)
class MacroMetrics:
    """Accuracy plus precision/recall/F1 macro-averaged over observed classes."""

    accuracy: float
    precision: float
    recall: float
    f1: float


def macro_metrics(labels: Sequence[int], predictions: Sequence[int]) -> MacroMetrics:
    """Macro metrics over the classes that appear in the labels.

    A class never predicted gets precision 0; classes absent from the
    labels are excluded from the macro means entirely (no 0/0 terms).
    """
    if len(labels) != len(predictions):
        raise DataError("labels and predictions differ in length")
    if not labels:
        raise DataError("no labeled samples")
    observed = sorted(set(labels))
    correct = sum(1 for y, p in zip(labels, predictions) if y == p)
    precisions = []
    recalls = []
    f1s = []
    for cls in observed:
        tp = sum(1 for y, p in zip(labels, predictions) if y == cls and p == cls)
        fp = sum(1 for y, p in zip(labels, predictions) if y != cls and p == cls)
        fn = sum(1 for y, p in zip(labels, predictions) if y == cls and p != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
    k = len(observed)
    return MacroMetrics(
        accuracy=correct / len(labels),
        precision=sum(precisions) / k,
        recall=sum(recalls) / k,
        f1=sum(f1s) / k,
    )


@dataclass
class BatchSummary:
    sample_count: int
    path_counts: dict[str, int]
    second_model_usage: float
    metrics: MacroMetrics | None


def run_batch(engine: CascadeEngine, samples: Sequence[SampleRef]) -> tuple[list[StageTrace], BatchSummary]:
    """Classify samples sequentially in input order.

    Order matters when memory is enabled: an earlier sample's insert is a
    later duplicate's hit. Metrics are included when every sample carries
    a label.
    """
    if not samples:
        raise DataError("empty batch")
    traces = [engine.classify(s) for s in samples]
    path_counts = {p: 0 for p in PATHS}
    for t in traces:
        path_counts[t.path] += 1
    usage = sum(1 for t in traces if "model_b" in t.stages) / len(traces)
    metrics = None
    if all(t.label is not None for t in traces):
        metrics = macro_metrics([t.label for t in traces], [t.predicted for t in traces])
    return traces, BatchSummary(len(traces), path_counts, usage, metrics)


def trace_to_dict(trace: StageTrace) -> dict:
    if trace.score_a is None and trace.score_b is None:
        scores = None
    else:
        scores = {"a": trace.score_a, "b": trace.score_b}
    return {
        "id": trace.sample_id,
        "path": trace.path,
        "chosen": trace.chosen,
        "predicted": trace.predicted,
        "label": trace.label,
        "stages": list(trace.stages),
        "scores": scores,
        "hash_error": trace.hash_error,
    }


def format_traces_jsonl(traces: Sequence[StageTrace]) -> str:
    lines = [json.dumps(trace_to_dict(t), separators=(",", ":")) for t in traces]
    return "\n".join(lines) + "\n"
