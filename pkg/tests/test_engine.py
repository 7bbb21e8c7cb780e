from __future__ import annotations

import json

import pytest

from cascadekit.calibration import CascadeConfig, accuracy_at, cascade_decide_offline
from cascadekit.confidence import ScoreFunction
from cascadekit.engine import (
    PATH_MEMORY_HIT,
    PATH_MODEL_A_ONLY,
    PATH_MODEL_AB,
    CascadeEngine,
    ReplayClassifier,
    SampleRef,
    StageTrace,
    format_traces_jsonl,
    macro_metrics,
    run_batch,
    trace_to_dict,
)
from cascadekit.errors import DataError
from cascadekit.images import ImageBuffer, rotate90
from cascadekit.phash import MemoStore, dhash_fingerprint, moments_fingerprint
from cascadekit.records import PredictionRecord
from cascadekit.synthetic import synthetic_image

DIFF = ScoreFunction.DIFFERENCE


def _engine(
    threshold=0.5, post_check=True, memory="none", a_rows=None, b_rows=None, store=None
) -> CascadeEngine:
    # default fixture: A confident and right on x1, hesitant and wrong on
    # x2 where B answers confidently, hesitant and right on x3 where B is
    # wrong but even less sure
    a_rows = a_rows or [
        ("x1", 0, (6.0, 0.0, 0.0)),
        ("x2", 1, (0.6, 0.0, 0.4)),
        ("x3", 2, (0.0, 0.2, 0.7)),
    ]
    b_rows = b_rows or [
        ("x1", 0, (0.0, 3.0, 0.0)),
        ("x2", 1, (0.0, 5.0, 0.0)),
        ("x3", 2, (0.1, 0.2, 0.0)),
    ]
    config = CascadeConfig("model_a", "model_b", DIFF, threshold, post_check, memory)
    return CascadeEngine(
        config,
        ReplayClassifier("model_a", [PredictionRecord(*r) for r in a_rows]),
        ReplayClassifier("model_b", [PredictionRecord(*r) for r in b_rows]),
        store=store,
    )


class TestReplayClassifier:
    def test_replays_logits(self):
        clf = ReplayClassifier("m", [PredictionRecord("a", 0, (1.0, 2.0))])
        assert clf.infer("a") == (1.0, 2.0)
        assert len(clf) == 1

    def test_unknown_id(self):
        clf = ReplayClassifier("small", [PredictionRecord("a", 0, (1.0, 2.0))])
        with pytest.raises(DataError, match="small: unknown sample id 'b'"):
            clf.infer("b")


class TestClassify:
    def test_confident_sample_stops_at_model_a(self):
        trace = _engine().classify(SampleRef("x1", label=0))
        assert trace.path == PATH_MODEL_A_ONLY
        assert trace.chosen == "a"
        assert trace.predicted == 0
        assert trace.stages == ("model_a",)
        assert trace.score_b is None
        assert trace.score_a is not None
        assert trace.hash_error is None

    def test_hesitant_sample_escalates_and_b_wins(self):
        trace = _engine().classify(SampleRef("x2", label=1))
        assert trace.path == PATH_MODEL_AB
        assert trace.stages == ("model_a", "model_b")
        assert trace.chosen == "b"
        assert trace.predicted == 1
        assert trace.score_b is not None

    def test_post_check_keeps_model_a_when_b_is_worse(self):
        trace = _engine().classify(SampleRef("x3", label=2))
        assert trace.path == PATH_MODEL_AB
        assert trace.chosen == "a"
        assert trace.predicted == 2

    def test_without_post_check_b_always_answers(self):
        trace = _engine(post_check=False).classify(SampleRef("x3", label=2))
        assert trace.chosen == "b"
        assert trace.predicted == 1

    def test_label_is_passed_through(self):
        assert _engine().classify(SampleRef("x1")).label is None
        assert _engine().classify(SampleRef("x1", label=2)).label == 2

    def test_matches_offline_decisions(self, bundled_paired):
        records_a = [
            PredictionRecord(s.id, s.label, s.logits_a) for s in bundled_paired.samples
        ]
        records_b = [
            PredictionRecord(s.id, s.label, s.logits_b) for s in bundled_paired.samples
        ]
        config = CascadeConfig("model_a", "model_b", DIFF, 0.62, True, "none")
        engine = CascadeEngine(
            config,
            ReplayClassifier("model_a", records_a),
            ReplayClassifier("model_b", records_b),
        )
        used = 0
        for s in bundled_paired.samples:
            trace = engine.classify(SampleRef(s.id, label=s.label))
            predicted, used_second, chosen = cascade_decide_offline(
                s.logits_a, s.logits_b, DIFF, 0.62, True
            )
            assert trace.predicted == predicted
            assert trace.chosen == chosen
            assert (trace.path == PATH_MODEL_AB) == used_second
            used += used_second
        accuracy, usage = accuracy_at(bundled_paired, DIFF, 0.62, True)
        assert usage == used / len(bundled_paired)


class TestMemory:
    def test_first_sight_runs_models_and_inserts(self):
        engine = _engine(memory="dhash")
        img = synthetic_image(16, 16, seed=3)
        trace = engine.classify(SampleRef("x1", image=img, label=0))
        assert trace.path == PATH_MODEL_A_ONLY
        assert trace.stages == ("memory_lookup", "model_a", "memory_insert")
        assert len(engine.store) == 1
        assert engine.store.lookup(dhash_fingerprint(img)) == 0

    def test_second_sight_is_a_hit(self):
        engine = _engine(memory="dhash")
        img = synthetic_image(16, 16, seed=3)
        engine.classify(SampleRef("x2", image=img, label=1))
        trace = engine.classify(SampleRef("x2", image=img, label=1))
        assert trace.path == PATH_MEMORY_HIT
        assert trace.chosen == "memory"
        assert trace.stages == ("memory_lookup",)
        assert trace.predicted == 1
        assert trace.score_a is None and trace.score_b is None

    def test_hit_replays_earlier_mistake(self):
        # model A is confidently wrong on this sample; the memo store
        # caches the cascade's answer, not the truth
        engine = _engine(
            memory="dhash",
            a_rows=[("x1", 0, (0.0, 9.0, 0.0))],
            b_rows=[("x1", 0, (5.0, 0.0, 0.0))],
        )
        img = synthetic_image(12, 12, seed=4)
        first = engine.classify(SampleRef("x1", image=img, label=0))
        assert first.predicted == 1
        hit = engine.classify(SampleRef("x1", image=img, label=0))
        assert hit.path == PATH_MEMORY_HIT
        assert hit.predicted == 1
        assert hit.label == 0

    def test_hit_skips_the_classifiers_entirely(self):
        # the second ref's id is unknown to both classifiers, so anything
        # but a memory hit would blow up
        engine = _engine(memory="moments")
        img = synthetic_image(20, 20, seed=6)
        engine.classify(SampleRef("x1", image=img, label=0))
        trace = engine.classify(SampleRef("never-inferred", image=rotate90(img)))
        assert trace.path == PATH_MEMORY_HIT
        assert trace.predicted == 0

    def test_dhash_misses_on_rotation(self):
        img = synthetic_image(16, 16, seed=7)
        turned = rotate90(img)
        assert dhash_fingerprint(img) != dhash_fingerprint(turned)
        engine = _engine(memory="dhash")
        engine.classify(SampleRef("x1", image=img))
        trace = engine.classify(SampleRef("x1", image=turned))
        assert trace.path == PATH_MODEL_A_ONLY
        assert len(engine.store) == 2

    def test_moments_match_rotated_rgb_image(self):
        engine = _engine(memory="moments")
        img = synthetic_image(18, 14, seed=9, channels=3)
        engine.classify(SampleRef("x1", image=img, label=0))
        trace = engine.classify(SampleRef("x1", image=rotate90(img)))
        assert trace.path == PATH_MEMORY_HIT

    def test_image_required_when_memory_enabled(self):
        engine = _engine(memory="dhash")
        with pytest.raises(DataError, match="image required when memory=dhash"):
            engine.classify(SampleRef("x1", label=0))

    def test_hash_failure_degrades_to_plain_cascade(self):
        engine = _engine(memory="moments")
        black = ImageBuffer(8, 8, 1, bytes(64))
        trace = engine.classify(SampleRef("x1", image=black, label=0))
        assert trace.path == PATH_MODEL_A_ONLY
        assert trace.predicted == 0
        assert trace.hash_error == "zero total intensity"
        assert "memory_lookup" not in trace.stages
        assert "memory_insert" not in trace.stages
        assert len(engine.store) == 0

    def test_external_store_is_shared(self):
        store = MemoStore()
        img = synthetic_image(10, 10, seed=2)
        first = _engine(memory="moments", store=store)
        first.classify(SampleRef("x1", image=img, label=0))
        second = _engine(memory="moments", store=store)
        trace = second.classify(SampleRef("x1", image=img, label=0))
        assert trace.path == PATH_MEMORY_HIT
        assert store.lookup(moments_fingerprint(img)) == 0

    def test_no_store_when_memory_disabled(self):
        assert _engine().store is None
        assert _engine(memory="dhash").store is not None


class TestRunBatch:
    def test_counts_and_usage(self):
        engine = _engine()
        samples = [SampleRef(i, label=l) for i, l in (("x1", 0), ("x2", 1), ("x3", 2))]
        traces, summary = run_batch(engine, samples)
        assert [t.sample_id for t in traces] == ["x1", "x2", "x3"]
        assert summary.sample_count == 3
        assert summary.path_counts == {
            PATH_MEMORY_HIT: 0, PATH_MODEL_A_ONLY: 1, PATH_MODEL_AB: 2,
        }
        assert summary.second_model_usage == pytest.approx(2 / 3)
        assert summary.metrics is not None
        assert summary.metrics.accuracy == 1.0

    def test_order_matters_for_memory(self):
        img = synthetic_image(16, 16, seed=5)
        samples = [
            SampleRef("x1", image=img, label=0),
            SampleRef("x1", image=img, label=0),
        ]
        _, summary = run_batch(_engine(memory="dhash"), samples)
        assert summary.path_counts[PATH_MEMORY_HIT] == 1
        assert summary.path_counts[PATH_MODEL_A_ONLY] == 1

    def test_metrics_need_every_label(self):
        engine = _engine()
        samples = [SampleRef("x1", label=0), SampleRef("x2")]
        _, summary = run_batch(engine, samples)
        assert summary.metrics is None
        assert summary.second_model_usage == 0.5

    def test_empty_batch(self):
        with pytest.raises(DataError, match="empty batch"):
            run_batch(_engine(), [])


class TestMacroMetrics:
    def test_perfect(self):
        m = macro_metrics([0, 1, 2], [0, 1, 2])
        assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_hand_computed_two_class(self):
        m = macro_metrics([0, 0, 1, 1], [0, 1, 1, 1])
        assert m.accuracy == 0.75
        assert m.precision == pytest.approx(5 / 6)
        assert m.recall == pytest.approx(0.75)
        assert m.f1 == pytest.approx((2 / 3 + 0.8) / 2)

    def test_class_only_in_predictions_is_ignored(self):
        m = macro_metrics([0, 0], [0, 1])
        assert m.precision == 1.0
        assert m.recall == 0.5

    def test_never_predicted_class_gets_zero_precision(self):
        m = macro_metrics([0, 1], [0, 0])
        assert m.precision == pytest.approx(0.25)
        assert m.recall == pytest.approx(0.5)
        assert m.f1 == pytest.approx(1 / 3)

    def test_single_class(self):
        m = macro_metrics([3, 3], [3, 3])
        assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_errors(self):
        with pytest.raises(DataError, match="differ in length"):
            macro_metrics([0], [0, 1])
        with pytest.raises(DataError, match="no labeled samples"):
            macro_metrics([], [])


class TestTraceSerialization:
    def test_dict_shape_for_model_path(self):
        trace = _engine().classify(SampleRef("x2", label=1))
        obj = trace_to_dict(trace)
        assert set(obj) == {
            "id", "path", "chosen", "predicted", "label", "stages", "scores",
            "hash_error",
        }
        assert obj["id"] == "x2"
        assert obj["stages"] == ["model_a", "model_b"]
        assert obj["scores"] == {"a": trace.score_a, "b": trace.score_b}
        assert obj["hash_error"] is None

    def test_scores_null_on_memory_hit(self):
        hit = StageTrace("x", PATH_MEMORY_HIT, "memory", 4, 4, None, None,
                         ("memory_lookup",))
        assert trace_to_dict(hit)["scores"] is None

    def test_scores_present_when_only_a_ran(self):
        trace = _engine().classify(SampleRef("x1", label=0))
        obj = trace_to_dict(trace)
        assert obj["scores"] == {"a": trace.score_a, "b": None}

    def test_jsonl_round_trip(self):
        engine = _engine()
        traces, _ = run_batch(
            engine, [SampleRef("x1", label=0), SampleRef("x2", label=1)]
        )
        text = format_traces_jsonl(traces)
        assert text.endswith("\n")
        lines = text.splitlines()
        assert len(lines) == 2
        first = json.loads(lines[0])
        assert first["id"] == "x1"
        assert first["path"] == PATH_MODEL_A_ONLY
        assert ": " not in lines[0]
