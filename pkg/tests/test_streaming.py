"""
Online recognition: emission timing, equivalence with the offline decoder
and bounded buffers.
"""

import numpy as np
import pytest

from glossfcn.ctc import greedy_decode
from glossfcn.errors import DimensionError, UsageError
from glossfcn.evaluation import ScenarioItem, decode, evaluate, evaluate_stream
from glossfcn.model import Recognizer
from glossfcn.streaming import StreamSession, stream_decode

from .helpers import micro_config


@pytest.fixture
def frames(rng):
    return rng.uniform(size=(100, 3, 8, 8))


def run_session(model, frames, chunks=None, **kwargs):
    session = StreamSession(model, keep_rows=True, **kwargs)
    if chunks is None:
        session.push_many(frames)
    else:
        start = 0
        for size in chunks:
            session.push_many(frames[start : start + size])
            start += size
        session.push_many(frames[start:])
    session.finish()
    return session


class TestTiming:
    def test_first_emission_after_right_context(self, micro_model, frames):
        session = StreamSession(micro_model)
        assert session.push_many(frames[:15]) == []
        assert session.push_many(frames[15:19]) == []
        (emission,) = session.push(frames[19])
        assert emission.step == 0
        assert emission.frame == 19
        assert session.steps_encoded == 2

    def test_steps_every_stride(self, micro_model, frames):
        session = StreamSession(micro_model)
        session.push_many(frames[:40])
        assert session.steps_encoded == micro_model.config.steps_for(40) == 7
        assert session.emitted_steps == 6
        assert len(session.finish()) == 1

    def test_short_stream_has_empty_hypothesis(self, micro_model, frames):
        session = StreamSession(micro_model)
        session.push_many(frames[:10])
        assert session.finish() == []
        assert session.hypothesis == []
        assert session.steps_encoded == 0


class TestOfflineEquivalence:
    def test_rows_match_offline(self, micro_model, frames):
        session = run_session(micro_model, frames)
        offline = micro_model.predict(frames).log_probs.data
        assert len(session.rows) == offline.shape[0] == 22
        np.testing.assert_allclose(np.stack(session.rows), offline, atol=1e-6)
        _, labels = greedy_decode(offline)
        assert session.hypothesis == labels == decode(micro_model, frames)

    def test_chunking_does_not_matter(self, micro_model, frames):
        whole = run_session(micro_model, frames)
        chunked = run_session(micro_model, frames, chunks=[1, 7, 13, 2, 30])
        np.testing.assert_array_equal(np.stack(whole.rows), np.stack(chunked.rows))
        assert whole.hypothesis == chunked.hypothesis

    def test_single_step(self, micro_model, frames):
        session = run_session(micro_model, frames[:17])
        np.testing.assert_allclose(session.rows[0], micro_model.predict(frames[:17]).log_probs.data[0], atol=1e-6)

    def test_without_second_level(self, frames):
        model = Recognizer.create(micro_config(use_g2=False), seed=3, dtype=np.float64)
        session = StreamSession(model, keep_rows=True)
        assert session.push_many(frames[:15]) == []
        assert len(session.push(frames[15])) == 1
        session.push_many(frames[16:])
        assert session.finish() == []
        np.testing.assert_allclose(np.stack(session.rows), model.predict(frames).log_probs.data, atol=1e-6)
        assert session.memory_report()["gloss_capacity"] == 1

    def test_stream_decode(self, micro_model, frames):
        assert stream_decode(micro_model, frames) == decode(micro_model, frames)

    def test_streamed_evaluation_matches_offline(self, micro_model, rng):
        items = [ScenarioItem(f"i{n}", rng.uniform(size=(t, 3, 8, 8)), [0, 1]) for n, t in enumerate((30, 55, 12))]
        offline = evaluate(micro_model, items)
        streamed = evaluate_stream(micro_model, items)
        assert streamed.mean_wer == offline.mean_wer
        assert streamed.too_short == offline.too_short == 1
        assert streamed.streamed


class TestMemory:
    def test_buffers_do_not_grow(self, micro_model, rng):
        reports = []
        for t in (40, 400):
            session = StreamSession(micro_model)
            session.push_many(rng.uniform(size=(t, 3, 8, 8)))
            session.finish()
            reports.append(session.memory_report())
        assert reports[0] == reports[1]
        assert reports[0]["high_water_frames"] == reports[0]["frame_capacity"] == 16
        assert reports[0]["high_water_gloss"] == reports[0]["gloss_capacity"] == 3


class TestMisuse:
    def test_push_after_finish(self, micro_model, frames):
        session = StreamSession(micro_model)
        session.push_many(frames[:20])
        session.finish()
        with pytest.raises(UsageError):
            session.push(frames[20])

    def test_finish_twice(self, micro_model):
        session = StreamSession(micro_model)
        session.finish()
        with pytest.raises(UsageError):
            session.finish()

    def test_wrong_frame_shape(self, micro_model, rng):
        session = StreamSession(micro_model)
        with pytest.raises(DimensionError):
            session.push(rng.uniform(size=(8, 8)))
        with pytest.raises(DimensionError):
            session.push(rng.uniform(size=(1, 8, 8)))

    def test_vocabulary_words(self, micro_model, frames):
        session = StreamSession(micro_model, vocab=["HELLO", "THANKS", "PLEASE"])
        emitted = session.push_many(frames) + session.finish()
        words = [e.word for e in emitted if e.word is not None]
        assert words == [["HELLO", "THANKS", "PLEASE"][label] for label in session.hypothesis]
