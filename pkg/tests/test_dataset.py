"""Tests for dataset loading, frequency statistics and scenario splits."""

import numpy as np
import pytest
from PIL import Image

from vatr.dataset import (
    FrequencyTable,
    WordSample,
    char_frequency,
    load_dataset,
    long_tail_words,
    normalize_height,
    partition_scenarios,
    sample_style_set,
    save_manifest,
    vocabulary,
)


def write_png(path, h, w, value=200):
    arr = np.full((h, w), value, dtype=np.uint8)
    arr[h // 2, :] = 30
    Image.fromarray(arr).save(path)


def make_manifest(tmp_path, rows):
    """rows: (name, h, w, writer, transcription)"""
    entries = []
    for name, h, w, writer, text in rows:
        write_png(tmp_path / name, h, w)
        entries.append((name, writer, text))
    save_manifest(entries, tmp_path / "manifest.tsv")
    return tmp_path / "manifest.tsv"


def sample(text, writer="w0"):
    return WordSample(image=np.zeros((64, 32), dtype=np.uint8),
                      transcription=text, writer_id=writer)


class TestLoadDataset:
    def test_single_record(self, tmp_path):
        manifest = make_manifest(tmp_path, [("a.png", 64, 100, "w1", "hello")])
        grouped = load_dataset(manifest)
        assert list(grouped) == ["w1"]
        assert grouped["w1"][0].transcription == "hello"

    def test_height_normalized_to_64_proportional(self, tmp_path):
        manifest = make_manifest(tmp_path, [("a.png", 30, 120, "w1", "word")])
        grouped = load_dataset(manifest)
        assert grouped["w1"][0].image.shape == (64, 256)

    def test_all_heights_are_64(self, tmp_path):
        rows = [(f"{i}.png", h, w, f"w{i % 2}", "text")
                for i, (h, w) in enumerate([(64, 80), (128, 300), (31, 47)])]
        manifest = make_manifest(tmp_path, rows)
        for samples in load_dataset(manifest).values():
            for s in samples:
                assert s.image.shape[0] == 64

    def test_missing_image_errors_with_path(self, tmp_path):
        save_manifest([("gone.png", "w1", "x")], tmp_path / "manifest.tsv")
        with pytest.raises(FileNotFoundError, match="gone.png"):
            load_dataset(tmp_path / "manifest.tsv")

    def test_empty_transcription_rejected(self, tmp_path, caplog):
        write_png(tmp_path / "a.png", 64, 64)
        (tmp_path / "manifest.tsv").write_text("a.png\tw1\t\na.png\tw1\tok\n")
        with caplog.at_level("WARNING"):
            grouped = load_dataset(tmp_path / "manifest.tsv")
        assert len(grouped["w1"]) == 1
        assert any("rejected" in r.message for r in caplog.records)

    def test_grouping_by_writer(self, tmp_path):
        rows = [("a.png", 64, 50, "w1", "one"), ("b.png", 64, 50, "w2", "two"),
                ("c.png", 64, 50, "w1", "three")]
        grouped = load_dataset(make_manifest(tmp_path, rows))
        assert sorted(grouped) == ["w1", "w2"]
        assert len(grouped["w1"]) == 2


def test_normalize_height_aspect_arithmetic():
    assert normalize_height(np.zeros((30, 120), dtype=np.uint8)).shape == (64, 256)
    assert normalize_height(np.zeros((64, 99), dtype=np.uint8)).shape == (64, 99)


class TestCharFrequency:
    def test_counts_and_long_tail(self):
        freq = char_frequency([sample("aa"), sample("b")], long_tail_threshold=2)
        assert freq.count(ord("a")) == 2 and freq.count(ord("b")) == 1
        assert not freq.is_long_tail(ord("a"))
        assert freq.is_long_tail(ord("b"))
        assert freq.long_tail == {ord("b")}

    def test_threshold_zero_empty_long_tail(self):
        freq = char_frequency([sample("abc")], long_tail_threshold=0)
        assert freq.long_tail == set()

    def test_frequency_conservation(self):
        texts = ["the", "quick", "brown", "fox", "the", "the"]
        freq = char_frequency([sample(t) for t in texts])
        assert freq.total() == sum(len(t) for t in texts)

    def test_most_common_ordering(self):
        freq = char_frequency([sample("eeeettaao"), sample("eto")])
        assert freq.most_common(2) == ["e", "t"]

    def test_empty_training_set_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            char_frequency([])

    def test_csv_export(self, tmp_path):
        freq = char_frequency([sample("ab"), sample("a")], long_tail_threshold=2)
        freq.to_csv(tmp_path / "freq.csv")
        lines = (tmp_path / "freq.csv").read_text().splitlines()
        assert lines[0] == "codepoint,count,is_long_tail"
        assert f"{ord('a')},2,0" in lines and f"{ord('b')},1,1" in lines


class TestLongTailWords:
    def freq(self):
        # 'a', 'b' common; digits and 'A' rare
        counts = {ord("a"): 50, ord("b"): 50, ord("A"): 2, ord("1"): 1, ord("2"): 1}
        return FrequencyTable(counts=counts, long_tail_threshold=10)

    def test_flagging(self):
        samples = [sample("ab"), sample("aA"), sample("12")]
        subsets = long_tail_words(samples, self.freq())
        assert [s.transcription for s in subsets.flagged] == ["aA", "12"]

    def test_digits_only_subset(self):
        samples = [sample("A1"), sample("12"), sample("ab")]
        subsets = long_tail_words(samples, self.freq())
        assert [s.transcription for s in subsets.flagged] == ["A1", "12"]
        assert [s.transcription for s in subsets.digits_only] == ["12"]

    def test_no_long_tail_chars(self):
        samples = [sample("ab"), sample("ba")]
        subsets = long_tail_words(samples, self.freq())
        assert subsets.flagged == []


class TestSampleStyleSet:
    def writer(self, n, writer="w7"):
        return [sample(f"word{i}", writer) for i in range(n)]

    def test_draws_p_distinct(self):
        chosen = sample_style_set(self.writer(40), p=15, seed=1)
        texts = [s.transcription for s in chosen.images]
        assert len(texts) == 15 and len(set(texts)) == 15

    def test_exactly_p_returns_full_set(self):
        samples = self.writer(15)
        for seed in (0, 99):
            chosen = sample_style_set(samples, p=15, seed=seed)
            assert [s.transcription for s in chosen.images] == [s.transcription for s in samples]

    def test_seed_determinism(self):
        samples = self.writer(30)
        a = sample_style_set(samples, p=5, seed=3)
        b = sample_style_set(samples, p=5, seed=3)
        assert [s.transcription for s in a.images] == [s.transcription for s in b.images]

    def test_too_few_samples_names_writer(self):
        with pytest.raises(ValueError, match="w7"):
            sample_style_set(self.writer(3), p=15)


class TestPartitionScenarios:
    def splits(self):
        train = {
            "w1": [sample("cat", "w1"), sample("dog", "w1")],
            "w2": [sample("dog", "w2"), sample("bird", "w2")],
        }
        test = {
            "w3": [sample("cat", "w3"), sample("fish", "w3")],
            "w4": [sample("lizard", "w4"), sample("dog", "w4")],
        }
        return train, test

    def test_all_four_scenarios_nonempty(self):
        train, test = self.splits()
        scenarios = partition_scenarios(train, test)
        for name in ("IV-S", "IV-U", "OOV-S", "OOV-U"):
            assert len(scenarios[name]) > 0

    def test_membership_invariants_exhaustive(self):
        train, test = self.splits()
        train_vocab = vocabulary(train)
        scenarios = partition_scenarios(train, test)
        for writer, word in scenarios["IV-S"].pairs:
            assert word in train_vocab and writer in train
        for writer, word in scenarios["IV-U"].pairs:
            assert word in train_vocab and writer not in train
        for writer, word in scenarios["OOV-S"].pairs:
            assert word not in train_vocab and writer in train
        for writer, word in scenarios["OOV-U"].pairs:
            assert word not in train_vocab and writer not in train

    def test_no_new_words_is_error(self):
        train, _ = self.splits()
        test = {"w3": [sample("cat", "w3")]}
        with pytest.raises(ValueError, match="out-of-vocabulary"):
            partition_scenarios(train, test)

    def test_pair_cap_is_deterministic(self):
        train, test = self.splits()
        a = partition_scenarios(train, test, max_pairs_per_scenario=2, seed=5)
        b = partition_scenarios(train, test, max_pairs_per_scenario=2, seed=5)
        assert a["IV-S"].pairs == b["IV-S"].pairs
        assert len(a["IV-S"]) == 2
