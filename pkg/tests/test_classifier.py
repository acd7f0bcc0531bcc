import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwlk.classifier import (
    BENIGN,
    MALICIOUS,
    EmptyTestSet,
    EmptyTrainingSet,
    EvalReport,
    Hyperparams,
    LinearModel,
    SingleClassTraining,
    evaluate,
    grid_search,
    predict,
    split,
    stratified_folds,
    stratified_split,
    train,
)
from cwlk.graph import DatasetManifest
from cwlk.kernel import FeatureVector, VocabularyMismatch


def toy(copies=50):
    pos = (FeatureVector({0: 1}), MALICIOUS)
    neg = (FeatureVector({1: 1}), BENIGN)
    return [pos, neg] * copies


def noisy(rng: random.Random, n=60, dims=12):
    """Two Gaussian-ish blobs of count vectors with a shared informative feature."""
    out = []
    for k in range(n):
        tag = MALICIOUS if k % 2 == 0 else BENIGN
        counts = {d: rng.randint(1, 4) for d in range(2, dims) if rng.random() < 0.4}
        counts[0 if tag == MALICIOUS else 1] = rng.randint(1, 3)
        out.append((FeatureVector(counts), tag))
    return out


class TestTrain:
    def test_separable_toy(self):
        data = toy()
        m = train(data)
        assert all(predict(m, v)[0] == t for v, t in data)

    def test_single_class(self):
        with pytest.raises(SingleClassTraining):
            train([(FeatureVector({0: 1}), BENIGN)] * 5)

    def test_empty(self):
        with pytest.raises(EmptyTrainingSet):
            train([])

    def test_mixed_vocabularies(self):
        with pytest.raises(VocabularyMismatch):
            train([(FeatureVector({0: 1}, vocab="a"), MALICIOUS), (FeatureVector({1: 1}, vocab="b"), BENIGN)])

    def test_deterministic(self):
        data = noisy(random.Random(1))
        assert train(data, Hyperparams(seed=3)).to_dict() == train(data, Hyperparams(seed=3)).to_dict()

    def test_not_worse_than_all_benign_on_train(self):
        rng = random.Random(2)
        data = [(FeatureVector({rng.randrange(3): 1}), rng.choice([MALICIOUS, BENIGN])) for _ in range(40)]
        m = train(data)
        hits = sum(predict(m, v)[0] == t for v, t in data)
        assert hits >= sum(t == BENIGN for _, t in data)

    @pytest.mark.parametrize("kw", [{"reg": 0}, {"reg": -1}, {"epochs": 0}])
    def test_bad_hyperparams(self, kw):
        with pytest.raises(ValueError):
            Hyperparams(**kw)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 1000), st.permutations(range(12)))
    def test_feature_index_permutation_invariance(self, seed, perm):
        data = noisy(random.Random(seed))
        moved = [(FeatureVector({perm[k]: c for k, c in v.counts.items()}), t) for v, t in data]
        a, b = train(data, n_features=12), train(moved, n_features=12)
        for (v, _), (w, _) in zip(data, moved):
            (ca, sa), (cb, sb) = predict(a, v), predict(b, w)
            assert sa == pytest.approx(sb, abs=1e-9)
            if abs(sa) > 1e-9:
                assert ca == cb


class TestPredict:
    def test_tie_is_benign(self):
        assert predict(LinearModel({}, 0.0), FeatureVector({})) == (BENIGN, 0.0)

    def test_positive_score(self):
        m = LinearModel({0: 0.5, 3: 1.0}, -0.5)
        assert predict(m, FeatureVector({0: 3, 3: 1})) == (MALICIOUS, 2.0)

    def test_vocabulary_check(self):
        m = LinearModel({}, 0.0, vocab="aaaa")
        with pytest.raises(VocabularyMismatch):
            predict(m, FeatureVector({}, vocab="bbbb"))

    def test_model_json_round_trip(self):
        m = train(toy(5))
        text = json.dumps(m.to_dict())
        assert LinearModel.from_dict(json.loads(text)) == m


class TestMetrics:
    def test_perfect(self):
        truth = [MALICIOUS] * 10 + [BENIGN] * 10
        r = EvalReport.from_predictions(truth, truth)
        assert (r.precision, r.recall, r.f_measure) == (1.0, 1.0, 1.0)

    def test_all_malicious_predictor(self):
        r = EvalReport.from_predictions([MALICIOUS] * 10 + [BENIGN] * 10, [MALICIOUS] * 20)
        assert (r.precision, r.recall) == (0.5, 1.0)
        assert r.f_measure == pytest.approx(2 / 3)

    def test_ninety_percent(self):
        r = EvalReport.from_counts(tp=9, fp=1, tn=9, fn=1)
        assert (r.precision, r.recall) == (0.9, 0.9)
        assert r.f_measure == pytest.approx(0.9)

    def test_zero_denominators(self):
        r = EvalReport.from_counts(0, 0, 5, 0)
        assert (r.precision, r.recall, r.f_measure) == (0.0, 0.0, 0.0)

    @given(st.lists(st.tuples(st.sampled_from([MALICIOUS, BENIGN]), st.sampled_from([MALICIOUS, BENIGN])), min_size=1))
    def test_counts_sum_to_test_size(self, pairs):
        r = EvalReport.from_predictions([a for a, _ in pairs], [b for _, b in pairs])
        assert r.tp + r.fp + r.tn + r.fn == len(pairs)
        assert 0 <= r.f_measure <= 1

    def test_evaluate_empty(self):
        with pytest.raises(EmptyTestSet):
            evaluate(LinearModel({}, 0.0), [])


class TestSplit:
    def test_hundred_balanced(self):
        tags = [MALICIOUS] * 50 + [BENIGN] * 50
        tr, te = stratified_split(tags, 0.6, 1)
        assert (len(tr), len(te)) == (60, 40)
        assert sum(tags[i] == MALICIOUS for i in tr) == 30
        assert sum(tags[i] == MALICIOUS for i in te) == 20

    def test_five_entries(self):
        tr, te = stratified_split([MALICIOUS] * 3 + [BENIGN] * 2, 0.6, 0)
        assert (len(tr), len(te)) == (3, 2)

    def test_two_thirds(self):
        tr, te = stratified_split([MALICIOUS] * 300 + [BENIGN] * 300, 2 / 3, 42)
        assert (len(tr), len(te)) == (400, 200)

    def test_manifest_split_deterministic(self):
        m = DatasetManifest([(f"g{k}.json", MALICIOUS if k % 2 else BENIGN) for k in range(20)], split_seed=4)
        assert split(m) == split(m)
        tr, te = split(m)
        assert sorted(tr + te) == sorted(p for p, _ in m.entries)
        assert split(m, seed=5) != split(m)

    def test_unlabeled_entries_skipped(self):
        m = DatasetManifest([("a", MALICIOUS), ("b", BENIGN), ("c", "unlabeled")])
        tr, te = split(m)
        assert "c" not in tr + te

    @given(
        st.integers(0, 40), st.integers(0, 40),
        st.sampled_from([0.5, 0.6, 2 / 3, 0.8]), st.integers(0, 2**31),
    )
    def test_split_partition(self, n_mal, n_ben, f, seed):
        tags = [MALICIOUS] * n_mal + [BENIGN] * n_ben
        tr, te = stratified_split(tags, f, seed)
        assert sorted(tr + te) == list(range(len(tags)))
        assert len(tr) == int(len(tags) * f + 1e-9)

    def test_folds_partition(self):
        tags = [MALICIOUS] * 13 + [BENIGN] * 12
        folds = stratified_folds(tags, 5, 0)
        seen = sorted(i for _, va in folds for i in va)
        assert seen == list(range(25))
        for tr, va in folds:
            assert not set(tr) & set(va)
            assert sum(tags[i] == MALICIOUS for i in va) in (2, 3)


def test_grid_search_picks_a_grid_value():
    data = noisy(random.Random(7))
    best, scores = grid_search(data, (1e-2, 1e-3), folds=3)
    assert best in (1e-2, 1e-3)
    assert set(scores) == {1e-2, 1e-3}
    assert scores[best] == max(scores.values())
