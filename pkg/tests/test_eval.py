import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from influlocal.eval import UndefinedMetricError, auc, evaluate, f1_from, prf1


def auc_all_pairs(labels, scores):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return total / (len(pos) * len(neg))


def test_auc_matches_all_pairs_oracle_exactly():
    rng = np.random.default_rng(6)
    checked = 0
    while checked < 1000:
        m = int(rng.integers(2, 40))
        labels = rng.integers(0, 2, m)
        if labels.min() == labels.max():
            continue
        # coarse grid forces ties
        scores = rng.integers(0, int(rng.integers(2, 10)), m) / 4.0
        assert auc(labels, scores) == auc_all_pairs(labels, scores)
        checked += 1


def test_auc_hand_example():
    assert auc([1, 0, 1, 0], [0.8, 0.7, 0.6, 0.5]) == 0.75
    assert auc([1, 0], [0.3, 0.3]) == 0.5
    assert auc([0, 1], [0.1, 0.9]) == 1.0


def test_auc_undefined():
    with pytest.raises(UndefinedMetricError):
        auc([1, 1], [0.2, 0.3])
    with pytest.raises(UndefinedMetricError):
        auc([], [])


@given(st.lists(st.tuples(st.booleans(), st.integers(-50, 50)), min_size=2, max_size=30))
@settings(max_examples=100, deadline=None)
def test_auc_monotone_invariance_and_flip(pairs):
    labels = np.array([p[0] for p in pairs])
    scores = np.array([p[1] for p in pairs]) / 10.0
    if labels.all() or not labels.any():
        return
    a = auc(labels, scores)
    assert auc(labels, np.exp(scores)) == pytest.approx(a, abs=1e-12)
    assert auc(labels, -scores) == pytest.approx(1 - a, abs=1e-12)
    assert 0.0 <= a <= 1.0


def test_f1_from_published_row():
    assert round(100 * f1_from(0.6682, 0.7849), 2) == pytest.approx(72.19, abs=0.01)
    assert f1_from(0.0, 0.0) == 0.0


def test_prf1_thresholds_and_edges():
    p, r, f, counts = prf1([1, 0, 1, 0], [0.5, 0.5, 0.2, 0.1], 0.5)
    assert counts == {"tp": 1, "fp": 1, "tn": 1, "fn": 1}
    assert (p, r) == (0.5, 0.5) and f == 0.5
    p, r, f, _ = prf1([1, 0], [0.1, 0.2], 0.9)
    assert (p, r, f) == (0.0, 0.0, 0.0)
    p, r, f, _ = prf1([0, 0], [0.9, 0.9])
    assert (p, r, f) == (0.0, 0.0, 0.0)


def test_evaluate_report(tmp_path):
    class Inst:
        def __init__(self, label, score):
            self.label, self.score = label, score

    insts = [Inst(1, 0.8), Inst(0, 0.7), Inst(1, 0.6), Inst(0, 0.5)]
    calls = []

    def predictor(xs):
        calls.append(len(xs))
        return [x.score for x in xs]

    rep = evaluate(predictor, insts)
    assert calls == [4] and rep.auc == 0.75 and rep.counts["tp"] == 2
    rep.save(str(tmp_path / "r.json"), split="test")
    doc = json.load(open(tmp_path / "r.json"))
    assert doc["metrics"]["auc"] == 0.75 and doc["split"] == "test"
    rep.save_scores(str(tmp_path / "s.txt"))
    assert open(tmp_path / "s.txt").read().splitlines()[1] == "1 0.8"
    with pytest.raises(UndefinedMetricError):
        evaluate(lambda xs: [0.5] * len(xs), [Inst(1, 0), Inst(1, 0)])
    with pytest.raises(ValueError):
        evaluate(lambda xs: [0.5], insts)
