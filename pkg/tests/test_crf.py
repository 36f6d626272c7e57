import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clinmask.core import EntityClass, Tag
from clinmask.crf import (
    CrfConfig, CrfModel, CrfTrainingError, log_partition, nll_and_gradient, score_path, train_crf, viterbi,
)
from clinmask.features import FeatureIndex
from clinmask.tokenize import tokenize

from crf_oracles import (
    brute_argmax, brute_log_partition, brute_nll, brute_score, central_differences, random_model, random_sequence,
    relative_error,
)


def zero_model(L, F):
    return CrfModel.zeros(list(range(L)), FeatureIndex([f"f{i}" for i in range(F)]).freeze(), 0.0)


def test_zero_weights_score_zero():
    m = zero_model(3, 4)
    assert score_path(m, [[0], [1, 2], []], [0, 2, 1]) == 0.0


def test_length_one_score():
    rng = np.random.default_rng(1)
    m = random_model(rng, 3, 4)
    x = [[1, 3]]
    for y in range(3):
        expected = m.begin[y] + m.emission[y, 1] + m.emission[y, 3] + m.end[y]
        assert score_path(m, x, [y]) == pytest.approx(expected, abs=1e-12)


def test_score_path_length_mismatch():
    with pytest.raises(ValueError):
        score_path(zero_model(2, 2), [[0], [1]], [0])


def test_score_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(50):
        m = random_model(rng, 4, 6)
        x = random_sequence(rng, int(rng.integers(1, 7)), 6)
        y = rng.integers(0, 4, size=len(x)).tolist()
        assert score_path(m, x, y) == pytest.approx(brute_score(m, x, y), abs=1e-10)


@pytest.mark.parametrize("n,L", [(1, 2), (4, 3), (6, 5)])
def test_log_partition_uniform(n, L):
    assert log_partition(zero_model(L, 2), [[0]] * n) == pytest.approx(n * math.log(L), abs=1e-12)


def test_log_partition_length_one_is_logsumexp():
    rng = np.random.default_rng(3)
    m = random_model(rng, 4, 3)
    x = [[0, 2]]
    s = [score_path(m, x, [y]) for y in range(4)]
    assert log_partition(m, x) == pytest.approx(np.log(np.sum(np.exp(s))), abs=1e-12)


def test_log_partition_large_scores_stable():
    rng = np.random.default_rng(4)
    m = random_model(rng, 3, 3, scale=300.0)
    x = [[0, 1, 2]] * 4
    got = log_partition(m, x)
    assert math.isfinite(got)
    assert got == pytest.approx(brute_log_partition(m, x), rel=1e-12)


def test_paths_normalize():
    rng = np.random.default_rng(5)
    for _ in range(20):
        L, n = int(rng.integers(2, 6)), int(rng.integers(1, 6))
        m = random_model(rng, L, 5)
        x = random_sequence(rng, n, 5)
        logz = log_partition(m, x)
        import itertools
        total = sum(math.exp(score_path(m, x, y) - logz) for y in itertools.product(range(L), repeat=n))
        assert total == pytest.approx(1.0, abs=1e-8)


def test_viterbi_zero_weights_picks_label_zero():
    assert viterbi(zero_model(4, 2), [[0], [1], []]) == [0, 0, 0]


def test_viterbi_matches_brute_force():
    rng = np.random.default_rng(6)
    for _ in range(100):
        L, n = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        m = random_model(rng, L, 5)
        x = random_sequence(rng, n, 5)
        # compared by score: label swaps over identical positions can tie exactly
        assert score_path(m, x, viterbi(m, x)) == pytest.approx(score_path(m, x, brute_argmax(m, x)), abs=1e-9)


def test_viterbi_score_dominates_random_paths():
    rng = np.random.default_rng(7)
    m = random_model(rng, 5, 8)
    x = random_sequence(rng, 12, 8)
    best = score_path(m, x, viterbi(m, x))
    for _ in range(100):
        y = rng.integers(0, 5, size=12).tolist()
        assert best >= score_path(m, x, y) - 1e-12


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_viterbi_invariant_to_emission_shift(seed, c):
    rng = np.random.default_rng(seed)
    m = random_model(rng, 4, 5)
    x = [ids or [0] for ids in random_sequence(rng, 6, 5)]
    # with a constant added to every weight, each active feature shifts all labels equally
    shifted = CrfModel(m.labels, m.feature_index, m.emission + c, m.transition.copy(), m.begin.copy(), m.end.copy())
    assert viterbi(shifted, x) == viterbi(m, x)


def test_nll_zero_weights():
    m = zero_model(3, 2)
    nll, _ = nll_and_gradient(m, [([[0], [1], [0], []], [0, 1, 2, 0])])
    assert nll == pytest.approx(4 * math.log(3), abs=1e-12)


def test_nll_matches_brute_force():
    rng = np.random.default_rng(8)
    m = random_model(rng, 3, 4, l2=0.3)
    batch = [(random_sequence(rng, 4, 4), [0, 2, 1, 1]), (random_sequence(rng, 2, 4), [2, 2])]
    nll, _ = nll_and_gradient(m, batch)
    assert nll == pytest.approx(brute_nll(m, batch), rel=1e-12)
    assert nll >= -1e-9


def test_gradient_finite_differences():
    rng = np.random.default_rng(9)
    for _ in range(5):
        m = random_model(rng, 3, 5, l2=0.5)
        batch = [(random_sequence(rng, int(rng.integers(1, 5)), 5), rng.integers(0, 3, size=4).tolist()[:0] or None)
                 for _ in range(3)]
        batch = [(x, rng.integers(0, 3, size=len(x)).tolist()) for x, _ in batch]
        _, g = nll_and_gradient(m, batch)
        fd = central_differences(m, batch)
        assert relative_error(g, fd).max() < 1e-4


def test_empty_batch_gradient_is_l2_term():
    rng = np.random.default_rng(10)
    m = random_model(rng, 3, 4, l2=0.7)
    nll, g = nll_and_gradient(m, [])
    theta = m.to_vector()
    assert np.array_equal(g, 0.7 * theta)
    assert nll == pytest.approx(0.35 * theta @ theta)


def test_batched_gradient_equals_sum_of_parts():
    rng = np.random.default_rng(11)
    m = random_model(rng, 3, 6, l2=0.0)
    batch = [(random_sequence(rng, n, 6), rng.integers(0, 3, size=n).tolist()) for n in (3, 1, 3, 5, 2)]
    nll, g = nll_and_gradient(m, batch)
    parts = [nll_and_gradient(m, [b]) for b in batch]
    assert nll == pytest.approx(sum(p[0] for p in parts), rel=1e-12)
    assert np.allclose(g, sum(p[1] for p in parts), atol=1e-10)


def _mr_corpus(n=50, seed=0):
    """Capitalized tokens after "Mr" are names; nothing else is."""
    rng = np.random.default_rng(seed)
    names = ["Smith", "Jones", "Brown", "Taylor", "Wilson", "Clark", "Young", "King"]
    filler = ["the", "patient", "was", "seen", "today", "and", "Stable", "Visit", "notes"]
    corpus = []
    for _ in range(n):
        words, tags = [], []
        for _ in range(int(rng.integers(3, 9))):
            if rng.random() < 0.3:
                words += ["Mr", rng.choice(names)]
                tags += [Tag("O"), Tag("B", EntityClass.NAME)]
            else:
                words.append(rng.choice(filler))
                tags.append(Tag("O"))
        corpus.append((words, tags))
    return corpus


def test_train_separable_corpus():
    corpus = _mr_corpus()
    result = train_crf(corpus, CrfConfig(l2=0.1, max_epochs=60))
    m = result.model
    correct = total = 0
    from clinmask.features import extract_sequence, vectorize
    for words, tags in corpus:
        x = [vectorize(v, m.feature_index) for v in extract_sequence(words)]
        pred = [m.labels[i] for i in viterbi(m, x)]
        correct += sum(p == t for p, t in zip(pred, tags))
        total += len(tags)
    assert correct / total >= 0.99
    hist = result.nll_history
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))


def test_train_memorizes_single_sentence():
    words = [t.text for t in tokenize("Seen by Dr Kowalski on 12/03/2011 .")]
    tags = [Tag.parse(s) for s in ["O", "O", "O", "B-NAME", "O", "B-DATE", "I-DATE", "I-DATE", "I-DATE", "I-DATE", "O"]]
    assert len(tags) == len(words)
    m = train_crf([(words, tags)], CrfConfig(l2=0.1, max_epochs=100)).model
    from clinmask.features import extract_sequence, vectorize
    x = [vectorize(v, m.feature_index) for v in extract_sequence(words)]
    assert [m.labels[i] for i in viterbi(m, x)] == tags


def test_train_empty_corpus_rejected():
    with pytest.raises(CrfTrainingError):
        train_crf([])


def test_training_is_deterministic():
    corpus = _mr_corpus(20, seed=3)
    a = train_crf(corpus, CrfConfig(max_epochs=15)).model
    b = train_crf(corpus, CrfConfig(max_epochs=15)).model
    assert np.array_equal(a.to_vector(), b.to_vector())


def test_model_rejects_non_finite_weights():
    m = zero_model(2, 2)
    theta = m.to_vector()
    theta[0] = np.nan
    with pytest.raises(FloatingPointError):
        m.with_vector(theta)
