import pytest
from hypothesis import given
from hypothesis import strategies as st

from clinmask.features import (
    FeatureIndex, extract_sequence, gazetteer_features, index_features, lexical_features, vectorize, word_shape,
)
from clinmask.gazetteer import load_gazetteer

CITY = load_gazetteer("city", "Paris\nLondon")
COUNTRY = load_gazetteer("country", "France")


@pytest.mark.parametrize("text,shape", [("McDonald", "WwWwwwww"), ("2019-03", "dddd-dd"), ("A1-b", "Wd-w"), ("", "")])
def test_word_shape(text, shape):
    assert word_shape(text) == shape


@given(st.text())
def test_word_shape_length_and_alphabet(s):
    shape = word_shape(s)
    assert len(shape) == len(s)
    for ch, out in zip(s, shape):
        if ch.isupper() or ch.islower() or ch.isdigit():
            assert out in "Wwd"
        else:
            assert out == ch


def _lexical_oracle(text, k):
    # flags written out independently from the feature list
    off = "0" if k == 0 else f"{k:+d}"
    f = {f"w[{off}]={text.lower()}", f"shape[{off}]=" + "".join(
        "W" if c.isupper() else "w" if c.islower() else "d" if c.isdigit() else c for c in text)}
    letters = [c for c in text if c.isalpha()]
    if letters and all(c.isupper() for c in letters):
        f.add(f"upper[{off}]")
    if letters and all(c.islower() for c in letters):
        f.add(f"lower[{off}]")
    if text and text[0].isupper():
        f.add(f"initcap[{off}]")
    if text and all(c.isalnum() for c in text):
        f.add(f"alnum[{off}]")
    if text and all(c.isalpha() for c in text):
        f.add(f"alpha[{off}]")
    return f


def test_lexical_examples():
    assert lexical_features("JOHN", 0) == {"w[0]=john", "upper[0]", "initcap[0]", "alnum[0]", "alpha[0]", "shape[0]=WWWW"}
    assert lexical_features("ab", -1) == {"w[-1]=ab", "lower[-1]", "alnum[-1]", "alpha[-1]", "shape[-1]=ww"}
    assert lexical_features("-", 2) == {"w[+2]=-", "shape[+2]=-"}
    for text, k in [("JOHN", 0), ("ab", -1), ("Smith3", 4), ("x-Ray", -4)]:
        assert lexical_features(text, k) == _lexical_oracle(text, k)


def test_gazetteer_features():
    assert gazetteer_features("paris", 0, [CITY]) == {"dict:city[0]"}
    assert gazetteer_features("paris", 3, [CITY, COUNTRY]) == {"dict:city[+3]"}
    assert gazetteer_features("zzz", 0, [CITY, COUNTRY]) == set()


def test_single_token_boundaries():
    (v,) = extract_sequence(["Paris"])
    assert lexical_features("Paris", 0) <= v
    for k in range(1, 5):
        assert f"BOS[-{k}]" in v and f"EOS[+{k}]" in v
    assert v == lexical_features("Paris", 0) | {f"BOS[-{k}]" for k in range(1, 5)} | {f"EOS[+{k}]" for k in range(1, 5)}


def test_window_touches_four_each_side():
    words = [f"t{i}" for i in range(20)]
    v = extract_sequence(words)[5]
    seen = {f.split("=")[1] for f in v if f.startswith("w[")}
    assert seen == {f"t{i}" for i in range(1, 10)}


def test_gazetteer_toggle_adds_only_dict_features():
    words = ["Anna", "moved", "to", "Paris", ",", "France", "."]
    lex = extract_sequence(words)
    gaz = extract_sequence(words, True, [CITY, COUNTRY])
    for a, b in zip(lex, gaz):
        assert a <= b
        assert all(f.startswith("dict:") for f in b - a)
    assert "dict:country[+2]" in gaz[3] and "dict:city[0]" in gaz[3]


@given(st.lists(st.text(alphabet="abAB1-.", min_size=1, max_size=5), min_size=10, max_size=15),
       st.text(alphabet="xyzXYZ9", min_size=1, max_size=5))
def test_locality(words, replacement):
    i = 2
    perturbed = list(words)
    perturbed[i + 5] = replacement
    assert extract_sequence(words)[i] == extract_sequence(perturbed)[i]
    assert extract_sequence(words) == extract_sequence(words)


def test_index_and_vectorize():
    a = frozenset({"w[0]=a", "upper[0]"})
    idx = index_features([[a, a]])
    assert sorted(vectorize(a, idx)) == [0, 1]
    assert vectorize(a, idx) == vectorize(frozenset(a), idx)
    assert vectorize(frozenset(), idx) == []
    assert vectorize({"w[0]=unseen"}, idx) == []
    with pytest.raises(RuntimeError):
        idx.add("new")


def test_vectorize_requires_frozen_index():
    with pytest.raises(RuntimeError):
        vectorize({"x"}, FeatureIndex(["x"]))


def test_index_ids_deterministic_and_contiguous():
    corpus = [[frozenset({"b", "a"}), frozenset({"c"})], [frozenset({"a", "d"})]]
    idx = index_features(corpus)
    assert idx.names == ["a", "b", "c", "d"]
    assert index_features(corpus) == idx
