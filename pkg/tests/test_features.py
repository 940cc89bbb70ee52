from datetime import datetime, timezone
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from serpscope.errors import DuplicateVertical, EmptyResults, EmptyTitles, RangeViolation, TooFewVerticals
from serpscope.features import (
    ABSENT,
    MAX_RANK,
    PRESENT,
    FeatureVector,
    ad_ratio,
    com_rate,
    extract_all,
    extract_presence,
    levenshtein,
    max_title_dissimilarity,
    max_title_overlap,
    non_html_rate,
    title_dissimilarity,
    title_overlap,
    tokenize,
    vertical_permutation_rank,
    vertical_permutation_unrank,
)
from serpscope.serp import ResultEntry, SerpRecord, VerticalKind, load_serp

TS = datetime(2016, 3, 15, tzinfo=timezone.utc)

# Frozen outputs for the bundled fixtures, hand-checked against counts in the HTML.
GOLDEN = {
    "moon shot": (1, 0, 1, 1 / 12, 0.0, 275, 0, 7 / 11, 39 / 46, 2),
    "cheap bicycle": (1, 1, 1, 4 / 12, 0.0, 273, 1, 7 / 8, 45 / 55, 1),
    "genetically engineered mice": (1, 0, 0, 0.0, 1 / 9, 154, 0, 2 / 9, 40 / 61, 3),
}


@pytest.mark.parametrize("query", list(GOLDEN))
def test_fixture_feature_vectors(fixtures, query):
    rec = load_serp(fixtures / f"{query.replace(' ', '-')}.json")
    assert extract_all(query, rec).as_tuple() == pytest.approx(GOLDEN[query], abs=1e-12)


def test_html_and_json_give_same_features(fixtures):
    a = load_serp(fixtures / "cheap-bicycle.html")
    b = load_serp(fixtures / "cheap-bicycle.json")
    assert extract_all("cheap bicycle", a) == extract_all("cheap bicycle", b)


# -- building blocks ---------------------------------------------------------


def entry(rank, url="https://example.com/", title="t", **kw):
    return ResultEntry(title=title, url=url, rank=rank, **kw)


def record(entries, verticals=(0, 1, 2), kp=False, images=False):
    return SerpRecord("q", tuple(entries), tuple(VerticalKind(v) for v in verticals), kp, images, TS)


def test_presence_encoding_is_zero_for_present():
    rec = record([entry(1, "https://en.wikipedia.org/wiki/X")], kp=True)
    assert extract_presence(rec, "knowledge") == PRESENT == 0
    assert extract_presence(rec, "images") == ABSENT == 1
    assert extract_presence(rec, "wikipedia") == PRESENT
    assert extract_presence(rec, "scholar") == ABSENT


def test_ratios():
    rec = record(
        [
            entry(1, is_ad=True),
            entry(2, "https://a.edu/x.pdf", mime_hint="PDF"),
            entry(3, "https://b.com/", mime_hint="html"),
            entry(4, "https://c.org/", mime_hint="ppt"),
        ]
    )
    assert ad_ratio(rec) == 0.25
    assert non_html_rate(rec) == 0.5
    assert com_rate(rec) == pytest.approx(1 / 3)


def test_com_rate_ignores_ads():
    rec = record([entry(1, "https://shop.com/", is_ad=True), entry(2, "https://a.edu/")])
    assert com_rate(rec) == 0.0


def test_extraction_errors():
    with pytest.raises(EmptyResults):
        extract_all("q", record([]))
    with pytest.raises(EmptyResults):
        com_rate(record([entry(1, is_ad=True)]))
    with pytest.raises(TooFewVerticals):
        extract_all("q", record([entry(1)], verticals=(0, 1)))
    with pytest.raises(DuplicateVertical):
        vertical_permutation_rank((3, 3, 4))
    with pytest.raises(EmptyTitles):
        max_title_dissimilarity("q", [])
    with pytest.raises(EmptyTitles):
        max_title_overlap("q", [])


def test_rank_uses_first_three_only():
    assert vertical_permutation_rank((6, 3, 7, 0, 1)) == 275


@given(st.permutations(range(8)))
def test_rank_unrank_round_trip(perm):
    r = vertical_permutation_rank(perm[:3])
    assert 0 <= r <= MAX_RANK
    assert vertical_permutation_unrank(r) == tuple(perm[:3])


def test_unrank_range():
    with pytest.raises(ValueError):
        vertical_permutation_unrank(MAX_RANK + 1)


# -- edit distance -----------------------------------------------------------


def naive_levenshtein(a, b):
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0 or j == 0:
            return i + j
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


short_text = st.text(alphabet="abcAB -", max_size=10)


@given(short_text, short_text)
def test_levenshtein_matches_recursive_definition(a, b):
    assert levenshtein(a, b) == naive_levenshtein(a, b)


@pytest.mark.parametrize("a,b,d", [("kitten", "sitting", 3), ("", "abc", 3), ("flaw", "lawn", 2), ("é", "e", 1)])
def test_levenshtein_known_values(a, b, d):
    assert levenshtein(a, b) == d


@given(st.text(max_size=40), st.text(max_size=60))
def test_dissimilarity_bounds_and_case(q, t):
    v = title_dissimilarity(q, t)
    assert 0.0 <= v <= 1.0
    assert v == title_dissimilarity(q.lower(), t.lower())


@given(st.text(min_size=1, max_size=30))
def test_identical_title_scores_zero(t):
    assert title_dissimilarity(t, t) == 0.0


def test_dissimilarity_is_case_insensitive():
    assert title_dissimilarity("Moon Shot", "moon shot") == 0.0


# -- token overlap -----------------------------------------------------------


words = st.lists(st.sampled_from(["moon", "Moon", "shot", "shot,", "a", "the", "x"]), max_size=8).map(" ".join)


@given(words, words)
def test_overlap_symmetric_and_bounded(q, t):
    o = title_overlap(q, t)
    assert o == title_overlap(t, q)
    assert 0 <= o <= min(len(tokenize(q)), len(tokenize(t)))


def test_punctuation_stays_on_tokens():
    assert tokenize("Wikipedia, the free") == {"wikipedia,", "the", "free"}
    assert title_overlap("moon shot", "Moon Shot! tonight") == 1


# -- feature vector ----------------------------------------------------------


@pytest.mark.parametrize(
    "index,value",
    [(0, 2), (3, 1.5), (4, -0.1), (5, 336), (5, -1), (9, -1), (8, float("nan")), (6, 0.5)],
)
def test_feature_vector_rejects_out_of_domain(index, value):
    values = [0, 0, 0, 0.0, 0.0, 0, 0, 0.0, 0.0, 0]
    values[index] = value
    with pytest.raises(RangeViolation):
        FeatureVector.from_sequence(values)


def test_feature_vector_coerces_integral_floats():
    fv = FeatureVector.from_sequence([1.0, 0, 1, 0, 0, 275.0, 0, 0.5, 0.5, 2.0])
    assert isinstance(fv.f6_vertical_rank, int) and isinstance(fv.f4_ad_ratio, float)


@settings(max_examples=200)
@given(
    st.lists(
        st.tuples(st.text(max_size=50), st.sampled_from(["com", "org", "edu"]), st.booleans(), st.sampled_from(["", "pdf", "doc"])),
        min_size=1,
        max_size=15,
    ).filter(lambda es: not all(ad for _, _, ad, _ in es)),
    st.permutations(range(8)),
    st.text(max_size=30),
)
def test_extract_all_within_domains(specs, perm, query):
    entries = [entry(i + 1, f"https://site.{tld}/", title, is_ad=ad, mime_hint=m) for i, (title, tld, ad, m) in enumerate(specs)]
    fv = extract_all(query, record(entries, verticals=perm[:3]))
    assert fv.violations() == []
