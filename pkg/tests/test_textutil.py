import string

from hypothesis import given, strategies as st

from wikiforge.textutil import (
    capitalized_runs,
    content_tokens,
    segment_sentences,
    sentence_segments,
    slugify,
    tokenize,
)


def test_basic_split():
    assert segment_sentences("A won. B lost.") == ["A won.", "B lost."]


def test_abbreviation_not_split():
    # hand-applied rule: "Dr." is on the exception list, "arrived." is not
    assert segment_sentences("Dr. Smith arrived. He left.") == [
        "Dr. Smith arrived.",
        "He left.",
    ]


def test_empty_text():
    assert segment_sentences("") == []


def test_multi_dot_abbreviations():
    assert segment_sentences("The U.S. Senate met. No. 5 won.") == [
        "The U.S. Senate met.",
        "No. 5 won.",
    ]


def test_split_requires_capital_or_digit():
    assert segment_sentences("pi is 3.14 exactly. and more") == [
        "pi is 3.14 exactly. and more"
    ]
    assert segment_sentences("It ended. 12 teams left.") == [
        "It ended.",
        "12 teams left.",
    ]


def test_question_and_exclamation():
    assert segment_sentences("Why? Because! So there.") == [
        "Why?",
        "Because!",
        "So there.",
    ]


@given(
    st.lists(
        st.text(alphabet=string.ascii_letters + " ,;'", min_size=1, max_size=40),
        min_size=0,
        max_size=8,
    )
)
def test_segments_rejoin_losslessly(chunks):
    text = ". ".join(c.strip() or "x" for c in chunks)
    assert "".join(sentence_segments(text)) == text


def test_rejoin_preserves_odd_whitespace():
    text = "First won.  Second lost.\n\nThird tied."
    assert "".join(sentence_segments(text)) == text


def test_tokenize_lowercase_nonalnum_split():
    assert tokenize("Red-Apple PIE, 42!") == ["red", "apple", "pie", "42"]


def test_content_tokens_filters_short():
    assert content_tokens("a big festival of art") == {"festival"}


def test_capitalized_runs():
    text = "The Harbor Lights Parade crossed Cambodia, near Phnom Penh."
    assert capitalized_runs(text) == ["Harbor Lights Parade", "Cambodia", "Phnom Penh"]


def test_capitalized_runs_min_tokens():
    text = "After the ceremony, Quah Ting Wen thanked Singapore."
    assert capitalized_runs(text, min_tokens=2) == ["Quah Ting Wen"]


def test_slugify():
    assert slugify("Calder Valley Music Festival") == "calder_valley_music_festival"
    assert slugify("  X: y/Z ") == "x_y_z"
