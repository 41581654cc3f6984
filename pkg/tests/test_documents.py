import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkshard.documents import (
    Anchor,
    Document,
    DocumentFormatError,
    Segment,
    document_from_json,
    document_to_json,
)

WORDS = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "étude", "k2"]


def make_doc():
    text = "alpha beta gamma delta"
    return Document(
        id=3,
        title="Alpha",
        url="https://example/alpha",
        segments=[
            Segment(1, text, [Anchor("Beta", "beta", 6, 10, target_id=1)]),
            Segment(2, "plain second paragraph"),
        ],
    )


def test_round_trip_preserves_structure():
    doc = make_doc()
    again = document_from_json(document_to_json(doc))
    assert again == doc


def test_serialization_is_byte_stable():
    line = document_to_json(make_doc())
    assert document_to_json(document_from_json(line)) == line


def test_word_count_is_whitespace_tokens():
    assert make_doc().word_count == 4 + 3


def test_unresolved_anchor_omits_target_id():
    doc = make_doc()
    doc.segments[0].anchors[0].target_id = None
    assert '"target_id"' not in document_to_json(doc)


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d.segments.clear(), "no segments"),
        (lambda d: setattr(d.segments[1], "index", 3), "consecutive"),
        (lambda d: setattr(d.segments[0].anchors[0], "end", 99), "out of bounds"),
        (lambda d: setattr(d.segments[0].anchors[0], "surface", "nope"), "does not match"),
    ],
)
def test_validate_rejects_bad_documents(mutate, message):
    doc = make_doc()
    mutate(doc)
    with pytest.raises(DocumentFormatError, match=message):
        doc.validate()


def test_overlapping_anchor_spans_rejected():
    doc = make_doc()
    doc.segments[0].anchors.append(Anchor("Gamma", "eta gam", 7, 14))
    with pytest.raises(DocumentFormatError, match="overlapping or unsorted"):
        doc.validate()


@st.composite
def documents(draw):
    """Structurally valid documents: anchors cover whole-word slices."""
    segments = []
    n_segments = draw(st.integers(1, 4))
    for index in range(1, n_segments + 1):
        words = draw(st.lists(st.sampled_from(WORDS), min_size=1, max_size=12))
        text = " ".join(words)
        anchor_positions = draw(
            st.lists(st.integers(0, len(words) - 1), unique=True, max_size=3).map(sorted)
        )
        anchors = []
        for pos in anchor_positions:
            start = len(" ".join(words[:pos])) + (1 if pos else 0)
            end = start + len(words[pos])
            anchors.append(Anchor(draw(st.sampled_from(WORDS)), words[pos], start, end))
        segments.append(Segment(index, text, anchors))
    return Document(
        id=draw(st.integers(0, 10_000)),
        title=draw(st.text(min_size=1, max_size=20).filter(str.strip)),
        segments=segments,
        url=draw(st.none() | st.text(max_size=20)),
    )


@settings(max_examples=60)
@given(documents())
def test_round_trip_property(doc):
    doc.validate()
    line = document_to_json(doc)
    again = document_from_json(line)
    assert again == doc
    assert document_to_json(again) == line
