import io
import random

import numpy as np
import pytest

from peerskill import DiffusionConfig, InteractionGraph, generate_synthetic_dataset
from peerskill.ingest import (
    CommentEvent,
    IngestError,
    MissingRatingsError,
    RatingEvent,
    assemble_series,
    parse_events,
    read_series_json,
    series_from_dict,
    series_to_comment_events,
    series_to_dict,
    write_comments_csv,
    write_ratings_csv,
    write_series_json,
)

COMMENTS = b"community_id,prompt,commenter_id,receiver_id\n"
RATINGS = b"community_id,prompt,rater_id,receiver_id,overall_rating\n"


def parse(comment_rows="", rating_rows=""):
    return parse_events(io.BytesIO(COMMENTS + comment_rows.encode()),
                        io.BytesIO(RATINGS + rating_rows.encode()))


def test_parse_rows():
    comments, ratings = parse("g1,2,alice,bob\n", "g1,2,carol,bob,4\n")
    assert comments == [CommentEvent("g1", 2, "alice", "bob")]
    assert ratings == [RatingEvent("g1", 2, "carol", "bob", 4)]


@pytest.mark.parametrize(
    "comments, ratings, match",
    [
        ("", "g1,2,carol,bob,9\n", r"rating out of range .* at line 2"),
        ("", "g1,2,carol,bob,four\n", r"overall_rating"),
        ("", "g1,0,carol,bob,3\n", r"prompt must be >= 1"),
        ("g1,1,alice\n", "", r"expected 4 fields"),
        ("g1,1,alice,alice\n", "", r"commenter equals receiver"),
        ("g1,1,a,b\ng1,x,a,b\n", "", r"at line 3 \(field prompt\)"),
    ],
)
def test_parse_errors(comments, ratings, match):
    with pytest.raises(IngestError, match=match):
        parse(comments, ratings)


def test_error_names_file():
    with pytest.raises(IngestError) as info:
        parse("", "g1,1,a,b,6\n")
    assert info.value.source == "ratings" and info.value.line == 2
    assert info.value.field == "overall_rating"


def test_header_required():
    with pytest.raises(IngestError, match="header"):
        parse_events(io.BytesIO(b"g1,1,a,b\n"), io.BytesIO(RATINGS))


def events_fixture():
    comments = [CommentEvent("g1", 1, "A", "B"), CommentEvent("g1", 1, "B", "A"),
                CommentEvent("g1", 1, "A", "B"), CommentEvent("g1", 2, "C", "A"),
                CommentEvent("g2", 1, "X", "Y")]
    ratings = [RatingEvent("g1", 1, r, "B", v) for r, v in (("A", 4), ("C", 5), ("A", 3))]
    ratings += [RatingEvent("g1", 1, "B", "A", 2), RatingEvent("g1", 1, "B", "C", 5),
                RatingEvent("g1", 2, "B", "A", 3), RatingEvent("g1", 2, "A", "B", 1)]
    return comments, ratings


def test_assemble_counts_and_means():
    comments, ratings = events_fixture()
    series = assemble_series(comments, ratings, "g1", "community_mean")
    assert series.roster == ("A", "B", "C")
    w1 = series.prompts[0][0].weights
    assert w1[0, 1] == w1[1, 0] == 3
    np.testing.assert_allclose(series.prompts[0][1], [2.0, 4.0, 5.0])
    assert series.prompts[1][0].weights[0, 2] == 1
    # C unrated in prompt 2 -> mean of A (3) and B (1)
    assert series.prompts[1][1][2] == pytest.approx(2.0)
    assert series.imputed == [("C", 2)]


def test_assemble_missing_error_policy():
    comments, ratings = events_fixture()
    with pytest.raises(MissingRatingsError, match=r"C \(prompt 2\)"):
        assemble_series(comments, ratings, "g1", "error")


def test_assemble_order_invariant():
    comments, ratings = events_fixture()
    base = assemble_series(comments, ratings, "g1", "community_mean")
    rnd = random.Random(0)
    for _ in range(5):
        rnd.shuffle(comments)
        rnd.shuffle(ratings)
        other = assemble_series(comments, ratings, "g1", "community_mean")
        assert other.roster == base.roster
        for (g1, r1), (g2, r2) in zip(base.prompts, other.prompts):
            assert g1 == g2
            np.testing.assert_array_equal(r1, r2)
            np.testing.assert_array_equal(g1.weights, g1.weights.T)
            assert not np.any(np.diag(g1.weights))


def test_assemble_requires_ratings():
    comments, _ = events_fixture()
    with pytest.raises(ValueError, match="no rating events"):
        assemble_series(comments, [], "g2")


def test_assemble_rejects_prompt_gaps():
    ratings = [RatingEvent("g", 1, "a", "b", 3), RatingEvent("g", 1, "b", "a", 3),
               RatingEvent("g", 3, "a", "b", 3), RatingEvent("g", 3, "b", "a", 3)]
    with pytest.raises(ValueError, match=r"prompts \[2\]"):
        assemble_series([], ratings, "g")


def test_generate_shapes_and_determinism():
    sizes = [26, 31, 26, 30, 22, 23]
    a = generate_synthetic_dataset(DiffusionConfig(), sizes, 5, 42)
    b = generate_synthetic_dataset(DiffusionConfig(), sizes, 5, 42)
    assert [s.n for s in a] == sizes
    assert all(s.n_prompts == 5 for s in a)
    assert [series_to_dict(s) for s in a] == [series_to_dict(s) for s in b]
    for s in a:
        assert np.all((s.ratings >= 1) & (s.ratings <= 5))
        assert set(np.unique([g.weights for g in s.graphs])) <= {0, 1}


def test_generate_needs_two_prompts():
    with pytest.raises(ValueError, match="2 prompts"):
        generate_synthetic_dataset(DiffusionConfig(), [5], 1, 0)


def test_round_trip(tmp_path):
    (series,) = generate_synthetic_dataset(DiffusionConfig(edge_prob=0.3), [12], 4, 5)
    path = tmp_path / "g1.json"
    write_series_json(series, path)
    back = read_series_json(path)
    assert back.roster == series.roster and back.community_id == "g1"
    for (g1, r1), (g2, r2) in zip(series.prompts, back.prompts):
        assert g1 == g2
        np.testing.assert_allclose(r1, r2, rtol=0, atol=1e-9)

    buf = io.StringIO()
    write_comments_csv(series_to_comment_events(series), buf)
    comments, _ = parse_events(io.BytesIO(buf.getvalue().encode()), io.BytesIO(RATINGS))
    rebuilt = assemble_series(
        comments, [RatingEvent("g1", p, series.roster[1], series.roster[0], 3) for p in (1, 2, 3, 4)],
        "g1", "community_mean", roster=series.roster,
    )
    assert rebuilt.graphs == series.graphs


def test_weighted_edges_emit_repeated_comments():
    from peerskill.ingest import CommunitySeries

    series = CommunitySeries(("a", "b"), [(InteractionGraph([[0, 2], [2, 0]]), [3.0, 4.0])], "g")
    assert len(series_to_comment_events(series)) == 2


def test_ratings_csv_round_trip():
    _, ratings = events_fixture()
    buf = io.StringIO()
    write_ratings_csv(ratings, buf)
    _, parsed = parse_events(io.BytesIO(COMMENTS), io.BytesIO(buf.getvalue().encode()))
    assert parsed == ratings


def test_series_dict_rejects_gaps():
    data = {"roster": ["a"], "prompts": [{"prompt": 2, "weights": [[0]], "ratings": [3.0]}]}
    with pytest.raises(ValueError, match="contiguous"):
        series_from_dict(data)
