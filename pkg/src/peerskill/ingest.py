"""Reading comment/rating logs and assembling per-prompt graph series.

Two CSV layouts are accepted::

    community_id,prompt,commenter_id,receiver_id
    community_id,prompt,rater_id,receiver_id,overall_rating

A community's series can also be stored as JSON::

    {"community_id": "g1", "roster": [...],
     "prompts": [{"prompt": 1, "weights": [[...]], "ratings": [...]}, ...]}
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .diffusion import DiffusionConfig, generate_er_graph, step
from .graph import InteractionGraph, build_laplacian
from ._validation import check_random_state

__all__ = [
    "CommentEvent",
    "RatingEvent",
    "CommunitySeries",
    "IngestError",
    "MissingRatingsError",
    "COMMENT_HEADER",
    "RATING_HEADER",
    "parse_events",
    "read_events",
    "assemble_series",
    "assemble_all",
    "series_to_comment_events",
    "write_comments_csv",
    "write_ratings_csv",
    "series_to_dict",
    "series_from_dict",
    "write_series_json",
    "read_series_json",
    "generate_synthetic_dataset",
]

COMMENT_HEADER = ("community_id", "prompt", "commenter_id", "receiver_id")
RATING_HEADER = ("community_id", "prompt", "rater_id", "receiver_id", "overall_rating")
MISSING_POLICIES = ("error", "community_mean")


class IngestError(ValueError):
    def __init__(self, source: str, line: int, fieldname: str | None, message: str):
        self.source, self.line, self.field = source, line, fieldname
        suffix = f" (field {fieldname})" if fieldname else ""
        super().__init__(f"{source}: {message} at line {line}{suffix}")


class MissingRatingsError(ValueError):
    def __init__(self, community_id, missing):
        self.community_id = community_id
        self.missing = missing
        listed = ", ".join(f"{pid} (prompt {p})" for pid, p in missing)
        super().__init__(f"community {community_id!r}: no ratings received by {listed}")


@dataclass(frozen=True)
class CommentEvent:
    community_id: str
    prompt: int
    commenter_id: str
    receiver_id: str


@dataclass(frozen=True)
class RatingEvent:
    community_id: str
    prompt: int
    rater_id: str
    receiver_id: str
    overall_rating: int


@dataclass
class CommunitySeries:
    """Roster plus one ``(InteractionGraph, ratings)`` pair per prompt.

    ``prompts[t]`` is prompt ``t + 1``. ``imputed`` lists the
    ``(participant, prompt)`` cells filled with a community mean.
    """

    roster: tuple
    prompts: list
    community_id: str | None = None
    imputed: list = field(default_factory=list)

    def __post_init__(self):
        self.roster = tuple(self.roster)
        n = len(self.roster)
        if len(set(self.roster)) != n:
            raise ValueError("roster ids must be unique")
        checked = []
        for t, (graph, signal) in enumerate(self.prompts, start=1):
            if not isinstance(graph, InteractionGraph):
                graph = InteractionGraph(graph)
            signal = np.asarray(signal, dtype=float)
            if graph.n != n or signal.shape != (n,):
                raise ValueError(f"prompt {t}: dimensions do not match roster of {n}")
            if not np.all(np.isfinite(signal)):
                raise ValueError(f"prompt {t}: ratings must be finite")
            checked.append((graph, signal))
        self.prompts = checked

    @property
    def n(self) -> int:
        return len(self.roster)

    @property
    def n_prompts(self) -> int:
        return len(self.prompts)

    @property
    def graphs(self) -> list:
        return [g for g, _ in self.prompts]

    @property
    def ratings(self) -> np.ndarray:
        """Ratings matrix of shape ``(n_prompts, n)``."""
        return np.array([r for _, r in self.prompts]).reshape(self.n_prompts, self.n)

    def laplacians(self) -> list:
        return [build_laplacian(g) for g in self.graphs]


def _text(stream) -> IO[str]:
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def _int(value: str, source, line, name) -> int:
    try:
        out = int(value)
    except ValueError:
        raise IngestError(source, line, name, f"{name} is not an integer ({value!r})") from None
    return out


def _rows(stream, header, source):
    reader = csv.reader(_text(stream))
    first = next(reader, None)
    if first is None or tuple(h.strip() for h in first) != header:
        raise IngestError(source, 1, None, f"expected header {','.join(header)}")
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        line = reader.line_num
        if len(row) != len(header):
            raise IngestError(source, line, None, f"expected {len(header)} fields, got {len(row)}")
        row = [cell.strip() for cell in row]
        for name, cell in zip(header, row):
            if not cell:
                raise IngestError(source, line, name, f"empty {name}")
        prompt = _int(row[1], source, line, "prompt")
        if prompt < 1:
            raise IngestError(source, line, "prompt", f"prompt must be >= 1 ({prompt})")
        yield line, row, prompt


def parse_events(comment_file, rating_file, comment_name="comments", rating_name="ratings"):
    """Parse both CSV streams into event lists.

    Raises
    ------
    IngestError
        Naming the source, line number and offending field.
    """
    comments = []
    for line, row, prompt in _rows(comment_file, COMMENT_HEADER, comment_name):
        if row[2] == row[3]:
            raise IngestError(comment_name, line, "receiver_id", "commenter equals receiver")
        comments.append(CommentEvent(row[0], prompt, row[2], row[3]))
    ratings = []
    for line, row, prompt in _rows(rating_file, RATING_HEADER, rating_name):
        value = _int(row[4], rating_name, line, "overall_rating")
        if not 1 <= value <= 5:
            raise IngestError(rating_name, line, "overall_rating", f"rating out of range ({value})")
        ratings.append(RatingEvent(row[0], prompt, row[2], row[3], value))
    return comments, ratings


def read_events(comments_path, ratings_path):
    with open(comments_path, "rb") as cf, open(ratings_path, "rb") as rf:
        return parse_events(cf, rf, str(comments_path), str(ratings_path))


def assemble_series(comments: Iterable[CommentEvent], ratings: Iterable[RatingEvent],
                    community_id: str, missing_policy: str = "error",
                    roster=None) -> CommunitySeries:
    """Build one community's series from raw events.

    Comment direction is dropped: ``W[i, j]`` counts comments either way.
    A participant's rating is the mean of every overall rating received in
    the prompt. The roster defaults to the sorted ids seen in the events.
    """
    if missing_policy not in MISSING_POLICIES:
        raise ValueError(f"missing_policy must be one of {MISSING_POLICIES}")
    comments = [e for e in comments if e.community_id == community_id]
    ratings = [e for e in ratings if e.community_id == community_id]
    if not ratings:
        raise ValueError(f"community {community_id!r} has no rating events")

    seen = set()
    for e in comments:
        seen.update((e.commenter_id, e.receiver_id))
    for e in ratings:
        seen.update((e.rater_id, e.receiver_id))
    if roster is None:
        roster = sorted(seen)
    else:
        unknown = seen.difference(roster)
        if unknown:
            raise ValueError(f"events mention ids outside the roster: {sorted(unknown)}")
    index = {pid: i for i, pid in enumerate(roster)}
    n = len(roster)

    present = {e.prompt for e in comments} | {e.prompt for e in ratings}
    n_prompts = max(present)
    gaps = sorted(set(range(1, n_prompts + 1)) - present)
    if gaps:
        raise ValueError(f"community {community_id!r}: prompts {gaps} have no events")

    weights = np.zeros((n_prompts, n, n), dtype=np.int64)
    for e in comments:
        i, j = index[e.commenter_id], index[e.receiver_id]
        weights[e.prompt - 1, i, j] += 1
        weights[e.prompt - 1, j, i] += 1

    sums = np.zeros((n_prompts, n))
    counts = np.zeros((n_prompts, n), dtype=np.int64)
    for e in ratings:
        sums[e.prompt - 1, index[e.receiver_id]] += e.overall_rating
        counts[e.prompt - 1, index[e.receiver_id]] += 1

    missing = [(roster[i], int(t) + 1) for t, i in zip(*np.nonzero(counts == 0))]
    missing.sort(key=lambda cell: (cell[1], cell[0]))
    if missing and missing_policy == "error":
        raise MissingRatingsError(community_id, missing)
    signals = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    for t in range(n_prompts):
        rated = counts[t] > 0
        if not rated.any():
            raise MissingRatingsError(community_id, [(pid, t + 1) for pid in roster])
        signals[t, ~rated] = signals[t, rated].mean()

    return CommunitySeries(
        roster=roster,
        prompts=[(InteractionGraph(weights[t]), signals[t]) for t in range(n_prompts)],
        community_id=community_id,
        imputed=missing,
    )


def assemble_all(comments, ratings, missing_policy="error") -> list:
    """Assemble every community appearing in the rating events, sorted by id."""
    ids = sorted({e.community_id for e in ratings})
    return [assemble_series(comments, ratings, cid, missing_policy) for cid in ids]


def series_to_comment_events(series: CommunitySeries) -> list:
    """One event per unit of weight, commenter is the lower roster index."""
    events = []
    for t, graph in enumerate(series.graphs, start=1):
        iu, ju = np.nonzero(np.triu(graph.weights, 1))
        for i, j in zip(iu, ju):
            events.extend(
                [CommentEvent(series.community_id, t, series.roster[i], series.roster[j])]
                * int(graph.weights[i, j])
            )
    return events


def _write_csv(events, header, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for e in events:
        writer.writerow([getattr(e, name) for name in header])


def write_comments_csv(events, stream) -> None:
    _write_csv(events, COMMENT_HEADER, stream)


def write_ratings_csv(events, stream) -> None:
    _write_csv(events, RATING_HEADER, stream)


def series_to_dict(series: CommunitySeries) -> dict:
    # floats go through repr, which round-trips exactly
    return {
        "community_id": series.community_id,
        "roster": list(series.roster),
        "prompts": [
            {"prompt": t, "weights": g.weights.tolist(), "ratings": [float(v) for v in r]}
            for t, (g, r) in enumerate(series.prompts, start=1)
        ],
    }


def series_from_dict(data: dict) -> CommunitySeries:
    prompts = sorted(data["prompts"], key=lambda item: item["prompt"])
    if [item["prompt"] for item in prompts] != list(range(1, len(prompts) + 1)):
        raise ValueError("series prompts must be contiguous starting at 1")
    return CommunitySeries(
        roster=data["roster"],
        prompts=[(InteractionGraph(np.array(item["weights"], dtype=np.int64)),
                  np.array(item["ratings"], dtype=float)) for item in prompts],
        community_id=data.get("community_id"),
    )


def write_series_json(series: CommunitySeries, path) -> None:
    Path(path).write_text(json.dumps(series_to_dict(series), indent=1) + "\n")


def read_series_json(path) -> CommunitySeries:
    series = series_from_dict(json.loads(Path(path).read_text()))
    if series.community_id is None:
        series.community_id = Path(path).stem
    return series


def generate_synthetic_dataset(config: DiffusionConfig, community_sizes, prompts: int,
                               seed: int) -> list:
    """Synthetic communities whose ratings follow the projected diffusion model.

    Community ``g{k}`` draws from its own stream
    ``SeedSequence(seed, spawn_key=(k - 1,))``: initial ratings uniform in
    ``[r_min, r_max]``, then per prompt a fresh ER graph and one diffusion
    step driven by that prompt's Laplacian.
    """
    if prompts < 2:
        raise ValueError(f"need at least 2 prompts for temporal evolution, got {prompts}")
    sizes = [int(s) for s in community_sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError(f"community sizes must be positive, got {sizes}")
    out = []
    for k, size in enumerate(sizes):
        cfg = replace(config, n=size, horizon=prompts).validate()
        rng = check_random_state(np.random.SeedSequence(seed, spawn_key=(k,)))
        cid = f"g{k + 1}"
        width = len(str(size))
        roster = [f"{cid}-{i + 1:0{width}d}" for i in range(size)]
        r = rng.uniform(cfg.r_min, cfg.r_max, size)
        pairs = []
        for t in range(prompts):
            graph = generate_er_graph(size, cfg.edge_prob, rng)
            pairs.append((graph, r))
            if t + 1 < prompts:
                r = step(r, build_laplacian(graph), cfg, rng)
        out.append(CommunitySeries(roster, pairs, community_id=cid))
    return out
