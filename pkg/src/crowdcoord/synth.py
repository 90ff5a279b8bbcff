"""Deterministic synthetic corpora with ground-truth sidecars.

Stand-in for the large production datasets the analytics were designed for:
small corpora with known planted structure (crowdedness proportionality or
cohort matches) so recovery can be asserted against the sidecar.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .analytics import Event

STRUCTURES = ("none", "crowded", "cohort")

# one work event every ten minutes keeps timestamps well-ordered
_STEP = 600


@dataclass(frozen=True)
class SyntheticSpec:
    n_projects: int = 50
    min_actors: int = 2
    max_actors: int = 20
    min_work: int = 120
    max_work: int = 400
    structure: str = "none"
    # crowded structure: coordination = crowding_scale * team / final_size
    crowding_scale: float = 4.0e5
    min_size: int = 1_000
    max_size: int = 100_000
    comment_rate: float = 0.2
    discussion_rate: float = 0.1
    # cohort structure
    n_featured: int = 0
    planted_controls: int = 0
    noise_candidates: int = 0
    min_year: int = 2003
    max_year: int = 2007

    def __post_init__(self) -> None:
        if self.n_projects < 1:
            raise ValueError("n_projects must be >= 1")
        if not 1 <= self.min_actors <= self.max_actors:
            raise ValueError("need 1 <= min_actors <= max_actors")
        if not 1 <= self.min_work <= self.max_work:
            raise ValueError("need 1 <= min_work <= max_work")
        if self.structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {STRUCTURES}")
        if self.structure == "cohort" and self.n_featured < 1:
            raise ValueError("cohort structure needs n_featured >= 1")
        if not self.min_year <= self.max_year:
            raise ValueError("need min_year <= max_year")


@dataclass(frozen=True)
class SyntheticCorpus:
    events: list[Event]
    metadata: dict[str, dict]
    ground_truth: dict


def _year_ts(year: int, offset: int = 0) -> int:
    return int(datetime(year, 6, 1, tzinfo=timezone.utc).timestamp()) + offset * _STEP


def generate_synthetic(spec: SyntheticSpec, seed: int) -> SyntheticCorpus:
    if spec.structure == "cohort":
        return _generate_cohort(spec, seed)
    return _generate_flat(spec, seed)


def _generate_flat(spec: SyntheticSpec, seed: int) -> SyntheticCorpus:
    """Flat or crowdedness-planted corpus.

    Every actor gets at least one work event and one discussion event, so
    the whole team is engaged; planted discussion volume lands before the
    crowdedness threshold and the per-actor engagement edits after it.
    """
    rng = np.random.default_rng(seed)
    events: list[Event] = []
    metadata: dict[str, dict] = {}
    truth: dict[str, dict] = {}
    for j in range(spec.n_projects):
        pid = f"p{j:04d}"
        if spec.structure == "crowded":
            # stratify both axes over decile bands so every grid cell is populated
            t_band, s_band = j % 10, (j // 10) % 10
            team = spec.min_actors + int(
                (spec.max_actors - spec.min_actors + 1) * (t_band + rng.random()) / 10.0
            )
            size = spec.min_size + int(
                (spec.max_size - spec.min_size + 1) * (s_band + rng.random()) / 10.0
            )
            team = min(team, spec.max_actors)
            size = min(size, spec.max_size)
        else:
            team = int(rng.integers(spec.min_actors, spec.max_actors + 1))
            size = int(rng.integers(spec.min_size, spec.max_size + 1))
        n_work = int(rng.integers(spec.min_work, spec.max_work + 1))
        n_work = max(n_work, team)
        if spec.structure == "crowded":
            n_discussion = max(0, round(spec.crowding_scale * team / size))
        else:
            n_discussion = int(rng.poisson(spec.discussion_rate * n_work))
        n_comments = int(rng.poisson(spec.comment_rate * n_work))
        actors = [f"u{j:04d}_{i}" for i in range(team)]

        ts = 0
        # early coordination block, authored round-robin
        for i in range(n_discussion):
            events.append(Event(pid, actors[i % team], ts, "discussion"))
            ts += 1
        ts = 10_000
        # work: first `team` events cover every actor, the rest round-robin
        for i in range(n_work):
            events.append(Event(pid, actors[i % team], ts, "work", size_delta=1))
            ts += _STEP
        for i in range(n_comments):
            events.append(Event(pid, actors[i % team], ts, "comment"))
            ts += 1
        ts += 1_000_000
        # engagement edits, after any plausible threshold
        for actor in actors:
            events.append(Event(pid, actor, ts, "discussion"))
            ts += 1
        metadata[pid] = {"final_size": size}
        truth[pid] = {
            "team": team,
            "size": size,
            "discussion": n_discussion,
            "work": n_work,
            "comments": n_comments,
        }
    ground_truth = {"structure": spec.structure, "seed": seed, "projects": truth}
    if spec.structure == "crowded":
        ground_truth["crowding_scale"] = spec.crowding_scale
    return SyntheticCorpus(events=events, metadata=metadata, ground_truth=ground_truth)


def _work_block(pid: str, actor: str, year: int, count: int, start: int) -> list[Event]:
    return [
        Event(pid, actor, _year_ts(year, start + i), "work", size_delta=1)
        for i in range(count)
    ]


def _cohort_article(
    pid: str,
    year: int,
    before: int,
    during: int,
    after: int,
) -> list[Event]:
    events = []
    events += _work_block(pid, f"{pid}_a", year - 1, before, 0)
    events += _work_block(pid, f"{pid}_a", year, during, 0)
    events += _work_block(pid, f"{pid}_a", year + 1, after, 0)
    events.append(Event(pid, f"{pid}_a", _year_ts(year + 2), "discussion"))
    return events


def _generate_cohort(spec: SyntheticSpec, seed: int) -> SyntheticCorpus:
    """Featured projects plus planted eligible controls and off-by-far noise."""
    rng = np.random.default_rng(seed)
    events: list[Event] = []
    metadata: dict[str, dict] = {}
    planted: dict[str, list[str]] = {}
    serial = 0
    for f in range(spec.n_featured):
        fid = f"f{f:04d}"
        year = int(rng.integers(spec.min_year, spec.max_year + 1))
        before = int(rng.integers(100, 400))
        during = int(rng.integers(5, 40))
        after = int(rng.integers(100, 400))
        events += _cohort_article(fid, year, before, during, after)
        metadata[fid] = {"featured_year": year, "final_size": before + during + after}
        planted[fid] = []
        for _c in range(spec.planted_controls):
            cid = f"n{serial:05d}"
            serial += 1
            # within tolerance, and strictly more prior work than the featured
            c_before = before + 1 + int(rng.integers(0, max(1, int(before * 0.03))))
            c_after = after + int(rng.integers(-int(after * 0.03), int(after * 0.03) + 1))
            events += _cohort_article(cid, year, c_before, during, c_after)
            metadata[cid] = {"final_size": c_before + during + c_after}
            planted[fid].append(cid)
        for _c in range(spec.noise_candidates):
            cid = f"n{serial:05d}"
            serial += 1
            events += _cohort_article(cid, year, before * 2 + 50, during, after * 2 + 50)
            metadata[cid] = {"final_size": 3 * (before + after)}
    ground_truth = {
        "structure": "cohort",
        "seed": seed,
        "planted_controls": planted,
    }
    return SyntheticCorpus(events=events, metadata=metadata, ground_truth=ground_truth)
