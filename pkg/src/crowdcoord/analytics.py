"""Per-project metrics over collaboration logs.

Covers the contributor core (the smallest set of actors accounting for an x
fraction of the work), the share of coordination traffic attributable to
that core, crowdedness profiles taken at a fixed early cut of the project's
history, and coordination-per-work ratios.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import IneligibleProjectError

CHANNELS = ("work", "discussion", "comment")
COORDINATION_CHANNELS = ("discussion", "comment")


@dataclass(frozen=True)
class Event:
    project_id: str
    actor_id: str
    timestamp: int
    channel: str
    size_delta: Optional[int] = None

    def __post_init__(self) -> None:
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")


@dataclass(frozen=True)
class ProjectLog:
    project_id: str
    events: tuple[Event, ...]
    final_size: Optional[int] = None

    @classmethod
    def from_events(
        cls,
        project_id: str,
        events: Iterable[Event],
        final_size: Optional[int] = None,
    ) -> "ProjectLog":
        # stable sort keeps input order on timestamp ties
        ordered = tuple(sorted(events, key=lambda e: e.timestamp))
        return cls(project_id=project_id, events=ordered, final_size=final_size)

    def channel_events(self, channel: str) -> list[Event]:
        return [e for e in self.events if e.channel == channel]

    def work_counts(self) -> dict[str, int]:
        return dict(Counter(e.actor_id for e in self.events if e.channel == "work"))


def x_core(work_counts: Mapping[str, int], x: float) -> set[str]:
    """Smallest actor set accounting for an x fraction of the work.

    Actors are ordered by count descending, ties by id ascending; the
    shortest prefix whose cumulative count reaches x * total is returned,
    which makes the result deterministic.
    """
    if not work_counts:
        raise ValueError("work_counts is empty")
    if any(c <= 0 for c in work_counts.values()):
        raise ValueError("work counts must be positive")
    if not 0.0 < x <= 1.0:
        raise ValueError(f"x must be in (0, 1], got {x}")
    order = sorted(work_counts, key=lambda a: (-work_counts[a], a))
    target = x * sum(work_counts.values())
    core: set[str] = set()
    cum = 0
    for actor in order:
        core.add(actor)
        cum += work_counts[actor]
        if cum >= target:
            break
    return core


@dataclass(frozen=True)
class CoreCurve:
    xs: tuple[float, ...]
    core_fraction: tuple[float, ...]
    d_share: tuple[Optional[float], ...]  # None when the project has no discussion
    c_share: tuple[Optional[float], ...]  # None when the project has no comments


def core_curve(project: ProjectLog, xs: Sequence[float]) -> CoreCurve:
    """Core size fraction plus discussion/comment shares of the core, per x.

    Shares are taken over channel events authored by work participants, so
    that both shares reach 1 at x = 1 by construction.
    """
    xs = tuple(float(x) for x in xs)
    if list(xs) != sorted(set(xs)):
        raise ValueError("xs must be strictly ascending")
    counts = project.work_counts()
    if not counts:
        raise ValueError(f"project {project.project_id} has no work events")
    participants = set(counts)
    discussion = [e for e in project.channel_events("discussion") if e.actor_id in participants]
    comments = [e for e in project.channel_events("comment") if e.actor_id in participants]

    fractions, d_shares, c_shares = [], [], []
    for x in xs:
        core = x_core(counts, x)
        fractions.append(len(core) / len(participants))
        d_shares.append(
            sum(e.actor_id in core for e in discussion) / len(discussion) if discussion else None
        )
        c_shares.append(
            sum(e.actor_id in core for e in comments) / len(comments) if comments else None
        )
    return CoreCurve(
        xs=xs,
        core_fraction=tuple(fractions),
        d_share=tuple(d_shares),
        c_share=tuple(c_shares),
    )


def core_coordination_volume(project: ProjectLog, x: float, channel: str) -> int:
    """Number of channel events authored by members of the project's x-core."""
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}, got {channel!r}")
    core = x_core(project.work_counts(), x)
    return sum(e.actor_id in core for e in project.channel_events(channel))


@dataclass(frozen=True)
class CrowdednessProfile:
    engaged_users: frozenset[str]
    threshold_time: int
    early_team: frozenset[str]
    early_coordination: int
    output_size: Optional[int]


def crowdedness_profile(
    project: ProjectLog,
    k: int = 100,
    coordination_channel: str = "discussion",
    engaged_only: bool = False,
) -> CrowdednessProfile:
    """Measurements at the time of the k-th work event by engaged users.

    Engaged users have at least one work event and one event on the
    coordination channel.  The threshold time is when their k-th work event
    lands; the early team is whoever contributed one of those first k;
    early coordination counts coordination events strictly before the
    threshold (by anyone, unless engaged_only).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if coordination_channel not in COORDINATION_CHANNELS:
        raise ValueError(
            f"coordination_channel must be one of {COORDINATION_CHANNELS}, "
            f"got {coordination_channel!r}"
        )
    workers = {e.actor_id for e in project.events if e.channel == "work"}
    coordinators = {e.actor_id for e in project.events if e.channel == coordination_channel}
    engaged = workers & coordinators
    if not engaged:
        raise IneligibleProjectError(f"project {project.project_id} has no engaged users")
    engaged_work = [
        e for e in project.events if e.channel == "work" and e.actor_id in engaged
    ]
    if len(engaged_work) < k:
        raise IneligibleProjectError(
            f"project {project.project_id} has {len(engaged_work)} work events "
            f"by engaged users, need {k}"
        )
    threshold = engaged_work[k - 1].timestamp
    early_team = frozenset(e.actor_id for e in engaged_work[:k])
    coordination = [
        e
        for e in project.events
        if e.channel == coordination_channel
        and (not engaged_only or e.actor_id in engaged)
    ]
    early_coordination = sum(e.timestamp < threshold for e in coordination)
    return CrowdednessProfile(
        engaged_users=frozenset(engaged),
        threshold_time=threshold,
        early_team=early_team,
        early_coordination=early_coordination,
        output_size=project.final_size,
    )


def coordination_per_work(project: ProjectLog) -> float:
    """Comment events divided by work events."""
    n_work = len(project.channel_events("work"))
    if n_work == 0:
        raise ValueError(f"project {project.project_id} has no work events")
    return len(project.channel_events("comment")) / n_work
