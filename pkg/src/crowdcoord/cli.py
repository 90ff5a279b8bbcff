"""Batch command-line interface: ingestion, synthetic corpora, and CSV emission.

Events travel as line-delimited JSON with a fixed key order; matrices and
curves are emitted as CSV with '#'-prefixed metadata headers.  Every output
is accompanied by a run manifest so results can be reproduced byte-for-byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

from . import __version__
from .analytics import (
    CHANNELS,
    Event,
    ProjectLog,
    core_curve,
    crowdedness_profile,
)
from .cohort import build_cohorts, cohort_to_csv
from .errors import (
    BudgetExceededError,
    DataError,
    IneligibleProjectError,
    MalformedEventError,
)
from .model import RNG_DESCRIPTION, ModelParams, exact_expectation, monte_carlo
from .solver import SearchConfig, beta_heatmap, grid_to_csv, optimal_beta
from .stats import (
    binned_grid_to_csv,
    decile_heatmap,
    mann_whitney_u,
    median_split_quadrants,
    quadrants_to_csv,
)
from .synth import STRUCTURES, SyntheticSpec, generate_synthetic

_EVENT_KEYS = ("project_id", "actor_id", "timestamp", "channel", "size_delta")
_META_COLUMNS = ("project_id", "final_size", "featured_year", "watchers")


class CliUsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; we map usage errors to 1
        raise CliUsageError(message)


# ---------------------------------------------------------------------------
# ingestion and emission

def parse_event_line(line: str, line_no: int) -> Event:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedEventError(f"line {line_no}: invalid JSON ({exc})") from exc
    if not isinstance(record, dict):
        raise MalformedEventError(f"line {line_no}: expected a JSON object")
    missing = [k for k in ("project_id", "actor_id", "timestamp", "channel") if k not in record]
    if missing:
        raise MalformedEventError(f"line {line_no}: missing fields {missing}")
    try:
        return Event(
            project_id=str(record["project_id"]),
            actor_id=str(record["actor_id"]),
            timestamp=int(record["timestamp"]),
            channel=record["channel"],
            size_delta=int(record["size_delta"]) if record.get("size_delta") is not None else None,
        )
    except (TypeError, ValueError) as exc:
        raise MalformedEventError(f"line {line_no}: {exc}") from exc


def event_to_json(event: Event) -> str:
    record = {
        "project_id": event.project_id,
        "actor_id": event.actor_id,
        "timestamp": event.timestamp,
        "channel": event.channel,
    }
    if event.size_delta is not None:
        record["size_delta"] = event.size_delta
    return json.dumps(record, separators=(",", ":"))


def read_metadata(path: str) -> dict[str, dict]:
    metadata: dict[str, dict] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pid = row.get("project_id")
            if not pid:
                raise DataError(f"{path}: metadata row without project_id")
            if pid in metadata:
                raise DataError(f"{path}: duplicate metadata row for {pid}")
            entry = {}
            for key in ("final_size", "featured_year", "watchers"):
                value = row.get(key)
                if value not in (None, ""):
                    try:
                        entry[key] = int(value)
                    except ValueError as exc:
                        raise DataError(f"{path}: bad {key} for {pid}: {value!r}") from exc
            metadata[pid] = entry
    return metadata


def ingest(
    events_path: str, metadata_path: str | None = None
) -> tuple[dict[str, ProjectLog], dict[str, dict]]:
    """Group events by project (time-sorted) and join optional metadata."""
    by_project: dict[str, list[Event]] = {}
    with open(events_path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            event = parse_event_line(line, line_no)
            by_project.setdefault(event.project_id, []).append(event)
    metadata = read_metadata(metadata_path) if metadata_path else {}
    unknown = sorted(set(metadata) - set(by_project))
    if unknown:
        print(f"warning: metadata for unknown projects: {', '.join(unknown)}", file=sys.stderr)
    corpus = {
        pid: ProjectLog.from_events(pid, events, metadata.get(pid, {}).get("final_size"))
        for pid, events in sorted(by_project.items())
    }
    if not corpus:
        print(f"warning: no events in {events_path}", file=sys.stderr)
    return corpus, metadata


def write_events(path: Path, events) -> None:
    with open(path, "w") as fh:
        for event in events:
            fh.write(event_to_json(event) + "\n")


def write_metadata(path: Path, metadata: dict[str, dict]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_META_COLUMNS)
    for pid in sorted(metadata):
        entry = metadata[pid]
        writer.writerow(
            [pid] + [entry.get(col, "") for col in _META_COLUMNS[1:]]
        )
    path.write_text(buf.getvalue())


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_path: Path, subcommand: str, params: dict, inputs: list[str]) -> None:
    manifest = {
        "subcommand": subcommand,
        "params": {k: v for k, v in sorted(params.items())},
        "seed": params.get("seed"),
        "inputs": {p: _sha256(p) for p in inputs},
        "rng": RNG_DESCRIPTION,
        "version": __version__,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _params(args, skip=("func", "out")) -> dict:
    return {k: v for k, v in vars(args).items() if k not in skip}


def _write_output(args, text: str, inputs: list[str] = ()) -> None:
    out = Path(args.out)
    out.write_text(text)
    write_manifest(out, args.func.__name__.removeprefix("cmd_"), _params(args), list(inputs))


# ---------------------------------------------------------------------------
# model / solver subcommands

def cmd_simulate(args) -> None:
    params = ModelParams(args.n, args.e, args.alpha, args.beta)
    result = monte_carlo(params, args.runs, args.seed)
    text = (
        "mean_finished,std_error,runs,seed\n"
        f"{result.mean_finished:.6f},{result.std_error:.6f},{result.runs},{result.seed}\n"
    )
    _write_output(args, text)


def cmd_dp(args) -> None:
    params = ModelParams(args.n, args.e, args.alpha, args.beta)
    value = exact_expectation(params)
    _write_output(args, f"expected_finished\n{value:.6f}\n")


_OBJECTIVE_ALIASES = {"dp": "exact_dp", "cf": "closed_form", "mc": "monte_carlo"}


def _objective(name: str) -> str:
    return _OBJECTIVE_ALIASES.get(name, name)


def cmd_optimize(args) -> None:
    config = SearchConfig(grid_step=args.grid_step, runs=args.runs, seed=args.seed)
    result = optimal_beta(args.n, args.e, args.alpha, _objective(args.objective), config)
    text = (
        "beta_star,value,objective,grid_step,runs\n"
        f"{result.beta_star:.4f},{result.value:.6f},{result.objective},"
        f"{result.grid_step},{result.runs if result.runs is not None else 'NA'}\n"
    )
    _write_output(args, text)


def _int_list(text: str) -> list[int]:
    """Comma list ('2,10,50') or range syntax ('1:100' or '5:50:5')."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            start, stop = parts
            step = 1
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise ValueError(f"bad range syntax {text!r}")
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",")]


def cmd_heatmap(args) -> None:
    config = SearchConfig(grid_step=args.grid_step, runs=args.runs, seed=args.seed)
    grid = beta_heatmap(
        _int_list(args.n), _int_list(args.e), args.alpha, _objective(args.objective), config
    )
    _write_output(args, grid_to_csv(grid))


def cmd_mwu(args) -> None:
    sample_a = [float(v) for v in args.a.split(",")]
    sample_b = [float(v) for v in args.b.split(",")]
    result = mann_whitney_u(sample_a, sample_b)
    text = (
        "u,p,band,method\n"
        f"{result.u_statistic:.6f},{result.p_value:.6f},{result.band},{result.method}\n"
    )
    _write_output(args, text)


# ---------------------------------------------------------------------------
# corpus subcommands

def cmd_xcore(args) -> None:
    corpus, _ = ingest(args.events, args.metadata)
    xs = sorted(args.x) if args.x else [i / 10 for i in range(1, 11)]
    lines = ["project_id,x,core_size,core_fraction,d_share,c_share"]
    for pid, project in corpus.items():
        try:
            curve = core_curve(project, xs)
        except ValueError as exc:
            print(f"warning: skipping {pid}: {exc}", file=sys.stderr)
            continue
        participants = len(project.work_counts())
        for x, frac, d, c in zip(curve.xs, curve.core_fraction, curve.d_share, curve.c_share):
            d_txt = f"{d:.6f}" if d is not None else "NA"
            c_txt = f"{c:.6f}" if c is not None else "NA"
            lines.append(
                f"{pid},{x:.4f},{round(frac * participants)},{frac:.6f},{d_txt},{c_txt}"
            )
    _write_output(args, "\n".join(lines) + "\n", inputs=_input_paths(args))


def _input_paths(args) -> list[str]:
    paths = [args.events]
    if getattr(args, "metadata", None):
        paths.append(args.metadata)
    return paths


def _profiles(args):
    corpus, _ = ingest(args.events, args.metadata)
    profiles = {}
    for pid, project in corpus.items():
        try:
            profiles[pid] = crowdedness_profile(project, args.k, args.channel)
        except IneligibleProjectError as exc:
            print(f"warning: skipping {pid}: {exc}", file=sys.stderr)
    return profiles


def cmd_crowd(args) -> None:
    profiles = _profiles(args)
    lines = ["project_id,n_engaged,team_size,threshold_time,early_coordination,final_size"]
    for pid, profile in profiles.items():
        size = profile.output_size if profile.output_size is not None else "NA"
        lines.append(
            f"{pid},{len(profile.engaged_users)},{len(profile.early_team)},"
            f"{profile.threshold_time},{profile.early_coordination},{size}"
        )
    _write_output(args, "\n".join(lines) + "\n", inputs=_input_paths(args))


def _records(args):
    records = []
    for pid, profile in _profiles(args).items():
        if profile.output_size is None:
            print(f"warning: skipping {pid}: no final_size metadata", file=sys.stderr)
            continue
        records.append(
            (float(profile.output_size), float(len(profile.early_team)),
             float(profile.early_coordination))
        )
    return records


def cmd_quadrants(args) -> None:
    summary = median_split_quadrants(_records(args))
    _write_output(args, quadrants_to_csv(summary), inputs=_input_paths(args))


def cmd_bins(args) -> None:
    grid = decile_heatmap(_records(args), agg=args.agg)
    _write_output(args, binned_grid_to_csv(grid), inputs=_input_paths(args))


def cmd_cohort(args) -> None:
    corpus, metadata = ingest(args.events, args.metadata)
    featured = {
        pid: entry["featured_year"]
        for pid, entry in metadata.items()
        if "featured_year" in entry and pid in corpus
    }
    if not featured:
        raise DataError("no projects with featured_year in metadata")
    cohort = build_cohorts(
        corpus,
        featured,
        k=args.k,
        tolerance=args.tolerance,
        require_fewer_prior=not args.allow_fewer_prior,
        seed=args.seed,
    )
    _write_output(args, cohort_to_csv(cohort), inputs=_input_paths(args))


def cmd_synth(args) -> None:
    spec = SyntheticSpec(
        n_projects=args.projects,
        structure=args.structure,
        n_featured=args.featured,
        planted_controls=args.planted_controls,
        noise_candidates=args.noise_candidates,
    )
    corpus = generate_synthetic(spec, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_events(out_dir / "events.jsonl", corpus.events)
    write_metadata(out_dir / "metadata.csv", corpus.metadata)
    (out_dir / "ground_truth.json").write_text(
        json.dumps(corpus.ground_truth, sort_keys=True, indent=2) + "\n"
    )
    write_manifest(out_dir / "corpus", "synth", _params(args), [])


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="crowdcoord", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", required=True, help="output path")
        return p

    p = add("simulate", cmd_simulate, "Monte Carlo estimate of finished parts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--e", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)

    p = add("dp", cmd_dp, "exact expected finished parts by dynamic programming")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--e", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)

    p = add("optimize", cmd_optimize, "search the optimal coordination probability")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--e", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--objective", default="closed_form",
                   choices=["closed_form", "exact_dp", "monte_carlo", "dp", "cf", "mc"])
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-step", type=float, default=0.01)

    p = add("heatmap", cmd_heatmap, "optimal beta over an (N, E) grid")
    p.add_argument("--n", required=True, help="comma list or start:stop[:step]")
    p.add_argument("--e", required=True, help="comma list or start:stop[:step]")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--objective", default="closed_form",
                   choices=["closed_form", "exact_dp", "monte_carlo", "dp", "cf", "mc"])
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-step", type=float, default=0.01)

    p = add("mwu", cmd_mwu, "Mann-Whitney U test on two comma-separated samples")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = add("xcore", cmd_xcore, "x-core curves per project")
    p.add_argument("--events", required=True)
    p.add_argument("--metadata", default=None)
    p.add_argument("--x", type=float, action="append", default=None)

    p = add("crowd", cmd_crowd, "crowdedness profiles per project")
    p.add_argument("--events", required=True)
    p.add_argument("--metadata", default=None)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--channel", default="discussion", choices=["discussion", "comment"])

    p = add("quadrants", cmd_quadrants, "median-split quadrant summary")
    p.add_argument("--events", required=True)
    p.add_argument("--metadata", default=None)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--channel", default="discussion", choices=["discussion", "comment"])

    p = add("bins", cmd_bins, "decile-binned coordination heatmap")
    p.add_argument("--events", required=True)
    p.add_argument("--metadata", default=None)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--channel", default="discussion", choices=["discussion", "comment"])
    p.add_argument("--agg", default="mean", choices=["mean", "median"])

    p = add("cohort", cmd_cohort, "matched featured/control cohorts")
    p.add_argument("--events", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--allow-fewer-prior", action="store_true",
                   help="drop the strictly-more-prior-work requirement on controls")
    p.add_argument("--seed", type=int, default=0)

    p = add("synth", cmd_synth, "generate a synthetic corpus (out is a directory)")
    p.add_argument("--projects", type=int, default=50)
    p.add_argument("--structure", default="none", choices=list(STRUCTURES))
    p.add_argument("--featured", type=int, default=0)
    p.add_argument("--planted-controls", type=int, default=0)
    p.add_argument("--noise-candidates", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except BudgetExceededError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
