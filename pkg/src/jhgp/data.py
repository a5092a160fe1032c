"""Subjects, time grids and the discrete event-grid construction.

Input CSVs are comma-delimited with a header row, UTF-8:

* longitudinal file: ``subject_id,tick,y``
* events file: ``subject_id,tick,status`` with status in {0, 1}

Ticks are integers (one observation period each); unsorted rows are
sorted, duplicates and non-binary statuses are rejected with the
offending physical line number.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, DomainError


@dataclass(frozen=True)
class TimeGrid:
    """Global discrete grid; `origin` is the real time of tick 0."""

    ticks: tuple
    origin: float = 0.0

    def __post_init__(self):
        t = tuple(int(v) for v in self.ticks)
        if any(b <= a for a, b in zip(t, t[1:])):
            raise DomainError("grid ticks must be strictly increasing")
        object.__setattr__(self, "ticks", t)

    @property
    def n(self) -> int:
        return len(self.ticks)

    def index_of(self, ticks) -> np.ndarray:
        """Positions of the given ticks within the grid."""
        lookup = {t: i for i, t in enumerate(self.ticks)}
        try:
            return np.array([lookup[int(t)] for t in np.atleast_1d(ticks)], dtype=int)
        except KeyError as exc:
            raise DomainError(f"tick {exc.args[0]} is not on the global grid") from None


@dataclass(frozen=True)
class SubjectSeries:
    """One subject's longitudinal values and recorded event statuses."""

    subject_id: str
    obs_ticks: np.ndarray
    y: np.ndarray
    event_ticks: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.obs_ticks, dtype=int)
        y = np.asarray(self.y, dtype=float)
        ev = np.asarray(self.event_ticks, dtype=int)
        r = np.asarray(self.r, dtype=int)
        if obs.shape != y.shape:
            raise DomainError(f"{self.subject_id}: y and obs_ticks length mismatch")
        if ev.shape != r.shape:
            raise DomainError(f"{self.subject_id}: r and event_ticks length mismatch")
        if obs.size and np.any(np.diff(obs) <= 0):
            raise DomainError(f"{self.subject_id}: obs_ticks not strictly increasing")
        if ev.size and np.any(np.diff(ev) <= 0):
            raise DomainError(f"{self.subject_id}: event_ticks not strictly increasing")
        if r.size and not np.isin(r, (0, 1)).all():
            raise DomainError(f"{self.subject_id}: event statuses must be 0 or 1")
        for name, arr in (("obs_ticks", obs), ("y", y), ("event_ticks", ev), ("r", r)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def all_ticks(self) -> np.ndarray:
        return np.union1d(self.obs_ticks, self.event_ticks)


@dataclass(frozen=True)
class EventGrid:
    """Dense gap-filled binary event sequence over a subject's window.

    ``episodes`` lists (start, end) index pairs into ``r``; an episode runs
    up to and including either an event slot or the terminal censoring
    slot, and all interior slots are zero.
    """

    subject_id: str
    ticks: np.ndarray
    r: np.ndarray
    episodes: tuple = field(default=())

    def __post_init__(self):
        ticks = np.asarray(self.ticks, dtype=int)
        r = np.asarray(self.r, dtype=int)
        if ticks.shape != r.shape or ticks.size == 0:
            raise DomainError("event grid needs aligned nonempty ticks and r")
        if np.any(np.diff(ticks) != 1):
            raise DomainError("event grid ticks must be consecutive")
        if not np.isin(r, (0, 1)).all():
            raise DomainError("event grid entries must be 0 or 1")
        episodes = self.episodes or _split_episodes(r)
        for lo, hi in episodes:
            if np.any(r[lo:hi] != 0):
                raise DomainError("interior episode slots must be zero")
        ticks.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "ticks", ticks)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "episodes", tuple(episodes))

    @property
    def n(self) -> int:
        return self.ticks.size


def _split_episodes(r: np.ndarray):
    episodes = []
    lo = 0
    for k, rk in enumerate(r):
        if rk == 1:
            episodes.append((lo, k))
            lo = k + 1
    if lo < r.size:
        episodes.append((lo, r.size - 1))
    return episodes


def build_event_grid(s: SubjectSeries) -> EventGrid:
    """Gap-fill a subject's recorded statuses into the dense slot sequence.

    The window runs from the subject's first tick through the last
    recorded status tick; slots without a record are filled with 0.
    """
    if s.event_ticks.size == 0:
        raise DomainError(f"{s.subject_id}: no event records to grid")
    start = int(s.obs_ticks[0]) if s.obs_ticks.size else int(s.event_ticks[0])
    if int(s.event_ticks[0]) < start:
        raise DomainError(
            f"{s.subject_id}: event at tick {int(s.event_ticks[0])} precedes "
            f"first observation at tick {start}"
        )
    end = int(s.event_ticks[-1])
    ticks = np.arange(start, end + 1)
    r = np.zeros(ticks.size, dtype=int)
    r[s.event_ticks - start] = s.r
    return EventGrid(s.subject_id, ticks, r)


def build_global_grid(subjects, origin: float = 0.0) -> TimeGrid:
    """Contiguous grid spanning every tick seen in the data."""
    ticks = [int(t) for s in subjects for t in np.concatenate([s.obs_ticks, s.event_ticks])]
    if not ticks:
        raise DataFormatError("no ticks in data; cannot build a time grid")
    return TimeGrid(tuple(range(min(ticks), max(ticks) + 1)), origin)


def _read_rows(path, value_field: str):
    expected = ["subject_id", "tick", value_field]
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: missing header row") from None
        if [h.strip() for h in header] != expected:
            raise DataFormatError(
                f"{path}: header must be {','.join(expected)}, got {','.join(header)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataFormatError(f"{path} line {lineno}: expected 3 fields")
            sid = row[0].strip()
            try:
                tick = int(row[1])
                value = float(row[2])
            except ValueError:
                raise DataFormatError(
                    f"{path} line {lineno}: cannot parse tick/{value_field}"
                ) from None
            if value_field == "status" and value not in (0.0, 1.0):
                raise DataFormatError(
                    f"{path} line {lineno}: status must be 0 or 1, got {row[2]}"
                )
            key = (sid, tick)
            if key in rows:
                raise DataFormatError(
                    f"{path} line {lineno}: duplicate (subject_id, tick) pair {key}"
                )
            rows[key] = value
    return rows


def ingest_csv(longitudinal_file, events_file=None):
    """Load the two CSVs into one SubjectSeries per subject.

    An absent or header-only events file yields longitudinal-only series.
    Returns subjects sorted by id.
    """
    y_rows = _read_rows(longitudinal_file, "y")
    r_rows = _read_rows(events_file, "status") if events_file is not None else {}
    sids = sorted({sid for sid, _ in y_rows} | {sid for sid, _ in r_rows})
    if not sids:
        raise DataFormatError(f"{longitudinal_file}: no data rows")
    subjects = []
    for sid in sids:
        obs = sorted(t for s, t in y_rows if s == sid)
        ev = sorted(t for s, t in r_rows if s == sid)
        subjects.append(
            SubjectSeries(
                subject_id=sid,
                obs_ticks=np.array(obs, dtype=int),
                y=np.array([y_rows[(sid, t)] for t in obs]),
                event_ticks=np.array(ev, dtype=int),
                r=np.array([int(r_rows[(sid, t)]) for t in ev], dtype=int),
            )
        )
    return subjects


def write_subjects(subjects, longitudinal_file, events_file) -> None:
    """Serialize subjects back to the two-CSV on-disk form."""
    with open(longitudinal_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "tick", "y"])
        for s in subjects:
            for t, y in zip(s.obs_ticks, s.y):
                w.writerow([s.subject_id, int(t), repr(float(y))])
    with open(events_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "tick", "status"])
        for s in subjects:
            for t, r in zip(s.event_ticks, s.r):
                w.writerow([s.subject_id, int(t), int(r)])
