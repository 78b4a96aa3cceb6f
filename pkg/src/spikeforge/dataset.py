"""Manifest handling and deterministic subject-wise splitting.

A manifest row describes one sample: an activity clip half from one
subject's session, with optional per-modality file paths.  Splits are
performed on subjects, never on samples, so no person contributes data to
more than one of train/val/test.  The shuffle is a numpy PCG64 generator
seeded explicitly, and the algorithm name is recorded next to the seed so
splits reproduce across machines and implementations.
"""

import csv
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# canonical snake_case labels for the 18 recorded activities
ACTIVITIES = (
    "running_in_place",
    "walking",
    "jogging",
    "clapping",
    "right_hand_waving",
    "left_hand_waving",
    "drinking",
    "playing_drums",
    "forearm_roll",
    "playing_guitar",
    "jumping",
    "squats",
    "arms_circling",
    "side_butterfly",
    "front_butterfly",
    "standing_abs",
    "boxing",
    "jumping_jacks",
)

SPLIT_NAMES = ("train", "val", "test")
SPLIT_PRNG = "pcg64"

_REQUIRED_COLUMNS = ("sample_id", "subject_id", "session", "activity", "half")
_PATH_COLUMNS = ("spike_path", "rgb_path", "thermal_path")


@dataclass
class SampleRecord:
    sample_id: str
    subject_id: str
    session: int
    activity: str
    half: int
    spike_path: str | None = None
    rgb_path: str | None = None
    thermal_path: str | None = None

    def __post_init__(self):
        if not self.sample_id:
            raise ValueError("sample_id must be nonempty")
        if not self.subject_id:
            raise ValueError("subject_id must be nonempty")
        if self.session not in (1, 2):
            raise ValueError(f"session must be 1 or 2, got {self.session}")
        if self.activity not in ACTIVITIES:
            raise ValueError(f"unknown activity {self.activity!r}")
        if self.half not in (1, 2):
            raise ValueError(f"half must be 1 or 2, got {self.half}")


def _record_from_mapping(row: dict, where: str) -> SampleRecord:
    try:
        return SampleRecord(
            sample_id=str(row["sample_id"]).strip(),
            subject_id=str(row["subject_id"]).strip(),
            session=int(row["session"]),
            activity=str(row["activity"]).strip(),
            half=int(row["half"]),
            **{col: (str(row[col]).strip() or None) if row.get(col) else None
               for col in _PATH_COLUMNS},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{where}: {exc}") from None


def load_manifest(path) -> list[SampleRecord]:
    """Load sample records from a CSV manifest (or a JSON-lines mirror)."""
    path = Path(path)
    if path.suffix.lower() in (".jsonl", ".ndjson"):
        records = []
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"line {lineno}: invalid JSON: {exc}") from None
                records.append(_record_from_mapping(row, f"line {lineno}"))
        return records

    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [col for col in _REQUIRED_COLUMNS if col not in header]
        if missing:
            raise ValueError(f"manifest header is missing columns {missing}")
        return [
            _record_from_mapping(row, f"line {reader.line_num}") for row in reader
        ]


def save_manifest(records: list[SampleRecord], path) -> None:
    columns = list(_REQUIRED_COLUMNS) + list(_PATH_COLUMNS)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for rec in records:
            row = [getattr(rec, col) for col in _REQUIRED_COLUMNS]
            row += [getattr(rec, col) or "" for col in _PATH_COLUMNS]
            writer.writerow(row)


@dataclass
class SplitAssignment:
    """Subject -> split mapping plus everything needed to reproduce it."""

    by_subject: dict
    seed: int
    algorithm: str = SPLIT_PRNG

    def subjects(self, split: str) -> list[str]:
        return sorted(s for s, name in self.by_subject.items() if name == split)

    def counts(self) -> dict:
        counter = Counter(self.by_subject.values())
        return {name: counter.get(name, 0) for name in SPLIT_NAMES}

    def split_of(self, subject_id: str) -> str:
        return self.by_subject[subject_id]


def split_subjects(subject_ids, seed: int) -> SplitAssignment:
    """Deterministic 80/10/10 subject-wise split.

    Sorted ids are shuffled by PCG64(seed); the first max(1, round(N/10))
    subjects go to test, the next as many to val, the rest to train
    (round = half-up).  The same seed always yields the same assignment.
    """
    ids = [str(s) for s in subject_ids]
    if len(set(ids)) != len(ids):
        dupes = sorted(s for s, n in Counter(ids).items() if n > 1)
        raise ValueError(f"duplicate subject ids: {dupes}")
    n = len(ids)
    if n < 3:
        raise ValueError(f"need at least 3 subjects to split, got {n}")
    n_test = max(1, (n + 5) // 10)
    n_val = max(1, (n + 5) // 10)
    rng = np.random.default_rng(int(seed))
    shuffled = [sorted(ids)[i] for i in rng.permutation(n)]
    by_subject = {}
    for i, subject in enumerate(shuffled):
        if i < n_test:
            by_subject[subject] = "test"
        elif i < n_test + n_val:
            by_subject[subject] = "val"
        else:
            by_subject[subject] = "train"
    return SplitAssignment(by_subject=by_subject, seed=int(seed))


def write_split_csv(assignment: SplitAssignment, path) -> None:
    """CSV of (subject_id, split) with seed and generator in comment lines."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# seed={assignment.seed}\n")
        handle.write(f"# prng={assignment.algorithm}\n")
        writer = csv.writer(handle)
        writer.writerow(["subject_id", "split"])
        for subject in sorted(assignment.by_subject):
            writer.writerow([subject, assignment.by_subject[subject]])


@dataclass
class DatasetStats:
    total: int
    num_subjects: int
    per_activity: dict
    per_subject: dict
    per_session: dict
    modal_activity_count: int
    imbalanced_activities: list

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "num_subjects": self.num_subjects,
            "per_activity": self.per_activity,
            "per_subject": self.per_subject,
            "per_session": self.per_session,
            "modal_activity_count": self.modal_activity_count,
            "imbalanced_activities": self.imbalanced_activities,
        }


def dataset_stats(records) -> DatasetStats:
    """Counts per activity/subject/session; flags activities off the modal count."""
    per_activity = Counter(r.activity for r in records)
    per_subject = Counter(r.subject_id for r in records)
    per_session = Counter(r.session for r in records)
    if per_activity:
        modal = Counter(per_activity.values()).most_common(1)[0][0]
        imbalanced = sorted(a for a, n in per_activity.items() if n != modal)
    else:
        modal = 0
        imbalanced = []
    return DatasetStats(
        total=len(records),
        num_subjects=len(per_subject),
        per_activity={a: per_activity.get(a, 0) for a in ACTIVITIES if a in per_activity},
        per_subject=dict(sorted(per_subject.items())),
        per_session={str(k): v for k, v in sorted(per_session.items())},
        modal_activity_count=modal,
        imbalanced_activities=imbalanced,
    )
