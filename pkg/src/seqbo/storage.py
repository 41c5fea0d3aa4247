"""Durable study records: one JSON document per study in a data directory.

Documents are replaced atomically (write-temp-then-rename) and carry a
monotonically increasing revision for optimistic concurrency. Mutations
on one study serialize through a per-id lock; reads always reflect the
last completed write.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConflictError, InvalidInputError, NotFoundError
from .study import Study, study_from_dict, study_to_dict

RECORD_SCHEMA_VERSION = 1


@dataclass
class StudyRecord:
    id: str
    owner: str
    created_at: str
    updated_at: str
    revision: int
    study: Study

    def summary(self) -> dict:
        doc = {
            "id": self.id,
            "owner": self.owner,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "revision": self.revision,
            "state": self.study.state,
            "direction": self.study.config.direction,
            "n_observations": len(self.study.history),
            "n_pending": len(self.study.pending),
        }
        doc["best"] = self.study.best("observed") if self.study.history else None
        return doc


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class StudyStore:
    """Filesystem-backed store with per-study mutation locks."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, study_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(study_id, threading.Lock())

    def _path(self, study_id: str) -> Path:
        if not study_id or "/" in study_id or study_id.startswith("."):
            raise InvalidInputError(f"invalid study id {study_id!r}")
        return self.data_dir / f"{study_id}.json"

    def create(self, study: Study, owner: str = "", study_id: str | None = None) -> StudyRecord:
        sid = study_id or uuid.uuid4().hex[:12]
        path = self._path(sid)
        if path.exists():
            raise ConflictError(f"study {sid!r} already exists")
        now = _now()
        record = StudyRecord(id=sid, owner=owner, created_at=now, updated_at=now,
                             revision=1, study=study)
        self._write(record)
        return record

    def get(self, study_id: str) -> StudyRecord:
        path = self._path(study_id)
        if not path.exists():
            raise NotFoundError(f"study {study_id!r} not found")
        doc = json.loads(path.read_text())
        return StudyRecord(
            id=doc["id"],
            owner=doc.get("owner", ""),
            created_at=doc["created_at"],
            updated_at=doc["updated_at"],
            revision=doc["revision"],
            study=study_from_dict(doc["study"]),
        )

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.data_dir.glob("*.json"))

    def list_records(self) -> list[StudyRecord]:
        return [self.get(sid) for sid in self.list_ids()]

    def save(self, record: StudyRecord) -> StudyRecord:
        """Persist under the record's lock, bumping revision and updated_at."""
        with self._lock(record.id):
            record.revision += 1
            record.updated_at = _now()
            self._write(record)
        return record

    def mutate(self, study_id: str, fn, expected_revision: int | None = None):
        """Load-modify-save with optimistic concurrency.

        `fn(study)` mutates the study and its return value is passed back.
        The write happens before returning, so a response built from the
        result is always backed by the persisted state.
        """
        with self._lock(study_id):
            record = self.get(study_id)
            if expected_revision is not None and record.revision != expected_revision:
                raise ConflictError(
                    f"revision mismatch: expected {expected_revision}, "
                    f"study is at {record.revision}"
                )
            result = fn(record.study)
            record.revision += 1
            record.updated_at = _now()
            self._write(record)
            return record, result

    def _write(self, record: StudyRecord) -> None:
        doc = {
            "record_version": RECORD_SCHEMA_VERSION,
            "id": record.id,
            "owner": record.owner,
            "created_at": record.created_at,
            "updated_at": record.updated_at,
            "revision": record.revision,
            "study": study_to_dict(record.study),
        }
        path = self._path(record.id)
        fd, tmp = tempfile.mkstemp(dir=self.data_dir, prefix=f".{record.id}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
