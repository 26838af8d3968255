"""In-process analysis jobs with polling-friendly, monotone status."""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable

from .errors import TenkScoreError


class JobStatus(Enum):
    QUEUED = "Queued"
    FETCHING = "Fetching"
    PARSING = "Parsing"
    GRADING = "Grading"
    COMPARING = "Comparing"
    DONE = "Done"
    FAILED = "Failed"


_ORDER = [
    JobStatus.QUEUED,
    JobStatus.FETCHING,
    JobStatus.PARSING,
    JobStatus.GRADING,
    JobStatus.COMPARING,
    JobStatus.DONE,
]
_RANK = {status: index for index, status in enumerate(_ORDER)}


class DuplicateJob(TenkScoreError):
    """An identical request fingerprint is already in flight."""

    def __init__(self, job_id: str) -> None:
        super().__init__(f"job {job_id} already running for this request")
        self.job_id = job_id


@dataclass
class AnalysisJob:
    """Observable state of one asynchronous analysis."""

    id: str
    fingerprint: str
    status: JobStatus = JobStatus.QUEUED
    progress: float = 0.0
    detail: str = ""
    result_locator: str | None = None
    error: str | None = None
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def advance(self, status: JobStatus, progress: float, detail: str = "") -> None:
        """Move forward only: stages never regress and progress never drops."""
        with self._lock:
            if self.status in (JobStatus.DONE, JobStatus.FAILED):
                return
            if status is JobStatus.FAILED:
                self.status = JobStatus.FAILED
            elif _RANK[status] >= _RANK[self.status]:
                self.status = status
            self.progress = min(1.0, max(self.progress, progress))
            if detail:
                self.detail = detail

    def finish(self, result_locator: str) -> None:
        with self._lock:
            if self.status is JobStatus.FAILED:
                return
            self.status = JobStatus.DONE
            self.progress = 1.0
            self.result_locator = result_locator

    def fail(self, error: str) -> None:
        with self._lock:
            if self.status is JobStatus.DONE:
                return
            self.status = JobStatus.FAILED
            self.error = error

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "id": self.id,
                "status": self.status.value,
                "progress": round(self.progress, 4),
                "detail": self.detail,
                "result": self.result_locator,
                "error": self.error,
                "created_at": self.created_at,
            }


class JobManager:
    """Bounded worker pool; one in-flight job per request fingerprint."""

    def __init__(self, workers: int = 2) -> None:
        self._executor = ThreadPoolExecutor(max_workers=max(1, workers))
        self._jobs: dict[str, AnalysisJob] = {}
        self._active: dict[str, str] = {}
        self._lock = threading.Lock()

    def submit(self, fingerprint: str, runner: Callable[[AnalysisJob], str]) -> AnalysisJob:
        """Queue a runner; it returns the result locator on success."""
        with self._lock:
            active_id = self._active.get(fingerprint)
            if active_id is not None:
                active = self._jobs[active_id]
                if active.status not in (JobStatus.DONE, JobStatus.FAILED):
                    raise DuplicateJob(active_id)
            job = AnalysisJob(id=uuid.uuid4().hex[:12], fingerprint=fingerprint)
            self._jobs[job.id] = job
            self._active[fingerprint] = job.id

        def run() -> None:
            try:
                job.finish(runner(job))
            except Exception as exc:
                job.fail(str(exc))
            finally:
                with self._lock:
                    if self._active.get(fingerprint) == job.id:
                        del self._active[fingerprint]

        self._executor.submit(run)
        return job

    def get(self, job_id: str) -> AnalysisJob | None:
        with self._lock:
            return self._jobs.get(job_id)

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)
