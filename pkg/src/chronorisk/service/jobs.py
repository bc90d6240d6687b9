"""Asynchronous prediction jobs: bounded queue, worker pool, one-way states.

A submitted job is acknowledged only after it is registered and enqueued;
a full queue rejects the submit outright (back-pressure) so every
acknowledged job is eventually drained to a terminal state by a worker.
State moves pending -> running -> (done | failed) and never leaves a
terminal state.
"""

import queue
import threading
import uuid
from dataclasses import dataclass, field

from ..errors import CapacityError, NotFoundError, StateError
from ..records import DISEASES
from ..store import Store, StoredPrediction, utc_now_iso

PENDING = "pending"
RUNNING = "running"
DONE = "done"
FAILED = "failed"
_TRANSITIONS = {PENDING: {RUNNING}, RUNNING: {DONE, FAILED}}


@dataclass
class PredictionJob:
    job_id: str
    patient_id: str
    with_explanation: bool
    state: str = PENDING
    submitted_at: str = field(default_factory=utc_now_iso)
    finished_at: str | None = None
    result: str | None = None          # prediction_id once done
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "patient_id": self.patient_id,
            "with_explanation": self.with_explanation,
            "state": self.state,
            "submitted_at": self.submitted_at,
            "finished_at": self.finished_at,
            "result": self.result,
            "error": self.error,
        }


class JobManager:
    def __init__(self, store: Store, model, model_version: str | None,
                 queue_depth: int = 256, workers: int = 1,
                 explain_permutations: int = 300):
        self.store = store
        self.model = model
        self.model_version = model_version
        self.explain_permutations = explain_permutations
        self._queue: queue.Queue = queue.Queue(maxsize=queue_depth)
        self._jobs: dict[str, PredictionJob] = {}
        self._lock = threading.Lock()
        self._threads = [
            threading.Thread(target=self._worker_loop, daemon=True,
                             name=f"job-worker-{i}")
            for i in range(workers)
        ]
        self._started = False

    def start(self):
        if not self._started:
            self._started = True
            for t in self._threads:
                t.start()

    def stop(self):
        if self._started:
            for _ in self._threads:
                self._queue.put(None)
            for t in self._threads:
                t.join(timeout=30)
            self._started = False

    def drain(self):
        """Block until every enqueued job has been processed."""
        self._queue.join()

    # -- submission and lookup ----------------------------------------------

    def submit(self, patient_id: str, with_explanation: bool) -> str:
        job = PredictionJob(job_id=uuid.uuid4().hex, patient_id=patient_id,
                            with_explanation=with_explanation)
        with self._lock:
            self._jobs[job.job_id] = job
            try:
                self._queue.put_nowait(job)
            except queue.Full:
                del self._jobs[job.job_id]
                raise CapacityError(
                    "job queue is full; retry later") from None
        return job.job_id

    def get(self, job_id: str) -> PredictionJob:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"unknown job: {job_id}")
            return job

    def queue_size(self) -> int:
        return self._queue.qsize()

    # -- worker side ---------------------------------------------------------

    def _transition(self, job: PredictionJob, state: str,
                    result: str | None = None, error: str | None = None):
        with self._lock:
            if state not in _TRANSITIONS.get(job.state, set()):
                raise StateError(
                    f"illegal job transition {job.state} -> {state}")
            job.state = state
            if state in (DONE, FAILED):
                job.finished_at = utc_now_iso()
                job.result = result
                job.error = error

    def _worker_loop(self):
        while True:
            job = self._queue.get()
            if job is None:
                self._queue.task_done()
                return
            try:
                self._transition(job, RUNNING)
                prediction_id = self._run(job)
                self._transition(job, DONE, result=prediction_id)
            except Exception as exc:
                try:
                    self._transition(job, FAILED, error=str(exc))
                except StateError:
                    pass
            finally:
                self._queue.task_done()

    def _run(self, job: PredictionJob) -> str:
        if self.model is None:
            raise StateError(
                "no model is loaded; train a model and point the service "
                "at its checkpoint")
        record, _ = self.store.get_patient(job.patient_id)
        prediction = self.model.predict(record)
        explanation = None
        if job.with_explanation:
            explanation = self._explain(record, prediction)
        stored = StoredPrediction(
            prediction_id=uuid.uuid4().hex,
            patient_id=job.patient_id,
            created_at=utc_now_iso(),
            model_version=self.model_version or "unversioned",
            risks=prediction.risks,
            horizons=prediction.horizons,
            explanation=explanation,
        )
        self.store.put_prediction(stored)
        return stored.prediction_id

    def _explain(self, record, prediction):
        from ..explain import explain_record

        # explain the headline risk: the disease with the highest probability
        probs = prediction.risks.as_dict()
        target = max(DISEASES, key=lambda d: probs[d])
        return explain_record(
            self.model, record, target, mode="auto",
            n_permutations=self.explain_permutations,
        )
