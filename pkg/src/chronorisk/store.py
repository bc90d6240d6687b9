"""Durable file-backed store for patients and prediction history.

On-disk layout: an append-only log plus a sidecar index, both carrying
format-version headers.

  log   = magic bytes "CHRONOLOG" followed by frames; frame = 4-byte
          big-endian payload length, UTF-8 JSON payload, 4-byte big-endian
          CRC32 of the payload. The first frame is a header document
          {"format": "chronorisk-log", "format_version": 1}; each later
          frame upserts a patient or appends a prediction.
  index = <log path>.idx, JSON snapshot of the materialized state up to a
          log offset. Written atomically on clean close; ignored and
          rebuilt from the log whenever missing, stale, or unreadable.

Durability: every put flushes and fsyncs before returning, so an
acknowledged write survives abrupt process death. On reopen a torn final
frame (the only kind a crash can produce, since frames are written one at
a time) is truncated away; a bad frame with valid data after it means real
corruption and raises instead of silently dropping acknowledged writes.

Concurrency: many readers, one writer; all operations serialize through
one lock, and the process that opened the store owns the files.
"""

import json
import os
import struct
import threading
import zlib
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import (
    InvalidInputError,
    NotFoundError,
    ReferentialError,
    StorageError,
    VersionError,
)
from .explain import Explanation
from .records import HorizonRisks, PatientRecord, RiskScores

MAGIC = b"CHRONOLOG"
LOG_FORMAT = "chronorisk-log"
INDEX_FORMAT = "chronorisk-log-index"
FORMAT_VERSION = 1
MAX_FRAME_BYTES = 1 << 26


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass(frozen=True)
class StoredPrediction:
    prediction_id: str
    patient_id: str
    created_at: str          # ISO-8601, UTC
    model_version: str
    risks: RiskScores
    horizons: HorizonRisks
    explanation: Explanation | None = None

    def __post_init__(self):
        for name in ("prediction_id", "patient_id", "model_version"):
            if not getattr(self, name):
                raise InvalidInputError(f"{name} must be non-empty")
        try:
            stamp = datetime.fromisoformat(self.created_at)
        except ValueError as exc:
            raise InvalidInputError(
                f"created_at is not an ISO-8601 timestamp: {self.created_at!r}"
            ) from exc
        if stamp.tzinfo is None:
            raise InvalidInputError("created_at must carry a UTC offset")

    def max_risk(self) -> float:
        return float(max(self.risks.as_array()))

    def to_json_dict(self) -> dict:
        doc = {
            "prediction_id": self.prediction_id,
            "patient_id": self.patient_id,
            "created_at": self.created_at,
            "model_version": self.model_version,
            "risks": self.risks.as_dict(),
            "horizons": self.horizons.as_dict(),
        }
        if self.explanation is not None:
            doc["explanation"] = self.explanation.to_json_dict()
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "StoredPrediction":
        risks = doc["risks"]
        explanation = doc.get("explanation")
        return cls(
            prediction_id=doc["prediction_id"],
            patient_id=doc["patient_id"],
            created_at=doc["created_at"],
            model_version=doc["model_version"],
            risks=RiskScores(risks["diabetes"], risks["heart_disease"],
                             risks["hypertension"]),
            horizons=HorizonRisks({int(h): p
                                   for h, p in doc["horizons"].items()}),
            explanation=(Explanation.from_json_dict(explanation)
                         if explanation is not None else None),
        )


@dataclass(frozen=True)
class PatientSummary:
    patient_id: str
    version: int
    latest_risk: float | None    # max disease probability, None if unpredicted


def _frame(payload: bytes) -> bytes:
    return struct.pack(">I", len(payload)) + payload + struct.pack(
        ">I", zlib.crc32(payload))


class Store:
    def __init__(self, path: str):
        self.path = path
        self.index_path = path + ".idx"
        self._lock = threading.RLock()
        self._patients: dict[str, tuple[dict, int]] = {}
        self._predictions: dict[str, list[dict]] = {}
        self._prediction_docs: dict[str, dict] = {}
        self._fh = None
        self._length = 0
        self.replayed_frames = 0     # frames read from the log at open time
        self._open()

    # -- lifecycle ---------------------------------------------------------

    def _open(self):
        if not os.path.exists(self.path):
            self._create()
            return
        try:
            fh = open(self.path, "rb+")
        except OSError as exc:
            raise StorageError(f"cannot open store log: {exc}") from exc
        data = fh.read()
        if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
            fh.close()
            raise StorageError(f"not a store log: {self.path}")
        offset, header = self._read_frame(data, len(MAGIC))
        if header is None:
            fh.close()
            raise StorageError("store log header is unreadable")
        if header.get("format") != LOG_FORMAT:
            fh.close()
            raise StorageError(f"not a store log: {self.path}")
        if header.get("format_version") != FORMAT_VERSION:
            fh.close()
            raise VersionError(
                f"unsupported store log version: {header.get('format_version')}"
            )
        start = self._load_index(data, offset)
        end = self._replay(data, start)
        if end < len(data):
            fh.truncate(end)
            fh.flush()
            os.fsync(fh.fileno())
        fh.seek(end)
        self._fh = fh
        self._length = end

    def _create(self):
        tmp = self.path + ".tmp"
        header = json.dumps(
            {"format": LOG_FORMAT, "format_version": FORMAT_VERSION},
            sort_keys=True, separators=(",", ":"),
        ).encode()
        try:
            with open(tmp, "wb") as fh:
                fh.write(MAGIC + _frame(header))
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
            self._fsync_dir()
            self._fh = open(self.path, "rb+")
            self._fh.seek(0, os.SEEK_END)
            self._length = self._fh.tell()
        except OSError as exc:
            raise StorageError(f"cannot create store log: {exc}") from exc

    def _fsync_dir(self):
        parent = os.path.dirname(os.path.abspath(self.path))
        try:
            fd = os.open(parent, os.O_RDONLY)
            try:
                os.fsync(fd)
            finally:
                os.close(fd)
        except OSError:
            pass

    @staticmethod
    def _read_frame(data: bytes, offset: int) -> tuple[int, dict | None]:
        """Return (next offset, payload dict) or (offset, None) if unreadable."""
        if offset + 4 > len(data):
            return offset, None
        (length,) = struct.unpack_from(">I", data, offset)
        end = offset + 4 + length + 4
        if length > MAX_FRAME_BYTES or end > len(data):
            return offset, None
        payload = data[offset + 4: offset + 4 + length]
        (crc,) = struct.unpack_from(">I", data, end - 4)
        if zlib.crc32(payload) != crc:
            return offset, None
        try:
            doc = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return offset, None
        return end, doc

    def _load_index(self, data: bytes, log_start: int) -> int:
        """Seed state from the sidecar if it is fresh; return replay offset."""
        try:
            with open(self.index_path, encoding="utf-8") as fh:
                idx = json.load(fh)
            if (idx.get("format") != INDEX_FORMAT
                    or idx.get("format_version") != FORMAT_VERSION):
                return log_start
            covered = idx.get("log_length", -1)
            if (not isinstance(covered, int) or covered < log_start
                    or covered > len(data)):
                return log_start
            patients = {pid: (doc, int(version))
                        for pid, (doc, version) in idx["patients"].items()}
            predictions = {pid: list(docs)
                           for pid, docs in idx["predictions"].items()}
            prediction_docs = {d["prediction_id"]: d
                               for docs in predictions.values() for d in docs}
        except (OSError, json.JSONDecodeError, UnicodeDecodeError,
                KeyError, TypeError, ValueError):
            return log_start
        self._patients = patients
        self._predictions = predictions
        self._prediction_docs = prediction_docs
        return covered

    def _replay(self, data: bytes, start: int) -> int:
        offset = start
        while offset < len(data):
            end, doc = self._read_frame(data, offset)
            if doc is None:
                # a torn write can only be the final frame; anything readable
                # after a bad frame means the log body itself is damaged
                (length,) = struct.unpack_from(">I", data, offset) \
                    if offset + 4 <= len(data) else (0,)
                frame_end = offset + 4 + length + 4
                if length <= MAX_FRAME_BYTES and frame_end < len(data):
                    raise StorageError(
                        f"store log corrupted at byte {offset}"
                    )
                return offset
            self._apply(doc)
            self.replayed_frames += 1
            offset = end
        return offset

    def _apply(self, doc: dict):
        kind = doc.get("kind")
        if kind == "patient":
            self._patients[doc["record"]["patient_id"]] = (
                doc["record"], int(doc["version"]))
        elif kind == "prediction":
            pdoc = doc["prediction"]
            self._predictions.setdefault(pdoc["patient_id"], []).append(pdoc)
            self._prediction_docs[pdoc["prediction_id"]] = pdoc
        else:
            raise StorageError(f"unknown log frame kind: {kind!r}")

    def close(self):
        with self._lock:
            if self._fh is None:
                return
            self._write_index()
            self._fh.close()
            self._fh = None

    def abort(self):
        """Close without checkpointing, as an abruptly killed process would."""
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _write_index(self):
        doc = {
            "format": INDEX_FORMAT,
            "format_version": FORMAT_VERSION,
            "log_length": self._length,
            "patients": {pid: [rec, version]
                         for pid, (rec, version) in self._patients.items()},
            "predictions": self._predictions,
        }
        tmp = self.index_path + ".tmp"
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.index_path)
            self._fsync_dir()
        except OSError:
            # the index is a cache; the log alone is authoritative
            if os.path.exists(tmp):
                os.unlink(tmp)

    # -- writes ------------------------------------------------------------

    def _append(self, doc: dict):
        if self._fh is None:
            raise StorageError("store is closed")
        payload = json.dumps(doc, sort_keys=True,
                             separators=(",", ":")).encode("utf-8")
        frame = _frame(payload)
        try:
            self._fh.write(frame)
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except OSError as exc:
            try:
                self._fh.truncate(self._length)
                self._fh.seek(self._length)
            except OSError:
                self._fh.close()
                self._fh = None
            raise StorageError(f"write not acknowledged: {exc}") from exc
        self._length += len(frame)

    def put_patient(self, record: PatientRecord) -> int:
        if not isinstance(record, PatientRecord):
            raise InvalidInputError("put_patient expects a PatientRecord")
        with self._lock:
            current = self._patients.get(record.patient_id)
            version = (current[1] + 1) if current else 1
            doc = record.to_json_dict()
            self._append({"kind": "patient", "version": version, "record": doc})
            self._patients[record.patient_id] = (doc, version)
            return version

    def put_prediction(self, prediction: StoredPrediction):
        if not isinstance(prediction, StoredPrediction):
            raise InvalidInputError("put_prediction expects a StoredPrediction")
        with self._lock:
            if prediction.patient_id not in self._patients:
                raise ReferentialError(
                    f"prediction references unknown patient: "
                    f"{prediction.patient_id}"
                )
            if prediction.prediction_id in self._prediction_docs:
                raise InvalidInputError(
                    f"duplicate prediction_id: {prediction.prediction_id}"
                )
            history = self._predictions.get(prediction.patient_id, [])
            if history and prediction.created_at < history[-1]["created_at"]:
                raise InvalidInputError(
                    "created_at moves backwards for patient "
                    f"{prediction.patient_id}"
                )
            pdoc = prediction.to_json_dict()
            self._append({"kind": "prediction", "prediction": pdoc})
            self._predictions.setdefault(prediction.patient_id, []).append(pdoc)
            self._prediction_docs[prediction.prediction_id] = pdoc

    # -- reads -------------------------------------------------------------

    def get_patient(self, patient_id: str) -> tuple[PatientRecord, int]:
        with self._lock:
            entry = self._patients.get(patient_id)
            if entry is None:
                raise NotFoundError(f"unknown patient: {patient_id}")
            doc, version = entry
            return PatientRecord.from_json_dict(doc), version

    def list_patients(self, limit: int = 50, offset: int = 0,
                      min_risk: float | None = None) -> list[PatientSummary]:
        if limit < 1:
            raise InvalidInputError(f"limit must be positive: {limit}")
        if offset < 0:
            raise InvalidInputError(f"offset must be non-negative: {offset}")
        with self._lock:
            summaries = []
            for pid in sorted(self._patients):
                version = self._patients[pid][1]
                latest = self._latest_doc(pid)
                risk = (max(latest["risks"].values())
                        if latest is not None else None)
                if min_risk is not None and (risk is None or risk < min_risk):
                    continue
                summaries.append(PatientSummary(pid, version, risk))
            return summaries[offset: offset + limit]

    def _latest_doc(self, patient_id: str) -> dict | None:
        history = self._predictions.get(patient_id)
        if not history:
            return None
        return max(enumerate(history),
                   key=lambda pair: (pair[1]["created_at"], pair[0]))[1]

    def get_latest_prediction(self, patient_id: str) -> StoredPrediction:
        with self._lock:
            if patient_id not in self._patients:
                raise NotFoundError(f"unknown patient: {patient_id}")
            doc = self._latest_doc(patient_id)
            if doc is None:
                raise NotFoundError(
                    f"no predictions stored for patient: {patient_id}")
            return StoredPrediction.from_json_dict(doc)

    def prediction_history(self, patient_id: str) -> list[StoredPrediction]:
        with self._lock:
            if patient_id not in self._patients:
                raise NotFoundError(f"unknown patient: {patient_id}")
            return [StoredPrediction.from_json_dict(d)
                    for d in self._predictions.get(patient_id, [])]

    def get_prediction(self, prediction_id: str) -> StoredPrediction:
        with self._lock:
            doc = self._prediction_docs.get(prediction_id)
            if doc is None:
                raise NotFoundError(f"unknown prediction: {prediction_id}")
            return StoredPrediction.from_json_dict(doc)

    def count_patients(self) -> int:
        with self._lock:
            return len(self._patients)
