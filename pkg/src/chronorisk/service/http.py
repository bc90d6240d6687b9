"""HTTP API: session auth, patient CRUD, async prediction jobs, alerts.

Stdlib ThreadingHTTPServer; all routes live under /api/v1 with JSON bodies.
GET /api/v1/healthz is unauthenticated (load balancers probe it); every
other endpoint except POST /api/v1/login requires a bearer token. When a
static directory is configured, non-API GETs serve the files in it with an
index.html fallback so a single-page client can own its routes.
"""

import json
import logging
import mimetypes
import os
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from ..errors import (
    CapacityError,
    InvalidInputError,
    NotFoundError,
    ReferentialError,
    StateError,
    StorageError,
)
from ..model.checkpoint import load_model, model_version
from ..records import DISEASES, LabPanel, PatientRecord
from ..store import Store
from .auth import SessionManager
from .config import ServiceConfig
from .jobs import DONE, JobManager

log = logging.getLogger("chronorisk.service")

DEFAULT_ALERT_THRESHOLD = 0.7
_ALERT_PARAMS = {"diabetes": "diabetes", "heart": "heart_disease",
                 "hypertension": "hypertension"}


@dataclass
class _Request:
    match: re.Match
    query: dict[str, str]
    body: dict


class App:
    """Owns the store, sessions, model, and job workers behind the routes."""

    def __init__(self, config: ServiceConfig, model=None,
                 version: str | None = None):
        self.config = config
        if model is None and os.path.exists(config.checkpoint):
            model = load_model(config.checkpoint)
            version = model_version(config.checkpoint)
        self.model = model
        self.version = version
        self.store = Store(config.store)
        self.sessions = SessionManager(config.user, config.password,
                                       config.session_ttl_seconds)
        self.jobs = JobManager(
            self.store, model, version,
            queue_depth=config.queue_depth, workers=config.workers,
            explain_permutations=config.explain_permutations,
        )
        self.jobs.start()

    def close(self):
        self.jobs.stop()
        self.store.close()

    # -- handlers: (request) -> (status, body) -------------------------------

    def login(self, req: _Request):
        user = req.body.get("user", "")
        password = req.body.get("pass", "")
        if not isinstance(user, str) or not isinstance(password, str):
            raise InvalidInputError("user and pass must be strings")
        session = self.sessions.login(user, password)
        if session is None:
            return 401, {"error": "invalid credentials"}
        return 200, {"token": session.token, "expires_at": session.expires_at}

    def list_patients(self, req: _Request):
        limit = _int_param(req.query, "limit", 50)
        offset = _int_param(req.query, "offset", 0)
        min_risk = None
        if "alert" in req.query:
            min_risk = _float_param(req.query, "alert")
        page = self.store.list_patients(limit=limit, offset=offset,
                                        min_risk=min_risk)
        return 200, {
            "patients": [
                {"patient_id": s.patient_id, "version": s.version,
                 "latest_risk": s.latest_risk}
                for s in page
            ],
            "limit": limit,
            "offset": offset,
        }

    def get_patient(self, req: _Request):
        record, version = self.store.get_patient(req.match["id"])
        return 200, {"record": record.to_json_dict(), "version": version}

    def put_patient(self, req: _Request):
        doc = dict(req.body)
        path_id = req.match["id"]
        if doc.get("patient_id", path_id) != path_id:
            raise InvalidInputError(
                "patient_id in body does not match the URL")
        doc["patient_id"] = path_id
        record = PatientRecord.from_json_dict(doc)
        version = self.store.put_patient(record)
        return 200, {"patient_id": path_id, "version": version}

    def post_labs(self, req: _Request):
        record, _ = self.store.get_patient(req.match["id"])
        measurements = req.body.get("measurements")
        if not isinstance(measurements, dict) or not measurements:
            raise InvalidInputError(
                "body must carry a non-empty measurements object")
        panel = LabPanel.from_measurements(measurements)
        merged = PatientRecord(
            patient_id=record.patient_id, note=record.note,
            labs=record.labs.merged_with(panel), demo=record.demo,
            labels=record.labels, onset_day=record.onset_day,
        )
        version = self.store.put_patient(merged)
        return 200, {"patient_id": record.patient_id, "version": version}

    def post_predict(self, req: _Request):
        record, _ = self.store.get_patient(req.match["id"])
        explain = _bool_param(req.query, "explain", False)
        if not record.has_content:
            raise InvalidInputError(
                "patient has neither a note nor measured labs")
        job_id = self.jobs.submit(record.patient_id, explain)
        return 202, {"job_id": job_id}

    def get_job(self, req: _Request):
        job = self.jobs.get(req.match["id"])
        body = job.to_json_dict()
        if job.state == DONE and job.result is not None:
            body["prediction"] = self.store.get_prediction(
                job.result).to_json_dict()
        return 200, body

    def get_horizons(self, req: _Request):
        latest = self.store.get_latest_prediction(req.match["id"])
        return 200, {
            "patient_id": latest.patient_id,
            "horizons": latest.horizons.as_dict(),
            "created_at": latest.created_at,
            "model_version": latest.model_version,
        }

    def get_alerts(self, req: _Request):
        thresholds = {
            disease: (_float_param(req.query, param)
                      if param in req.query else DEFAULT_ALERT_THRESHOLD)
            for param, disease in _ALERT_PARAMS.items()
        }
        alerts = []
        total = self.store.count_patients()
        for summary in self.store.list_patients(limit=max(total, 1)):
            if summary.latest_risk is None:
                continue
            latest = self.store.get_latest_prediction(summary.patient_id)
            probs = latest.risks.as_dict()
            for disease in DISEASES:
                if probs[disease] >= thresholds[disease]:
                    alerts.append({
                        "patient_id": summary.patient_id,
                        "disease": disease,
                        "probability": probs[disease],
                    })
        alerts.sort(key=lambda a: (-a["probability"], a["patient_id"],
                                   a["disease"]))
        return 200, {"alerts": alerts}

    def healthz(self, req: _Request):
        return 200, {"status": "ok", "model_version": self.version}


def _int_param(query: dict, name: str, default: int) -> int:
    if name not in query:
        return default
    try:
        return int(query[name])
    except ValueError:
        raise InvalidInputError(
            f"query parameter {name} must be an integer") from None


def _float_param(query: dict, name: str) -> float:
    try:
        return float(query[name])
    except ValueError:
        raise InvalidInputError(
            f"query parameter {name} must be a number") from None


def _bool_param(query: dict, name: str, default: bool) -> bool:
    if name not in query:
        return default
    value = query[name].lower()
    if value in ("true", "1"):
        return True
    if value in ("false", "0"):
        return False
    raise InvalidInputError(f"query parameter {name} must be true or false")


# (method, pattern, handler name, requires auth)
ROUTES = [
    ("POST", r"/api/v1/login", "login", False),
    ("GET", r"/api/v1/healthz", "healthz", False),
    ("GET", r"/api/v1/patients", "list_patients", True),
    ("GET", r"/api/v1/patients/(?P<id>[^/]+)", "get_patient", True),
    ("PUT", r"/api/v1/patients/(?P<id>[^/]+)", "put_patient", True),
    ("POST", r"/api/v1/patients/(?P<id>[^/]+)/labs", "post_labs", True),
    ("POST", r"/api/v1/patients/(?P<id>[^/]+)/predict", "post_predict", True),
    ("GET", r"/api/v1/jobs/(?P<id>[^/]+)", "get_job", True),
    ("GET", r"/api/v1/patients/(?P<id>[^/]+)/horizons", "get_horizons", True),
    ("GET", r"/api/v1/alerts", "get_alerts", True),
]
_COMPILED = [(m, re.compile(p + r"\Z"), h, a) for m, p, h, a in ROUTES]


class _Handler(BaseHTTPRequestHandler):
    app: App = None  # installed per server via a subclass attribute
    protocol_version = "HTTP/1.1"
    server_version = "chronorisk"
    disable_nagle_algorithm = True   # headers and body go in separate writes

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    def _dispatch(self, method: str):
        parsed = urlparse(self.path)
        path = parsed.path.rstrip("/") or "/"
        body_bytes = self._read_body()

        if not path.startswith("/api/"):
            if method == "GET":
                self._serve_static(path)
            else:
                self._send(405, {"error": "method not allowed"})
            return

        match = handler_name = needs_auth = None
        allowed: set[str] = set()
        for route_method, pattern, name, auth in _COMPILED:
            m = pattern.match(path)
            if m is None:
                continue
            # a later literal route (e.g. .../horizons) must not lose to an
            # earlier wildcard; longer literal patterns are checked last and
            # override only when the method also matches
            allowed.add(route_method)
            if route_method == method:
                match, handler_name, needs_auth = m, name, auth

        if handler_name is None:
            if allowed:
                self._send(405, {"error": "method not allowed"})
            else:
                self._send(404, {"error": "no such endpoint"})
            return

        if needs_auth and not self._authenticated():
            self._send(401, {"error": "missing or expired session token"})
            return

        body = {}
        if body_bytes:
            try:
                body = json.loads(body_bytes.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                self._send(400, {"error": "request body is not valid JSON"})
                return
            if not isinstance(body, dict):
                self._send(400, {"error": "request body must be an object"})
                return

        query = {k: v[-1] for k, v in parse_qs(parsed.query).items()}
        request = _Request(match=match, query=query, body=body)
        try:
            status, payload = getattr(self.app, handler_name)(request)
        except NotFoundError as exc:
            status, payload = 404, {"error": str(exc)}
        except (InvalidInputError, ReferentialError) as exc:
            status, payload = 422, {"error": str(exc)}
        except CapacityError as exc:
            status, payload = 503, {"error": str(exc)}
        except (StorageError, StateError) as exc:
            status, payload = 500, {"error": str(exc)}
        except Exception:
            log.exception("unhandled error in %s %s", method, path)
            status, payload = 500, {"error": "internal server error"}
        self._send(status, payload)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length > 0 else b""

    def _authenticated(self) -> bool:
        header = self.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            return False
        token = header[len("Bearer "):].strip()
        return self.app.sessions.validate(token) is not None

    def _send(self, status: int, payload: dict):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _serve_static(self, path: str):
        root = self.app.config.static_dir
        if not root:
            self._send(404, {"error": "no such endpoint"})
            return
        root = os.path.abspath(root)
        relative = path.lstrip("/") or "index.html"
        target = os.path.abspath(os.path.join(root, relative))
        if not (target == root or target.startswith(root + os.sep)):
            self._send(404, {"error": "no such endpoint"})
            return
        if os.path.isdir(target):
            target = os.path.join(target, "index.html")
        if not os.path.isfile(target):
            # single-page client: unknown extensionless routes load the shell
            if "." not in os.path.basename(target):
                target = os.path.join(root, "index.html")
            if not os.path.isfile(target):
                self._send(404, {"error": "no such endpoint"})
                return
        ctype = mimetypes.guess_type(target)[0] or "application/octet-stream"
        with open(target, "rb") as fh:
            data = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class Server:
    """Bind-and-serve wrapper; start() runs in a thread, run() blocks."""

    def __init__(self, config: ServiceConfig, model=None,
                 version: str | None = None):
        self.app = App(config, model, version)
        handler = type("BoundHandler", (_Handler,), {"app": self.app})
        self.httpd = ThreadingHTTPServer((config.host, config.port), handler)
        self.httpd.daemon_threads = True
        self._thread: threading.Thread | None = None
        self._serving = False

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.httpd.server_address[0]}:{self.port}"

    def start(self) -> "Server":
        self._serving = True
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        daemon=True, name="chronorisk-http")
        self._thread.start()
        return self

    def run(self):
        self._serving = True
        try:
            self.httpd.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def stop(self):
        if self._serving:
            self.httpd.shutdown()   # waits for the serve loop, so only
            self._serving = False   # call it if the loop ever started
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=10)
            self._thread = None
        self.app.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
