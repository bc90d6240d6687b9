"""HTTP service: config, sessions, job queue, and the API server."""

from .auth import Session, SessionManager
from .config import ServiceConfig, load_config
from .http import App, Server
from .jobs import DONE, FAILED, PENDING, RUNNING, JobManager, PredictionJob

__all__ = [
    "App",
    "DONE",
    "FAILED",
    "JobManager",
    "PENDING",
    "PredictionJob",
    "RUNNING",
    "Server",
    "ServiceConfig",
    "Session",
    "SessionManager",
    "load_config",
]
