"""Session auth: one configured credential pair, unguessable bearer tokens."""

import hmac
import secrets
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone


@dataclass(frozen=True)
class Session:
    token: str
    user: str
    expires_at: str     # ISO-8601, UTC
    deadline: float     # epoch seconds, the comparison source of truth


class SessionManager:
    def __init__(self, user: str, password: str, ttl_seconds: int = 3600):
        self._user = user
        self._password = password
        self._ttl = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def login(self, user: str, password: str) -> Session | None:
        # compare both fields unconditionally so timing leaks nothing
        user_ok = hmac.compare_digest(user.encode(), self._user.encode())
        pass_ok = hmac.compare_digest(password.encode(),
                                      self._password.encode())
        if not (user_ok and pass_ok):
            return None
        deadline = time.time() + self._ttl
        session = Session(
            token=secrets.token_hex(32),            # 256 bits
            user=user,
            expires_at=datetime.fromtimestamp(
                deadline, tz=timezone.utc).isoformat(timespec="seconds"),
            deadline=deadline,
        )
        with self._lock:
            self._sessions[session.token] = session
        return session

    def validate(self, token: str | None) -> Session | None:
        if not token:
            return None
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                return None
            if time.time() >= session.deadline:
                del self._sessions[token]
                return None
            return session

    def expire_now(self, token: str):
        """Test hook: force a session into the expired state."""
        with self._lock:
            session = self._sessions.get(token)
            if session is not None:
                self._sessions[token] = Session(
                    session.token, session.user, session.expires_at, 0.0)
