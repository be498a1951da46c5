"""File-backed persistence for sessions.

Each session owns a directory containing an append-only JSON-lines event
log, periodic state snapshots that bound replay cost, and the server-side
token table. Events are flushed and fsynced before the HTTP layer
responds (write-ahead). Recovery replays the newest usable snapshot plus
the log tail; a corrupt tail recovers to the last valid record and flags
the session read-only until a facilitator repairs it.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from ..errors import SessionError
from ..session import DelphiSession

SNAPSHOT_EVERY = 100


@dataclass
class RecoveredSession:
    session: DelphiSession
    read_only: bool = False
    # byte length of the valid log prefix; used to repair a corrupt tail
    valid_bytes: int = 0
    event_count: int = 0


class SessionStore:
    def __init__(self, data_dir: str | Path) -> None:
        self.base = Path(data_dir)
        self.base.mkdir(parents=True, exist_ok=True)

    def _session_dir(self, session_id: str) -> Path:
        safe = session_id.replace("/", "_")
        return self.base / safe

    def _log_path(self, session_id: str) -> Path:
        return self._session_dir(session_id) / "events.jsonl"

    # -- write path -----------------------------------------------------

    def append_events(self, session_id: str, events: list[dict]) -> None:
        """Durably append events; callers respond to clients only after
        this returns."""
        if not events:
            return
        directory = self._session_dir(session_id)
        directory.mkdir(parents=True, exist_ok=True)
        path = self._log_path(session_id)
        with open(path, "a", encoding="utf-8") as handle:
            for event in events:
                handle.write(json.dumps(event, separators=(",", ":")) + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    def write_snapshot(self, session: DelphiSession) -> Path:
        directory = self._session_dir(session.session_id)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"snapshot-{session.last_seq:08d}.json"
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(session.to_state(), handle, separators=(",", ":"))
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
        return path

    def save_tokens(self, session_id: str, tokens: dict[str, dict]) -> None:
        """Persist the token table (server-side only, never in responses)."""
        directory = self._session_dir(session_id)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "tokens.json"
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(tokens, handle)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)

    def load_tokens(self, session_id: str) -> dict[str, dict]:
        path = self._session_dir(session_id) / "tokens.json"
        if not path.exists():
            return {}
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)

    def read_events(self, session_id: str) -> list[dict]:
        """All valid events currently on disk (stops at a corrupt tail)."""
        path = self._log_path(session_id)
        if not path.exists():
            return []
        events = []
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError:
                    break
        return events

    def repair_log_tail(self, session_id: str, valid_bytes: int) -> None:
        """Truncate a corrupt log tail back to the last valid record."""
        path = self._log_path(session_id)
        with open(path, "r+b") as handle:
            handle.truncate(valid_bytes)
            handle.flush()
            os.fsync(handle.fileno())

    # -- recovery -------------------------------------------------------

    def recover_all(self) -> dict[str, RecoveredSession]:
        recovered = {}
        for directory in sorted(self.base.iterdir()):
            if not directory.is_dir():
                continue
            if not (directory / "events.jsonl").exists():
                continue
            entry = self._recover_one(directory)
            if entry is not None:
                recovered[entry.session.session_id] = entry
        return recovered

    def _latest_snapshot(self, directory: Path) -> dict | None:
        candidates = sorted(directory.glob("snapshot-*.json"), reverse=True)
        for path in candidates:
            try:
                with open(path, "r", encoding="utf-8") as handle:
                    return json.load(handle)
            except (json.JSONDecodeError, OSError):
                continue  # fall back to the next older snapshot
        return None

    def _recover_one(self, directory: Path) -> RecoveredSession | None:
        log_path = directory / "events.jsonl"
        events: list[dict] = []
        valid_bytes = 0
        corrupt_tail = False
        with open(log_path, "rb") as handle:
            for raw in handle:
                if not raw.endswith(b"\n"):
                    corrupt_tail = True  # truncated final record
                    break
                try:
                    events.append(json.loads(raw))
                except json.JSONDecodeError:
                    corrupt_tail = True
                    break
                valid_bytes += len(raw)
        if not events:
            return None

        snapshot = self._latest_snapshot(directory)
        session: DelphiSession | None = None
        if snapshot is not None:
            try:
                session = DelphiSession.from_state(snapshot)
            except (SessionError, KeyError, ValueError):
                session = None
        if session is not None:
            tail = [e for e in events if e["seq"] > session.last_seq]
        else:
            tail = events
            session = None
        try:
            if session is None:
                session = DelphiSession.replay(tail)
            else:
                for event in tail:
                    session.apply_event(event)
        except (SessionError, KeyError, ValueError):
            # snapshot unusable or log prefix inconsistent: last resort is
            # a clean replay of the valid prefix
            try:
                session = DelphiSession.replay(events)
            except (SessionError, KeyError, ValueError):
                return None
        return RecoveredSession(
            session=session,
            read_only=corrupt_tail,
            valid_bytes=valid_bytes,
            event_count=len(events),
        )
