"""Durable storage: framed block log, tip anchor, snapshot, directory lock.

Block log format: repeated [4-byte big-endian length][canonical block
bytes]. Appends are flushed and fsynced before the call returns; the tip
anchor ({height, header_hash}, atomically replaced) pins the head of the
chain so that even the final block's bytes are covered by something a
verifier can recompute against.
"""

from __future__ import annotations

import fcntl
import json
import os
import struct
from pathlib import Path

from .. import errors

BLOCK_LOG = "blocks.log"
TIP_FILE = "tip.json"
SNAPSHOT_FILE = "snapshot.json"
LOCK_FILE = "LOCK"

_LEN = struct.Struct(">I")


class DataDir:
    """Owns the files under one data directory; one process at a time."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock_fd = None
        self._log_fd = None

    # -- locking --------------------------------------------------------

    def acquire_lock(self):
        self.root.mkdir(parents=True, exist_ok=True)
        fd = os.open(self.root / LOCK_FILE, os.O_CREAT | os.O_RDWR, 0o644)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            os.close(fd)
            raise errors.DataDirLocked(f"{self.root} is in use") from None
        self._lock_fd = fd

    def release(self):
        if self._log_fd is not None:
            os.close(self._log_fd)
            self._log_fd = None
        if self._lock_fd is not None:
            fcntl.flock(self._lock_fd, fcntl.LOCK_UN)
            os.close(self._lock_fd)
            self._lock_fd = None

    # -- block log ------------------------------------------------------

    @property
    def log_path(self) -> Path:
        return self.root / BLOCK_LOG

    def append_block(self, data: bytes):
        if self._log_fd is None:
            self._log_fd = os.open(
                self.log_path, os.O_CREAT | os.O_WRONLY | os.O_APPEND, 0o644
            )
        os.write(self._log_fd, _LEN.pack(len(data)) + data)
        os.fsync(self._log_fd)

    def read_blocks(self) -> list[bytes]:
        """Strict read for serving: any framing defect raises CorruptLog."""
        records = []
        for record, defect in self._iter_records():
            if defect is not None:
                raise errors.CorruptLog(defect)
            records.append(record)
        return records

    def read_blocks_tolerant(self) -> tuple[list[bytes], str | None]:
        """Read for verification: returns (records, framing_defect_or_None)."""
        records = []
        for record, defect in self._iter_records():
            if defect is not None:
                return records, defect
            records.append(record)
        return records, None

    def _iter_records(self):
        if not self.log_path.exists():
            return
        data = self.log_path.read_bytes()
        offset = 0
        index = 0
        while offset < len(data):
            if offset + 4 > len(data):
                yield None, f"truncated length prefix at record {index}"
                return
            (length,) = _LEN.unpack_from(data, offset)
            offset += 4
            if offset + length > len(data):
                yield None, f"truncated record {index} (want {length} bytes)"
                return
            yield data[offset:offset + length], None
            offset += length
            index += 1

    # -- tip anchor -------------------------------------------------------

    def write_tip(self, height: int, header_hash: str):
        self._atomic_write(
            self.root / TIP_FILE,
            json.dumps({"height": height, "header_hash": header_hash}).encode(),
        )

    def read_tip(self) -> dict | None:
        path = self.root / TIP_FILE
        if not path.exists():
            return None
        try:
            tip = json.loads(path.read_text(encoding="utf-8"))
            if set(tip) != {"height", "header_hash"}:
                raise ValueError("bad tip fields")
            return tip
        except (ValueError, UnicodeDecodeError) as exc:
            raise errors.CorruptLog(f"unreadable tip file: {exc}") from None

    # -- snapshot -----------------------------------------------------------

    def write_snapshot(self, snapshot_bytes: bytes):
        self._atomic_write(self.root / SNAPSHOT_FILE, snapshot_bytes)

    def _atomic_write(self, path: Path, data: bytes):
        tmp = path.with_suffix(path.suffix + ".tmp")
        fd = os.open(tmp, os.O_CREAT | os.O_WRONLY | os.O_TRUNC, 0o644)
        try:
            os.write(fd, data)
            os.fsync(fd)
        finally:
            os.close(fd)
        os.replace(tmp, path)
