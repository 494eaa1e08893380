"""Run ledger in SQLite.

Schema:
  - table runs(
      digest TEXT PRIMARY KEY,
      op TEXT NOT NULL,
      grp TEXT NOT NULL,
      seed INTEGER,
      status TEXT NOT NULL,     -- pass | violation | inconclusive | error
      exit_code INTEGER NOT NULL,
      report TEXT NOT NULL      -- KEY=VALUE report text
    )
"""

import sqlite3
import threading
from dataclasses import astuple, dataclass
from typing import Dict, Iterable, List, Optional

from run_config import DEFAULT_DB_PATH

STATUSES = ("pass", "violation", "inconclusive", "error")

_UPSERT = """
    INSERT INTO runs (digest, op, grp, seed, status, exit_code, report)
    VALUES (?, ?, ?, ?, ?, ?, ?)
    ON CONFLICT(digest) DO UPDATE SET
        op=excluded.op,
        grp=excluded.grp,
        seed=excluded.seed,
        status=excluded.status,
        exit_code=excluded.exit_code,
        report=excluded.report
"""

# Thread-local connections, one per database path
_local = threading.local()


@dataclass(frozen=True)
class RunRecord:
    digest: str
    op: str
    group: str
    seed: Optional[int]
    status: str
    exit_code: int
    report: str

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"Unknown run status {self.status!r}; expected one of {', '.join(STATUSES)}")

    def as_dict(self) -> dict:
        return {
            "digest": self.digest,
            "op": self.op,
            "group": self.group,
            "seed": self.seed,
            "status": self.status,
            "exit_code": self.exit_code,
            "report": self.report,
        }


def _tune(conn: sqlite3.Connection) -> None:
    conn.execute("PRAGMA journal_mode=WAL")
    conn.execute("PRAGMA synchronous=NORMAL")
    conn.execute("PRAGMA cache_size=-64000")  # 64MB cache
    conn.execute("PRAGMA temp_store=MEMORY")


def get_db_connection(db_path: str = DEFAULT_DB_PATH) -> sqlite3.Connection:
    """Thread-local connection with WAL settings."""
    connections = getattr(_local, "connections", None)
    if connections is None:
        connections = _local.connections = {}
    conn = connections.get(db_path)
    if conn is None:
        conn = sqlite3.connect(db_path, timeout=10.0, check_same_thread=False)
        _tune(conn)
        connections[db_path] = conn
    return conn


def close_connections() -> None:
    for conn in getattr(_local, "connections", {}).values():
        conn.close()
    _local.connections = {}


def init_db(db_path: str = DEFAULT_DB_PATH) -> None:
    """Create the runs table if it doesn't exist."""
    conn = sqlite3.connect(db_path, timeout=10.0)
    cur = conn.cursor()
    cur.execute(
        """
        CREATE TABLE IF NOT EXISTS runs (
            digest TEXT PRIMARY KEY,
            op TEXT NOT NULL,
            grp TEXT NOT NULL,
            seed INTEGER,
            status TEXT NOT NULL,
            exit_code INTEGER NOT NULL,
            report TEXT NOT NULL
        )
        """
    )
    cur.execute("CREATE INDEX IF NOT EXISTS idx_runs_op_status ON runs(op, status)")
    conn.commit()
    _tune(conn)
    conn.close()


def write_batch(conn: sqlite3.Connection, records: Iterable[RunRecord]) -> int:
    rows = [astuple(r) for r in records]
    if rows:
        conn.executemany(_UPSERT, rows)
        conn.commit()
    return len(rows)


def upsert_run(record: RunRecord, db_path: str = DEFAULT_DB_PATH) -> None:
    conn = sqlite3.connect(db_path, timeout=10.0)
    write_batch(conn, [record])
    conn.close()


def _record(row) -> RunRecord:
    return RunRecord(row[0], row[1], row[2], row[3], row[4], row[5], row[6])


def get_run_by_digest(digest: str, db_path: str = DEFAULT_DB_PATH) -> Optional[RunRecord]:
    cur = get_db_connection(db_path).cursor()
    cur.execute(
        "SELECT digest, op, grp, seed, status, exit_code, report FROM runs WHERE digest = ?",
        (digest,),
    )
    row = cur.fetchone()
    return _record(row) if row else None


def get_runs_batch(
    digests: List[str],
    db_path: str = DEFAULT_DB_PATH,
    chunk_size: int = 900,
) -> Dict[str, RunRecord]:
    """
    digest -> RunRecord for every digest found; missing digests are left out.
    Chunked to stay under SQLite's 999 bound-parameter limit.
    """
    if not digests:
        return {}
    cur = get_db_connection(db_path).cursor()
    results: Dict[str, RunRecord] = {}
    for i in range(0, len(digests), chunk_size):
        chunk = digests[i:i + chunk_size]
        placeholders = ",".join(["?"] * len(chunk))
        cur.execute(
            f"SELECT digest, op, grp, seed, status, exit_code, report FROM runs WHERE digest IN ({placeholders})",
            chunk,
        )
        for row in cur.fetchall():
            results[row[0]] = _record(row)
    return results


def count_runs(db_path: str = DEFAULT_DB_PATH, op: Optional[str] = None) -> Dict[str, int]:
    """status -> number of rows, optionally for one op."""
    cur = get_db_connection(db_path).cursor()
    if op is None:
        cur.execute("SELECT status, COUNT(*) FROM runs GROUP BY status")
    else:
        cur.execute("SELECT status, COUNT(*) FROM runs WHERE op = ? GROUP BY status", (op,))
    return {status: n for status, n in cur.fetchall()}
