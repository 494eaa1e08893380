#!/usr/bin/env python3
"""Batch sweeps over seeds, recorded in the run ledger.

Kinds:
  - witness: one row per seed; pass when the local-maximum configuration of
    that seed covers every ordered pair of Y^k, violation otherwise
  - glue: one row per pair of witness-shift samples; pass when both samples
    have X-apart 1's and share a 1, violation on an apartness failure,
    inconclusive when the window holds no common 1

Workers compute rows, a single writer process batches them into SQLite
(WAL mode), the same producer/consumer layout for every kind.
"""

import argparse
import hashlib
import os
import sqlite3
import time
from multiprocessing import Pool, Process, Queue
from queue import Empty
from typing import Optional, Tuple

from file_formats import Report, encode_report
from groups import ball
from parallel import resolve_workers
from random_field import RandomField, local_max_config
from run_config import RunConfig, RunConfigError, resolve_run_config
from run_store import RunRecord, init_db, write_batch
from shift_glue import check_ones_apart, default_window_radius, locate_common_one, sample_witness_shift_config
from witness_construct import WitnessParams, build_plan, sample_witness_config, uncovered_pairs

KINDS = ("witness", "glue")
OP_BY_KIND = {"witness": "witness-sample", "glue": "glue-sample"}


def item_digest(kind: str, cfg: RunConfig, seed: int) -> str:
    key = f"sweep/{kind}/{cfg.group}/x={cfg.x or cfg.x_radius}/k={cfg.k}/y1={cfg.y1_size}/seed={seed}"
    return hashlib.sha256(key.encode()).hexdigest()


def pair_seeds(seed: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    """Packing seeds of the two samples of pair `seed`."""
    return (4 * seed, 4 * seed + 1), (4 * seed + 2, 4 * seed + 3)


def _row(kind: str, cfg: RunConfig, seed: int, status: str, exit_code: int, fields: dict) -> tuple:
    report = encode_report(Report(OP_BY_KIND[kind], status, {k: str(v) for k, v in fields.items()}))
    return (item_digest(kind, cfg, seed), OP_BY_KIND[kind], cfg.group, seed, status, exit_code, report)


def witness_item(args) -> tuple:
    """Pool worker: coverage check of one seed."""
    cfg, plan, seed = args
    try:
        s = local_max_config(RandomField(seed, plan.params.backend), plan.X, plan.sample_window)
        missed = uncovered_pairs(s, plan, limit=1)
    except Exception as e:
        return _row("witness", cfg, seed, "error", 2, {"error": e})
    if missed:
        g, h = missed[0]
        return _row("witness", cfg, seed, "violation", 1, {"uncovered": f"{g.encode()}:{h.encode()}"})
    return _row("witness", cfg, seed, "pass", 0, {"ones": len(s.ones())})


def glue_item(args) -> tuple:
    """Pool worker: apartness and common-1 checks on one pair of samples."""
    cfg, plan, s, window, seed = args
    try:
        seeds1, seeds2 = pair_seeds(seed)
        t1 = sample_witness_shift_config(plan, s, seeds1, window)
        t2 = sample_witness_shift_config(plan, s, seeds2, window)
        violations = check_ones_apart(t1, plan.X) + check_ones_apart(t2, plan.X)
        if violations:
            a, b = violations[0]
            return _row("glue", cfg, seed, "violation", 1, {"apart_violation": f"{a.encode()}:{b.encode()}"})
        hit = locate_common_one(t1, t2, plan)
    except Exception as e:
        return _row("glue", cfg, seed, "error", 2, {"error": e})
    if not hit.found:
        return _row("glue", cfg, seed, "inconclusive", 3, {"searched": hit.searched})
    return _row("glue", cfg, seed, "pass", 0, {"common_one": hit.element.encode(), "path": hit.path})


def db_writer_process(queue: Queue, db_path: str, batch_size: int = 500):
    """Single writer: batches rows from the queue into the runs table."""
    conn = sqlite3.connect(db_path, timeout=300.0)
    conn.execute("PRAGMA journal_mode=WAL")
    conn.execute("PRAGMA synchronous=NORMAL")
    conn.execute("PRAGMA temp_store=MEMORY")

    batch = []
    total_written = 0
    while True:
        try:
            item = queue.get(timeout=1.0)
        except Empty:
            if batch:
                total_written += write_batch(conn, [RunRecord(*row) for row in batch])
                batch = []
            continue
        if item is None:
            if batch:
                total_written += write_batch(conn, [RunRecord(*row) for row in batch])
            break
        batch.append(item)
        if len(batch) >= batch_size:
            total_written += write_batch(conn, [RunRecord(*row) for row in batch])
            batch = []
    conn.close()
    print(f"  DB Writer finished: {total_written:,} rows written")


def populate_sweep(
    kind: str,
    cfg: RunConfig,
    start: int,
    end: int,
    num_workers: Optional[int] = None,
    batch_size: int = 500,
) -> dict:
    """Run seeds start..end (inclusive) and record one row per seed; returns status counts."""
    if kind not in KINDS:
        raise ValueError(f"Unknown sweep kind {kind!r}; expected one of {', '.join(KINDS)}")
    if end < start:
        raise ValueError(f"Empty seed range {start}..{end}")
    num_workers = resolve_workers(num_workers)

    plan = build_plan(WitnessParams(cfg.x_set(), cfg.k), cfg.y1_size, cfg.switch_radius)
    seeds = list(range(start, end + 1))
    if kind == "witness":
        worker = witness_item
        args_list = [(cfg, plan, seed) for seed in seeds]
    else:
        s = sample_witness_config(plan, cfg.seed, cfg.max_attempts, num_workers, allow_inadmissible=True)
        radius = default_window_radius(plan) if cfg.window_radius is None else cfg.window_radius
        window = ball(plan.params.backend, radius).elements
        worker = glue_item
        args_list = [(cfg, plan, s, window, seed) for seed in seeds]

    print(f"Sweep {kind} on {cfg.group}, seeds {start}..{end}")
    print(f"Using {num_workers} parallel workers, DB batch size: {batch_size}")

    init_db(cfg.db)
    queue = Queue(maxsize=10000)
    writer = Process(target=db_writer_process, args=(queue, cfg.db, batch_size))
    writer.start()

    total = len(args_list)
    processed = 0
    counts = {"pass": 0, "violation": 0, "inconclusive": 0, "error": 0}
    start_time = time.time()
    try:
        with Pool(processes=num_workers) as pool:
            chunk_size = max(num_workers * 4, min(batch_size, 200))
            for chunk_start in range(0, total, chunk_size):
                chunk_args = args_list[chunk_start:chunk_start + chunk_size]
                for row in pool.map(worker, chunk_args):
                    counts[row[4]] += 1
                    queue.put(row)
                processed += len(chunk_args)

                elapsed = time.time() - start_time
                rate = processed / elapsed if elapsed > 0 else 0
                pct = (processed / total) * 100
                eta = (total - processed) / rate if rate > 0 else 0
                print(f"  Progress: {processed:,}/{total:,} ({pct:.1f}%) | "
                      f"Rate: {rate:.1f}/sec | ETA: {eta/60:.1f} min | "
                      f"Violations: {counts['violation']} | Errors: {counts['error']}")
    finally:
        queue.put(None)
        writer.join()

    elapsed = time.time() - start_time
    print(f"Completed {kind} sweep: {processed:,} items in {elapsed/60:.1f} min")
    print("Summary:")
    for status, n in counts.items():
        print(f"  {status}: {n}")
    return counts


def main() -> None:
    parser = argparse.ArgumentParser(description="Seed sweeps recorded in the run ledger")
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--start", type=int, required=True, help="First seed (inclusive)")
    parser.add_argument("--end", type=int, required=True, help="Last seed (inclusive)")
    parser.add_argument("--config", type=str, default=None, help="KEY=VALUE config file")
    parser.add_argument("--group", type=str)
    parser.add_argument("--x-ball", dest="x_radius", type=int)
    parser.add_argument("--x", type=str)
    parser.add_argument("--k", type=int)
    parser.add_argument("--y1-size", type=int)
    parser.add_argument("--switch-radius", type=int)
    parser.add_argument("--window-radius", type=int)
    parser.add_argument("--seed", type=int, help="Seed of the witness configuration behind glue samples")
    parser.add_argument("--max-attempts", type=int)
    parser.add_argument("--workers", type=int, default=None, help="Number of parallel workers (default: CPU count - 1)")
    parser.add_argument("--batch-size", type=int, default=500, help="Batch size for DB writes (default: 500)")
    parser.add_argument("--db", type=str)
    args = parser.parse_args()

    flags = {
        key: getattr(args, key)
        for key in ("group", "x_radius", "x", "k", "y1_size", "switch_radius",
                    "window_radius", "seed", "max_attempts", "db")
    }
    flags["op"] = OP_BY_KIND[args.kind]
    try:
        cfg = resolve_run_config(flags, args.config, os.environ)
    except RunConfigError as e:
        raise SystemExit(str(e))
    workers = args.workers
    if workers is None and os.environ.get("PROXLAB_WORKERS"):
        workers = cfg.workers
    try:
        populate_sweep(args.kind, cfg, args.start, args.end, workers, args.batch_size)
    except ValueError as e:
        raise SystemExit(str(e))


if __name__ == "__main__":
    main()
