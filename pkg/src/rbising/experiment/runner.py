"""Task fan-out, JSONL persistence, resume and aggregation."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

from .config import ExperimentConfig
from .seeds import derive_seed

log = logging.getLogger(__name__)

RECORDS = "records.jsonl"
SUMMARY = "summary.csv"
REPORT = "report.json"


@dataclass(frozen=True)
class Task:
    index: int
    path: tuple
    payload: dict


@dataclass
class RunResult:
    records: list
    summary_rows: list
    report: dict
    checks: dict
    n_new: int
    failures: list

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and not self.failures


def _execute(kind: str, payload: dict, seed: int) -> dict:
    from .kinds import KINDS

    return KINDS[kind].run_task(payload, seed)


def _dumps(rec) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def read_records(path: Path, digest: str) -> dict:
    """Completed records for this config, keyed by task index; other digests are ignored."""
    done = {}
    if not path.exists():
        return done
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                # torn last line from an interrupted run
                continue
            if rec.get("digest") == digest and "error" not in rec:
                done[int(rec["task"])] = rec
    return done


def _record(cfg, task, seed, result):
    return {"digest": cfg.digest(), "kind": cfg.kind, "task": task.index, "path": list(task.path), "seed": seed, **result}


def run(cfg: ExperimentConfig, progress=None) -> RunResult:
    """Run every missing task of ``cfg`` and rewrite its outputs in task order."""
    from .kinds import KINDS

    entry = KINDS[cfg.kind]
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rec_path = outdir / RECORDS
    tasks = entry.tasks(cfg.params, cfg.master_seed)
    done = read_records(rec_path, cfg.digest())
    todo = [t for t in tasks if t.index not in done]
    seeds = {t.index: derive_seed(cfg.master_seed, list(t.path)) for t in todo}
    failures = []
    with open(rec_path, "a") as sink:

        def accept(task, result):
            rec = _record(cfg, task, seeds[task.index], result)
            sink.write(_dumps(rec) + "\n")
            sink.flush()
            done[task.index] = rec
            if progress:
                progress(len(done), len(tasks))

        def fail(task, exc):
            log.error("task %s failed: %s", task.index, exc)
            failures.append({"task": task.index, "error": repr(exc)})

        if cfg.workers == 1 or len(todo) <= 1:
            for t in todo:
                try:
                    accept(t, _execute(cfg.kind, t.payload, seeds[t.index]))
                except Exception as exc:  # reported per task
                    fail(t, exc)
        else:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                futs = {pool.submit(_execute, cfg.kind, t.payload, seeds[t.index]): t for t in todo}
                for fut in as_completed(futs):
                    t = futs[fut]
                    try:
                        accept(t, fut.result())
                    except Exception as exc:
                        fail(t, exc)
    records = [done[t.index] for t in tasks if t.index in done]
    _rewrite(rec_path, records)
    if failures:
        return RunResult(records, [], {}, {}, len(todo) - len(failures), failures)
    rows, report, checks = entry.aggregate(cfg.params, records)
    write_csv(outdir / SUMMARY, rows)
    report = {"kind": cfg.kind, "digest": cfg.digest(), "master_seed": cfg.master_seed, **report, "checks": checks}
    tmp = outdir / (REPORT + ".tmp")
    tmp.write_text(json.dumps(report, sort_keys=True, indent=1) + "\n")
    os.replace(tmp, outdir / REPORT)
    (outdir / "config.ini").write_text(cfg.to_ini())
    return RunResult(records, rows, report, checks, len(todo), failures)


def _rewrite(path: Path, records):
    tmp = path.with_suffix(".jsonl.tmp")
    with open(tmp, "w") as fh:
        for rec in records:
            fh.write(_dumps(rec) + "\n")
    os.replace(tmp, path)


def write_csv(path: Path, rows):
    if not rows:
        Path(path).write_text("")
        return
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: _fmt(v) for k, v in r.items()})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return v
