"""JSON (de)serialization for instances and schedules.

Document formats:

  homogeneous   {"alpha": 2.0, "processors": 1,
                 "jobs": [{"id": 1, "release": 0, "deadline": 3, "work": 2}]}
  heterogeneous "processors" is a list of {"id": "p1", "alpha": 2.0}; each job
                replaces "work" with "work_per_processor": {"p1": 1, "p2": 4}
                and may add "life_per_processor": {"p1": [0, 3]}.
  schedule      {"assignments": [{"job": 1, "processor": "p1",
                 "start": 0, "end": "3/2"}], "energy": 4.0}

Numbers follow the rationals module convention: ints stay ints, other exact
rationals serialize as "p/q"; floats are accepted on input via their decimal
repr.  parse and serialize are mutually inverse on canonical documents.
"""

from __future__ import annotations

import hashlib
import json
from typing import Union

from .errors import DomainError, ParseError
from .instances import (
    Assignment,
    HetJob,
    HetProcessor,
    HeterogeneousInstance,
    Instance,
    Job,
    Schedule,
)
from .rationals import fraction_to_json, to_fraction

AnyInstance = Union[Instance, HeterogeneousInstance]


def _require(doc: dict, key: str, path: str):
    if not isinstance(doc, dict):
        raise ParseError(path, f"expected an object, got {type(doc).__name__}")
    if key not in doc:
        raise ParseError(f"{path}.{key}" if path else key, "missing field")
    return doc[key]


def _parse_alpha(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(path, f"alpha must be a number, got {value!r}")
    alpha = float(value)
    if alpha <= 1:
        raise ParseError(path, f"alpha must exceed 1, got {alpha}")
    return alpha


def _parse_job(doc, idx: int) -> Job:
    path = f"jobs[{idx}]"
    jid = _require(doc, "id", path)
    if isinstance(jid, bool) or not isinstance(jid, int):
        raise ParseError(f"{path}.id", "job id must be an integer")
    release = to_fraction(_require(doc, "release", path), f"{path}.release")
    deadline = to_fraction(_require(doc, "deadline", path), f"{path}.deadline")
    work = to_fraction(_require(doc, "work", path), f"{path}.work")
    if release >= deadline:
        raise ParseError(f"{path}.release", f"release {release} must precede deadline {deadline}")
    if work <= 0:
        raise ParseError(f"{path}.work", f"work must be positive, got {work}")
    return Job(jid, release, deadline, work)


def _parse_het_job(doc, idx: int, proc_ids: set[str]) -> HetJob:
    path = f"jobs[{idx}]"
    jid = _require(doc, "id", path)
    if isinstance(jid, bool) or not isinstance(jid, int):
        raise ParseError(f"{path}.id", "job id must be an integer")
    release = to_fraction(_require(doc, "release", path), f"{path}.release")
    deadline = to_fraction(_require(doc, "deadline", path), f"{path}.deadline")
    if release >= deadline:
        raise ParseError(f"{path}.release", f"release {release} must precede deadline {deadline}")
    works_doc = _require(doc, "work_per_processor", path)
    if not isinstance(works_doc, dict) or not works_doc:
        raise ParseError(f"{path}.work_per_processor", "expected a non-empty object")
    works = {}
    for pid, w in sorted(works_doc.items()):
        if pid not in proc_ids:
            raise ParseError(f"{path}.work_per_processor.{pid}", "unknown processor id")
        wf = to_fraction(w, f"{path}.work_per_processor.{pid}")
        if wf <= 0:
            raise ParseError(f"{path}.work_per_processor.{pid}", f"work must be positive, got {wf}")
        works[pid] = wf
    lives = {}
    for pid, pair in sorted(doc.get("life_per_processor", {}).items()):
        lpath = f"{path}.life_per_processor.{pid}"
        if pid not in works:
            raise ParseError(lpath, "life given for a processor without a work entry")
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ParseError(lpath, "expected a [release, deadline] pair")
        r = to_fraction(pair[0], f"{lpath}[0]")
        d = to_fraction(pair[1], f"{lpath}[1]")
        if r >= d:
            raise ParseError(lpath, f"life interval [{r}, {d}] is empty")
        lives[pid] = (r, d)
    return HetJob(jid, release, deadline, works, lives)


def parse_instance(source: Union[str, dict]) -> AnyInstance:
    """Parse an instance document (JSON text or an already-decoded dict)."""
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError("<document>", f"invalid JSON: {exc}") from None
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ParseError("<document>", "expected a JSON object")

    alpha = _parse_alpha(_require(doc, "alpha", ""), "alpha")
    procs = _require(doc, "processors", "")
    jobs_doc = _require(doc, "jobs", "")
    if not isinstance(jobs_doc, list):
        raise ParseError("jobs", "expected a list")

    if isinstance(procs, bool):
        raise ParseError("processors", "expected an integer or a list")
    if isinstance(procs, int):
        if procs < 1:
            raise ParseError("processors", f"need at least one processor, got {procs}")
        jobs = tuple(_parse_job(j, i) for i, j in enumerate(jobs_doc))
        try:
            return Instance(alpha, procs, jobs)
        except DomainError as exc:
            raise ParseError("jobs", str(exc)) from None

    if isinstance(procs, list):
        processors = []
        for i, p in enumerate(procs):
            pid = _require(p, "id", f"processors[{i}]")
            if not isinstance(pid, str) or not pid:
                raise ParseError(f"processors[{i}].id", "processor id must be a non-empty string")
            p_alpha = _parse_alpha(p.get("alpha", alpha), f"processors[{i}].alpha")
            if p_alpha > alpha:
                raise ParseError(
                    f"processors[{i}].alpha",
                    f"processor alpha {p_alpha} exceeds the instance alpha {alpha}",
                )
            processors.append(HetProcessor(pid, p_alpha))
        proc_ids = {p.id for p in processors}
        if len(proc_ids) != len(processors):
            raise ParseError("processors", "processor ids must be unique")
        jobs = tuple(_parse_het_job(j, i, proc_ids) for i, j in enumerate(jobs_doc))
        try:
            return HeterogeneousInstance(alpha, tuple(processors), jobs)
        except DomainError as exc:
            raise ParseError("jobs", str(exc)) from None

    raise ParseError("processors", "expected an integer or a list")


def serialize_instance(instance: AnyInstance) -> dict:
    """Canonical document for an instance; inverse of parse_instance."""
    if isinstance(instance, Instance):
        return {
            "alpha": instance.alpha,
            "processors": instance.processors,
            "jobs": [
                {
                    "id": j.id,
                    "release": fraction_to_json(j.release),
                    "deadline": fraction_to_json(j.deadline),
                    "work": fraction_to_json(j.work),
                }
                for j in instance.jobs
            ],
        }
    doc = {
        "alpha": instance.alpha,
        "processors": [{"id": p.id, "alpha": p.alpha} for p in instance.processors],
        "jobs": [],
    }
    for j in instance.jobs:
        jdoc = {
            "id": j.id,
            "release": fraction_to_json(j.release),
            "deadline": fraction_to_json(j.deadline),
            "work_per_processor": {
                pid: fraction_to_json(w) for pid, w in sorted(j.work_per_processor.items())
            },
        }
        if j.life_per_processor:
            jdoc["life_per_processor"] = {
                pid: [fraction_to_json(r), fraction_to_json(d)]
                for pid, (r, d) in sorted(j.life_per_processor.items())
            }
        doc["jobs"].append(jdoc)
    return doc


def parse_schedule(source: Union[str, dict]) -> Schedule:
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError("<document>", f"invalid JSON: {exc}") from None
    else:
        doc = source
    entries = _require(doc, "assignments", "")
    if not isinstance(entries, list):
        raise ParseError("assignments", "expected a list")
    assignments = []
    for i, a in enumerate(entries):
        path = f"assignments[{i}]"
        jid = _require(a, "job", path)
        if isinstance(jid, bool) or not isinstance(jid, int):
            raise ParseError(f"{path}.job", "job id must be an integer")
        proc = a.get("processor")
        if proc is not None and not isinstance(proc, str):
            raise ParseError(f"{path}.processor", "processor must be a string or null")
        start = to_fraction(_require(a, "start", path), f"{path}.start")
        end = to_fraction(_require(a, "end", path), f"{path}.end")
        assignments.append(Assignment(jid, proc, start, end))
    return Schedule(tuple(assignments))


def serialize_schedule(schedule: Schedule, energy: float | None = None) -> dict:
    doc = {
        "assignments": [
            {
                "job": a.job,
                "processor": a.processor,
                "start": fraction_to_json(a.start),
                "end": fraction_to_json(a.end),
            }
            for a in schedule.assignments
        ]
    }
    if energy is not None:
        doc["energy"] = energy
    return doc


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def instance_digest(instance: AnyInstance) -> str:
    """Stable identifier of an instance: sha256 of its canonical document."""
    return hashlib.sha256(canonical_json(serialize_instance(instance)).encode()).hexdigest()
