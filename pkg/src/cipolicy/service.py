"""Self-hosted annotation collection service.

Serves instructions, screening questions, and work excerpts; accepts span
submissions; screens workers automatically after the third screening
answer; persists everything to an append-only JSON-lines log (fsynced per
write) with an in-memory index rebuilt on startup; exports experiment
bundles in the format consumed by `ci replay`.
"""

from __future__ import annotations

import json
import os
import random
import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .annotation_io import annotation_to_obj
from .bundle import ExperimentBundle, excerpt_from_obj, excerpt_to_obj
from .crowd import AnnotationSet, Excerpt, ScreeningRule, screen_worker
from .model import CiError, ParameterKind, Span, SpanError

SESSION_STATES = ("consented", "screening", "failed_screening", "working", "done")


class ServiceError(CiError):
    def __init__(self, status: int, code: str, message: str, detail=None):
        self.status = status
        self.code = code
        self.detail = detail
        super().__init__(message)

    def to_response(self) -> JSONResponse:
        return JSONResponse(
            status_code=self.status,
            content={"code": self.code, "message": str(self), "detail": self.detail},
        )


@dataclass
class TaskDefinition:
    task_id: str
    instructions_text: str
    excerpts: list[Excerpt]  # screening excerpts carry gold
    screening_ids: list[str]  # exactly 3, ordered
    work_ids: list[str]
    excerpts_per_worker: int = 5
    kinds: list[ParameterKind] = field(
        default_factory=lambda: [
            ParameterKind.SENDER,
            ParameterKind.RECIPIENT,
            ParameterKind.ATTRIBUTE,
            ParameterKind.TRANSMISSION_PRINCIPLE,
        ]
    )
    rule: ScreeningRule = field(default_factory=ScreeningRule)
    seed: int = 0
    show_hints: bool = False

    def __post_init__(self):
        by_id = {e.excerpt_id: e for e in self.excerpts}
        if len(self.screening_ids) != 3:
            raise ServiceError(422, "bad_task", "exactly 3 screening excerpts required")
        for eid in self.screening_ids + self.work_ids:
            if eid not in by_id:
                raise ServiceError(422, "bad_task", f"unknown excerpt id {eid!r}")
        for eid in self.screening_ids:
            if by_id[eid].gold is None:
                raise ServiceError(422, "bad_task", f"screening excerpt {eid!r} lacks gold")
        if self.excerpts_per_worker > len(self.work_ids):
            raise ServiceError(
                422, "bad_task",
                "excerpts_per_worker exceeds the number of work excerpts",
            )

    def excerpt(self, eid: str) -> Excerpt:
        for e in self.excerpts:
            if e.excerpt_id == eid:
                return e
        raise ServiceError(404, "not_found", f"unknown excerpt {eid!r}")


@dataclass
class Session:
    token: str
    annotator_id: str
    task_id: str
    state: str = "consented"
    assigned: list[str] = field(default_factory=list)
    submissions: dict[str, AnnotationSet] = field(default_factory=dict)

    def advance(self, new_state: str):
        if SESSION_STATES.index(new_state) < SESSION_STATES.index(self.state):
            raise ServiceError(409, "state_violation",
                               f"cannot move from {self.state} to {new_state}")
        self.state = new_state


class RecordLog:
    """Append-only JSON-lines persistence, one record per line, fsynced."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with self._lock:
            self._fh.write(line)
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def replay(self):
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def close(self):
        self._fh.close()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class AnnotationService:
    """In-memory index over the record log; all mutations are serialized
    by a single lock and appended to the log before being acknowledged."""

    def __init__(self, store_path: str | Path):
        self.log = RecordLog(store_path)
        self.lock = threading.RLock()
        self.tasks: dict[str, TaskDefinition] = {}
        self.sessions: dict[str, Session] = {}
        self._rngs: dict[str, random.Random] = {}
        self._session_count = 0
        for record in self.log.replay():
            self._apply(record)

    # -- record application (shared by live calls and startup rebuild) -----

    def _apply(self, record: dict) -> None:
        kind = record["type"]
        if kind == "task":
            task = _task_from_obj(record["task"])
            self.tasks[task.task_id] = task
            self._rngs[task.task_id] = random.Random(task.seed)
        elif kind == "session":
            session = Session(record["token"], record["annotator_id"], record["task_id"])
            session.state = "consented"
            self.sessions[record["token"]] = session
            self._session_count += 1
        elif kind == "state":
            self.sessions[record["token"]].state = record["state"]
        elif kind == "assignment":
            self.sessions[record["token"]].assigned = list(record["excerpt_ids"])
        elif kind == "submission":
            session = self.sessions[record["token"]]
            spans = tuple(
                Span(s["start"], s["end"], ParameterKind.from_label(s["kind"]))
                for s in record["spans"]
            )
            session.submissions[record["excerpt_id"]] = AnnotationSet(
                session.annotator_id, record["excerpt_id"], spans, record["submitted_at"]
            )
        else:
            raise CiError(f"unknown record type {kind!r}")

    def _append(self, record: dict) -> None:
        self.log.append(record)
        self._apply(record)

    # -- operations ---------------------------------------------------------

    def create_task(self, definition_obj: dict) -> str:
        with self.lock:
            task = _task_from_obj(definition_obj)
            if task.task_id in self.tasks:
                raise ServiceError(409, "conflict", f"task {task.task_id!r} already exists")
            self._append({"type": "task", "task": _task_to_obj(task)})
            return task.task_id

    def open_session(self, task_id: str, consent: bool) -> Session:
        with self.lock:
            if task_id not in self.tasks:
                raise ServiceError(404, "not_found", f"unknown task {task_id!r}")
            if not consent:
                raise ServiceError(403, "consent_required",
                                   "cannot open a session without consent")
            token = secrets.token_urlsafe(24)
            annotator_id = f"w{self._session_count + 1:03d}"
            self._append({"type": "session", "token": token,
                          "annotator_id": annotator_id, "task_id": task_id})
            self._append({"type": "state", "token": token, "state": "screening"})
            return self.sessions[token]

    def _session(self, token: str) -> Session:
        session = self.sessions.get(token)
        if session is None:
            raise ServiceError(401, "unknown_token", "unknown session token")
        return session

    def next_item(self, token: str) -> dict:
        with self.lock:
            session = self._session(token)
            task = self.tasks[session.task_id]
            if session.state == "failed_screening":
                raise ServiceError(409, "screening_failed",
                                   "session did not pass screening")
            if session.state == "done":
                return {"done": True, "progress": self._progress(session, task)}
            pending = self._pending(session, task)
            if not pending:
                return {"done": True, "progress": self._progress(session, task)}
            eid = pending[0]
            excerpt = task.excerpt(eid)
            item = {
                "excerpt_id": eid,
                "text": excerpt.text,
                "kinds": [k.value for k in task.kinds],
                "is_screening": excerpt.is_screening,
                "instructions": task.instructions_text,
                "progress": self._progress(session, task),
            }
            if task.show_hints and not excerpt.is_screening:
                hints = self._hints(task, eid)
                if hints:
                    item["hints"] = hints
            return item

    def _pending(self, session: Session, task: TaskDefinition) -> list[str]:
        todo = [eid for eid in task.screening_ids if eid not in session.submissions]
        if todo:
            return todo
        return [eid for eid in session.assigned if eid not in session.submissions]

    def _progress(self, session: Session, task: TaskDefinition) -> dict:
        total = len(task.screening_ids) + (
            len(session.assigned) if session.assigned else task.excerpts_per_worker
        )
        return {"completed": len(session.submissions), "total": total}

    def _hints(self, task: TaskDefinition, eid: str) -> dict | None:
        counts: dict[str, list[int]] = {}
        for other in self.sessions.values():
            if other.task_id != task.task_id or other.state not in ("working", "done"):
                continue
            ann = other.submissions.get(eid)
            if ann is None:
                continue
            per_kind: dict[str, int] = {}
            for span in ann.spans:
                per_kind[span.kind.value] = per_kind.get(span.kind.value, 0) + 1
            for kind in task.kinds:
                counts.setdefault(kind.value, []).append(per_kind.get(kind.value, 0))
        if not counts:
            return None
        return {kind: [min(v), max(v)] for kind, v in sorted(counts.items())}

    def submit(self, token: str, excerpt_id: str, spans_obj: list[dict]) -> dict:
        with self.lock:
            session = self._session(token)
            task = self.tasks[session.task_id]
            if session.state in ("failed_screening", "done"):
                raise ServiceError(409, "state_violation",
                                   f"cannot submit in state {session.state}")
            if excerpt_id in session.submissions:
                raise ServiceError(409, "duplicate_submission",
                                   f"excerpt {excerpt_id!r} already annotated")
            pending = self._pending(session, task)
            if excerpt_id not in pending:
                raise ServiceError(409, "state_violation",
                                   f"excerpt {excerpt_id!r} is not the pending item")
            excerpt = task.excerpt(excerpt_id)
            spans = self._validate_spans(spans_obj, excerpt, task)
            self._append({
                "type": "submission",
                "token": token,
                "excerpt_id": excerpt_id,
                "spans": [{"start": s.start, "end": s.end, "kind": s.kind.value} for s in spans],
                "submitted_at": _now(),
            })

            if excerpt.is_screening:
                remaining = [e for e in task.screening_ids if e not in session.submissions]
                if not remaining:
                    return self._evaluate_screening(session, task)
                return {"status": "accepted", "state": session.state}

            if all(eid in session.submissions for eid in session.assigned):
                self._append({"type": "state", "token": token, "state": "done"})
            return {"status": "accepted", "state": session.state}

    def _validate_spans(self, spans_obj, excerpt: Excerpt, task: TaskDefinition):
        allowed = set(task.kinds)
        spans = []
        bad = []
        for obj in spans_obj:
            try:
                kind = ParameterKind.from_label(obj["kind"])
                span = Span(int(obj["start"]), int(obj["end"]), kind)
                if span.end > len(excerpt.text):
                    raise SpanError("span out of bounds")
                if kind not in allowed:
                    raise SpanError(f"kind {kind.value!r} not enabled for this task")
                spans.append(span)
            except (KeyError, TypeError, ValueError, CiError) as exc:
                bad.append({"span": obj, "error": str(exc)})
        if bad:
            raise ServiceError(422, "invalid_spans", "malformed spans", detail=bad)
        try:
            AnnotationSet("check", excerpt.excerpt_id, tuple(spans))
        except SpanError as exc:
            raise ServiceError(422, "invalid_spans", str(exc)) from exc
        return sorted(spans, key=lambda s: s.start)

    def _evaluate_screening(self, session: Session, task: TaskDefinition) -> dict:
        responses = [session.submissions[eid] for eid in task.screening_ids]
        excerpts = [task.excerpt(eid) for eid in task.screening_ids]
        outcome = screen_worker(responses, excerpts, task.rule)
        if not outcome.passed:
            self._append({"type": "state", "token": session.token,
                          "state": "failed_screening"})
            return {"status": "screening_failed", "state": "failed_screening",
                    "micro_f1": list(outcome.micro_f1)}
        self._append({"type": "state", "token": session.token, "state": "working"})
        self._assign(session, task)
        return {"status": "accepted", "state": "working",
                "micro_f1": list(outcome.micro_f1)}

    def _assign(self, session: Session, task: TaskDefinition) -> None:
        # Least-annotated-first over submissions from passing sessions,
        # random tie-break from the task-seeded RNG.
        counts = {eid: 0 for eid in task.work_ids}
        for other in self.sessions.values():
            if other.task_id != task.task_id or other.state not in ("working", "done"):
                continue
            for eid in other.assigned:
                if eid in counts:
                    counts[eid] += 1
        rng = self._rngs[task.task_id]
        order = sorted(task.work_ids, key=lambda eid: (counts[eid], rng.random()))
        chosen = order[: task.excerpts_per_worker]
        self._append({"type": "assignment", "token": session.token,
                      "excerpt_ids": chosen})

    def export_bundle_data(self, task_id: str) -> ExperimentBundle:
        """Screening responses from every session; work responses only
        from sessions that passed screening."""
        with self.lock:
            if task_id not in self.tasks:
                raise ServiceError(404, "not_found", f"unknown task {task_id!r}")
            task = self.tasks[task_id]
            screening = set(task.screening_ids)
            responses: dict[str, list[AnnotationSet]] = {
                e.excerpt_id: [] for e in task.excerpts
            }
            for session in self.sessions.values():
                if session.task_id != task_id:
                    continue
                passed = session.state in ("working", "done")
                for eid, ann in session.submissions.items():
                    if eid in screening or passed:
                        responses[eid].append(ann)
            return ExperimentBundle(
                tuple(task.excerpts),
                {eid: tuple(sorted(anns, key=lambda a: a.annotator_id))
                 for eid, anns in responses.items()},
            )

    def export_obj(self, task_id: str) -> dict:
        bundle = self.export_bundle_data(task_id)
        with self.lock:
            task = self.tasks[task_id]
            session_flags = [
                {"annotator_id": s.annotator_id, "state": s.state}
                for s in sorted(self.sessions.values(), key=lambda s: s.annotator_id)
                if s.task_id == task_id
            ]
        return {
            "task_id": task_id,
            "excerpts": [excerpt_to_obj(e) for e in bundle.excerpts],
            "gold": {
                e.excerpt_id: annotation_to_obj(e.gold)
                for e in bundle.excerpts
                if e.gold is not None
            },
            "responses": [
                annotation_to_obj(ann)
                for eid in sorted(bundle.responses)
                for ann in bundle.responses[eid]
            ],
            "sessions": session_flags,
        }


def _task_to_obj(task: TaskDefinition) -> dict:
    excerpts = []
    for e in task.excerpts:
        obj = excerpt_to_obj(e)
        if e.gold is not None:
            obj["gold"] = annotation_to_obj(e.gold)
        excerpts.append(obj)
    return {
        "task_id": task.task_id,
        "instructions_text": task.instructions_text,
        "excerpts": excerpts,
        "screening_ids": task.screening_ids,
        "work_ids": task.work_ids,
        "excerpts_per_worker": task.excerpts_per_worker,
        "kinds": [k.value for k in task.kinds],
        "f1_threshold": task.rule.f1_threshold,
        "seed": task.seed,
        "show_hints": task.show_hints,
    }


def _task_from_obj(obj: dict) -> TaskDefinition:
    from .annotation_io import annotation_from_obj

    try:
        excerpts = []
        for eobj in obj["excerpts"]:
            gold = None
            if eobj.get("gold") is not None:
                gold = annotation_from_obj(eobj["gold"])
            excerpts.append(excerpt_from_obj(eobj, gold))
        return TaskDefinition(
            task_id=obj["task_id"],
            instructions_text=obj.get("instructions_text", ""),
            excerpts=excerpts,
            screening_ids=list(obj["screening_ids"]),
            work_ids=list(obj["work_ids"]),
            excerpts_per_worker=int(obj.get("excerpts_per_worker", 5)),
            kinds=[ParameterKind.from_label(k) for k in obj.get(
                "kinds", ["sender", "recipient", "attribute", "tp"])],
            rule=ScreeningRule(float(obj.get("f1_threshold", 0.7))),
            seed=int(obj.get("seed", 0)),
            show_hints=bool(obj.get("show_hints", False)),
        )
    except ServiceError:
        raise
    except (KeyError, TypeError, ValueError, CiError) as exc:
        raise ServiceError(422, "bad_task", f"invalid task definition: {exc}") from exc


def create_app(store_path: str | Path) -> FastAPI:
    service = AnnotationService(store_path)
    app = FastAPI(title="CI annotation service")
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return exc.to_response()

    @app.post("/tasks")
    async def create_task(request: Request):
        body = await request.json()
        task_id = service.create_task(body)
        return {"task_id": task_id}

    @app.post("/tasks/{task_id}/sessions")
    async def open_session(task_id: str, request: Request):
        body = await request.json()
        session = service.open_session(task_id, bool(body.get("consent", False)))
        return {"session_token": session.token, "state": session.state}

    @app.get("/sessions/{token}/next")
    async def next_item(token: str):
        return service.next_item(token)

    @app.post("/sessions/{token}/submit")
    async def submit(token: str, request: Request):
        body = await request.json()
        if "excerpt_id" not in body or "spans" not in body:
            raise ServiceError(422, "invalid_request",
                               "body must contain excerpt_id and spans")
        return service.submit(token, body["excerpt_id"], body["spans"])

    @app.get("/tasks/{task_id}/export")
    async def export(task_id: str):
        return service.export_obj(task_id)

    return app
