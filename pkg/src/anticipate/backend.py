"""Model-inference wire protocol, live clients, and the scripted mock.

Wire format: one JSON value per line, UTF-8, terminated by a single
newline, no pretty-printing, object keys sorted, floats as Python repr
(shortest round-trip decimal).  Requests are {"id": int, "kind": str,
...}; responses are {"id": int, "ok": true, ...payload} or {"id": int,
"ok": false, "error": {"code": str, "message": str}}.  Frames above 16
MiB are rejected in both directions.

Request kinds and payload fields:

    recognize  video_id, window_start, n
               -> verb_dists (n x |verbs|), noun_dists (n x |nouns|)
    caption    video_id, timestamp_s, conditional_text -> caption
    complete   prompt_text, max_output_tokens, sampling_seed -> completion
    embed      text -> embedding

A fixture file is a JSON array of {"request": <request sans id>,
"response": <payload or {"error": ...}>} records.  The mock looks up the
canonical serialization of the incoming request; "complete" requests may
alternatively be recorded under {"kind", "max_output_tokens",
"prompt_sha256", "sampling_seed"} so bulky prompts need not be stored.

Transport failures never lose their position in a batch: dispatch always
returns one response per request, using error codes "TIMEOUT" and
"TRANSPORT_CLOSED" for requests the backend did not answer.
"""

from __future__ import annotations

import hashlib
import json
import queue
import shlex
import socket
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Mapping, Sequence, Union

from .errors import (
    BackendError,
    ConfigError,
    FixtureMissError,
    FrameTooLargeError,
    MalformedFileError,
    MalformedMessageError,
    TransportClosedError,
    UnknownKindError,
)
from .errors import TimeoutError as RequestTimeoutError
from .recognition import WindowDistributions, validate_distribution

MAX_FRAME_BYTES = 16 * 1024 * 1024
TIMEOUT_CODE = "TIMEOUT"
CLOSED_CODE = "TRANSPORT_CLOSED"
FIXTURE_MISS_CODE = "FIXTURE_MISS"
DEFAULT_TIMEOUT_S = 60.0


def canonical_json(obj) -> str:
    """Compact JSON with sorted keys; the wire and fixture-key encoding."""
    try:
        return json.dumps(
            obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False,
            allow_nan=False,
        )
    except (TypeError, ValueError) as exc:
        raise MalformedMessageError(f"cannot serialize message: {exc}") from exc


def _require(fields: Mapping, name: str, types, where: str):
    if name not in fields:
        raise MalformedMessageError(f"{where}: missing field {name!r}")
    value = fields[name]
    if isinstance(value, bool) or not isinstance(value, types):
        raise MalformedMessageError(
            f"{where}: field {name!r} has type {type(value).__name__}"
        )
    return value


@dataclass(frozen=True)
class RecognizeRequest:
    video_id: str
    window_start: int
    n: int

    kind = "recognize"

    def payload(self) -> dict:
        return {
            "kind": self.kind,
            "video_id": self.video_id,
            "window_start": self.window_start,
            "n": self.n,
        }

    @classmethod
    def from_fields(cls, fields: Mapping) -> "RecognizeRequest":
        return cls(
            video_id=_require(fields, "video_id", str, cls.kind),
            window_start=_require(fields, "window_start", int, cls.kind),
            n=_require(fields, "n", int, cls.kind),
        )


@dataclass(frozen=True)
class CaptionRequest:
    video_id: str
    timestamp_s: float
    conditional_text: str

    kind = "caption"

    def payload(self) -> dict:
        return {
            "kind": self.kind,
            "video_id": self.video_id,
            "timestamp_s": float(self.timestamp_s),
            "conditional_text": self.conditional_text,
        }

    @classmethod
    def from_fields(cls, fields: Mapping) -> "CaptionRequest":
        return cls(
            video_id=_require(fields, "video_id", str, cls.kind),
            timestamp_s=float(
                _require(fields, "timestamp_s", (int, float), cls.kind)
            ),
            conditional_text=_require(fields, "conditional_text", str, cls.kind),
        )


@dataclass(frozen=True)
class CompleteRequest:
    prompt_text: str
    max_output_tokens: int
    sampling_seed: int

    kind = "complete"

    def payload(self) -> dict:
        return {
            "kind": self.kind,
            "prompt_text": self.prompt_text,
            "max_output_tokens": self.max_output_tokens,
            "sampling_seed": self.sampling_seed,
        }

    @classmethod
    def from_fields(cls, fields: Mapping) -> "CompleteRequest":
        return cls(
            prompt_text=_require(fields, "prompt_text", str, cls.kind),
            max_output_tokens=_require(
                fields, "max_output_tokens", int, cls.kind
            ),
            sampling_seed=_require(fields, "sampling_seed", int, cls.kind),
        )


@dataclass(frozen=True)
class EmbedRequest:
    text: str

    kind = "embed"

    def payload(self) -> dict:
        return {"kind": self.kind, "text": self.text}

    @classmethod
    def from_fields(cls, fields: Mapping) -> "EmbedRequest":
        return cls(text=_require(fields, "text", str, cls.kind))


AnyRequest = Union[RecognizeRequest, CaptionRequest, CompleteRequest, EmbedRequest]

_REQUEST_KINDS = {
    cls.kind: cls
    for cls in (RecognizeRequest, CaptionRequest, CompleteRequest, EmbedRequest)
}


@dataclass(frozen=True)
class IncomingRequest:
    """A request as seen by a server: wire id plus the typed request."""

    request_id: int
    request: AnyRequest


@dataclass(frozen=True)
class BackendResponse:
    request_id: int
    ok: bool
    payload: dict | None = None
    error_code: str | None = None
    error_message: str | None = None

    def raise_on_error(self) -> "BackendResponse":
        if self.ok:
            return self
        if self.error_code == TIMEOUT_CODE:
            raise RequestTimeoutError(self.error_message or "request timed out")
        if self.error_code == CLOSED_CODE:
            raise TransportClosedError(
                self.error_message or "backend connection closed"
            )
        raise BackendError(self.error_code or "UNKNOWN", self.error_message or "")

    def wire_payload(self) -> dict:
        """The fixture-file form: payload dict or {"error": {...}}."""
        if self.ok:
            return dict(self.payload or {})
        return {
            "error": {
                "code": self.error_code or "UNKNOWN",
                "message": self.error_message or "",
            }
        }


def error_response(request_id: int, code: str, message: str) -> BackendResponse:
    return BackendResponse(
        request_id, ok=False, error_code=code, error_message=message
    )


def frame_message(obj: Mapping) -> bytes:
    """Encode one wire message; rejects oversized frames."""
    data = (canonical_json(obj) + "\n").encode("utf-8")
    if len(data) > MAX_FRAME_BYTES:
        raise FrameTooLargeError(
            f"frame of {len(data)} bytes exceeds {MAX_FRAME_BYTES}"
        )
    return data


def frame_request(request: AnyRequest, request_id: int) -> bytes:
    return frame_message({"id": request_id, **request.payload()})


def frame_response(response: BackendResponse) -> bytes:
    body: dict = {"id": response.request_id, "ok": response.ok}
    body.update(response.wire_payload())
    return frame_message(body)


def parse_message(line: bytes | str) -> IncomingRequest | BackendResponse:
    """Decode one wire line into a typed request or a response.

    Unknown fields are ignored on requests; unknown kinds are rejected.
    """
    if isinstance(line, str):
        line = line.encode("utf-8")
    if len(line) > MAX_FRAME_BYTES:
        raise FrameTooLargeError(
            f"frame of {len(line)} bytes exceeds {MAX_FRAME_BYTES}"
        )
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedMessageError(f"cannot parse frame: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedMessageError("frame is not an object")
    request_id = _require(obj, "id", int, "frame")
    if "ok" in obj:
        ok = obj["ok"]
        if not isinstance(ok, bool):
            raise MalformedMessageError("response field 'ok' must be a bool")
        if ok:
            payload = {k: v for k, v in obj.items() if k not in ("id", "ok")}
            return BackendResponse(request_id, ok=True, payload=payload)
        error = obj.get("error")
        if not isinstance(error, dict):
            raise MalformedMessageError("error response lacks an error object")
        code = error.get("code")
        message = error.get("message")
        if not isinstance(code, str) or not isinstance(message, str):
            raise MalformedMessageError("error object needs string code/message")
        return error_response(request_id, code, message)
    if "kind" in obj:
        kind = obj["kind"]
        if not isinstance(kind, str) or kind not in _REQUEST_KINDS:
            raise UnknownKindError(f"unknown request kind {kind!r}")
        request = _REQUEST_KINDS[kind].from_fields(obj)
        return IncomingRequest(request_id, request)
    raise MalformedMessageError("frame is neither a request nor a response")


def fixture_key(request: AnyRequest) -> str:
    """Canonical lookup key: the request payload without its wire id."""
    return canonical_json(request.payload())


def complete_digest_key(request: CompleteRequest) -> str:
    """Alternative key for completions: prompt stored as a SHA-256 digest."""
    digest = hashlib.sha256(request.prompt_text.encode("utf-8")).hexdigest()
    return canonical_json(
        {
            "kind": request.kind,
            "max_output_tokens": request.max_output_tokens,
            "prompt_sha256": digest,
            "sampling_seed": request.sampling_seed,
        }
    )


def _payload_to_response(request_id: int, payload: Mapping) -> BackendResponse:
    if "error" in payload:
        error = payload["error"]
        if (
            not isinstance(error, dict)
            or not isinstance(error.get("code"), str)
            or not isinstance(error.get("message"), str)
        ):
            raise MalformedFileError("fixture error object needs code/message")
        return error_response(request_id, error["code"], error["message"])
    return BackendResponse(request_id, ok=True, payload=dict(payload))


class Backend:
    """Ordered, blocking batch interface over some answering party.

    Batches are serialized with a lock so worker threads can share one
    backend; within a batch, responses may arrive out of order.
    """

    def __init__(self) -> None:
        self._next_id = 0
        self._lock = threading.Lock()

    def _assign_id(self) -> int:
        request_id = self._next_id
        self._next_id += 1
        return request_id

    def dispatch(self, requests: Sequence[AnyRequest]) -> list[BackendResponse]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self) -> "Backend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class MockBackend(Backend):
    """Deterministic scripted backend answering from a fixture table."""

    def __init__(self, table: Mapping[str, Mapping]) -> None:
        super().__init__()
        self._table = dict(table)

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBackend":
        try:
            records = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedFileError(f"cannot read fixture {path}: {exc}") from exc
        if not isinstance(records, list):
            raise MalformedFileError(f"fixture {path} must be an array")
        table: dict[str, Mapping] = {}
        for record in records:
            if (
                not isinstance(record, dict)
                or not isinstance(record.get("request"), dict)
                or not isinstance(record.get("response"), dict)
            ):
                raise MalformedFileError(
                    f"fixture {path}: each record needs request and response "
                    f"objects"
                )
            key = canonical_json(record["request"])
            table.setdefault(key, record["response"])
        return cls(table)

    def lookup(self, request: AnyRequest) -> Mapping:
        """The recorded response payload; misses name the canonical key."""
        key = fixture_key(request)
        if key in self._table:
            return self._table[key]
        if isinstance(request, CompleteRequest):
            alt = complete_digest_key(request)
            if alt in self._table:
                return self._table[alt]
        raise FixtureMissError(f"no fixture for request {key}")

    def dispatch(self, requests: Sequence[AnyRequest]) -> list[BackendResponse]:
        with self._lock:
            responses = []
            for request in requests:
                request_id = self._assign_id()
                frame_request(request, request_id)  # enforce the frame cap
                responses.append(
                    _payload_to_response(request_id, self.lookup(request))
                )
            return responses


class RecordingBackend(Backend):
    """Wraps a backend and captures traffic in the fixture-file format."""

    def __init__(self, inner: Backend) -> None:
        super().__init__()
        self._inner = inner
        self._records: list[dict] = []
        self._seen: set[str] = set()

    def dispatch(self, requests: Sequence[AnyRequest]) -> list[BackendResponse]:
        responses = self._inner.dispatch(requests)
        with self._lock:
            for request, response in zip(requests, responses):
                key = fixture_key(request)
                if key not in self._seen:
                    self._seen.add(key)
                    self._records.append(
                        {
                            "request": request.payload(),
                            "response": response.wire_payload(),
                        }
                    )
        return responses

    def save(self, path: str | Path) -> None:
        text = json.dumps(
            self._records, indent=1, sort_keys=True, ensure_ascii=False
        )
        Path(path).write_text(text + "\n", encoding="utf-8")

    def close(self) -> None:
        self._inner.close()


class _StreamBackend(Backend):
    """Shared line-stream client: a writer plus a reader thread."""

    def __init__(self, timeout_s: float) -> None:
        super().__init__()
        self._timeout_s = timeout_s
        self._queue: queue.Queue = queue.Queue()
        self._abandoned: set[int] = set()
        self._reader_thread: threading.Thread | None = None

    def _start_reader(self, stream: BinaryIO) -> None:
        def loop() -> None:
            while True:
                try:
                    line = stream.readline(MAX_FRAME_BYTES + 2)
                except (OSError, ValueError):
                    self._queue.put(("eof", None))
                    return
                if not line:
                    self._queue.put(("eof", None))
                    return
                self._queue.put(("line", line))

        self._reader_thread = threading.Thread(target=loop, daemon=True)
        self._reader_thread.start()

    def _write_frame(self, data: bytes) -> None:
        raise NotImplementedError

    def dispatch(self, requests: Sequence[AnyRequest]) -> list[BackendResponse]:
        with self._lock:
            return self._dispatch_locked(requests)

    def _dispatch_locked(
        self, requests: Sequence[AnyRequest]
    ) -> list[BackendResponse]:
        ids = [self._assign_id() for _ in requests]
        by_id: dict[int, BackendResponse] = {}
        try:
            for request_id, request in zip(ids, requests):
                self._write_frame(frame_request(request, request_id))
        except (OSError, BrokenPipeError):
            pass  # unanswered ids surface as TRANSPORT_CLOSED below
        deadline = time.monotonic() + self._timeout_s
        pending = set(ids)
        closed = False
        while pending and not closed:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                tag, value = self._queue.get(timeout=remaining)
            except queue.Empty:
                break
            if tag == "eof":
                closed = True
                break
            if len(value) > MAX_FRAME_BYTES or not value.endswith(b"\n"):
                raise FrameTooLargeError(
                    f"backend sent a frame over {MAX_FRAME_BYTES} bytes"
                )
            message = parse_message(value)
            if not isinstance(message, BackendResponse):
                raise MalformedMessageError("backend sent a request frame")
            if message.request_id in pending:
                pending.discard(message.request_id)
                by_id[message.request_id] = message
            elif message.request_id in self._abandoned:
                self._abandoned.discard(message.request_id)
            else:
                raise MalformedMessageError(
                    f"response for unknown request id {message.request_id}"
                )
        for request_id in pending:
            self._abandoned.add(request_id)
            code = CLOSED_CODE if closed else TIMEOUT_CODE
            reason = (
                "backend connection closed"
                if closed
                else f"no response within {self._timeout_s}s"
            )
            by_id[request_id] = error_response(request_id, code, reason)
        return [by_id[request_id] for request_id in ids]


class ProcessBackend(_StreamBackend):
    """Child process answering over its stdio."""

    def __init__(self, command: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> None:
        super().__init__(timeout_s)
        argv = shlex.split(command)
        if not argv:
            raise ConfigError("exec backend needs a command")
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise TransportClosedError(
                f"cannot start backend {argv[0]!r}: {exc}"
            ) from exc
        self._start_reader(self._proc.stdout)

    def _write_frame(self, data: bytes) -> None:
        self._proc.stdin.write(data)
        self._proc.stdin.flush()

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class TcpBackend(_StreamBackend):
    """Remote server answering over one TCP connection."""

    def __init__(
        self, host: str, port: int, timeout_s: float = DEFAULT_TIMEOUT_S
    ) -> None:
        super().__init__(timeout_s)
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout_s)
        except OSError as exc:
            raise TransportClosedError(
                f"cannot connect to {host}:{port}: {exc}"
            ) from exc
        self._start_reader(self._sock.makefile("rb"))

    def _write_frame(self, data: bytes) -> None:
        self._sock.sendall(data)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def open_backend(spec: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> Backend:
    """Build a backend from "exec:<cmd>", "tcp:<host:port>", or "mock:<file>"."""
    scheme, sep, rest = spec.partition(":")
    if not sep or not rest:
        raise ConfigError(f"backend spec {spec!r} needs a scheme and a target")
    if scheme == "exec":
        return ProcessBackend(rest, timeout_s)
    if scheme == "tcp":
        host, sep, port_text = rest.rpartition(":")
        if not sep or not host:
            raise ConfigError(f"tcp backend needs host:port, got {rest!r}")
        try:
            port = int(port_text)
        except ValueError:
            raise ConfigError(f"tcp port must be an integer, got {port_text!r}")
        return TcpBackend(host, port, timeout_s)
    if scheme == "mock":
        return MockBackend.from_file(rest)
    raise ConfigError(f"unknown backend scheme {scheme!r} in {spec!r}")


def caption_of(response: BackendResponse) -> str:
    payload = response.raise_on_error().payload or {}
    caption = payload.get("caption")
    if not isinstance(caption, str):
        raise MalformedMessageError("caption response lacks a caption string")
    return caption


def completion_of(response: BackendResponse) -> str:
    payload = response.raise_on_error().payload or {}
    completion = payload.get("completion")
    if not isinstance(completion, str):
        raise MalformedMessageError(
            "complete response lacks a completion string"
        )
    return completion


def embedding_of(response: BackendResponse) -> list[float]:
    payload = response.raise_on_error().payload or {}
    embedding = payload.get("embedding")
    if not isinstance(embedding, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool)
        for x in embedding
    ):
        raise MalformedMessageError("embed response lacks a numeric embedding")
    return [float(x) for x in embedding]


def distributions_of(
    response: BackendResponse, window_start: int, n: int
) -> WindowDistributions:
    payload = response.raise_on_error().payload or {}
    verb_dists = payload.get("verb_dists")
    noun_dists = payload.get("noun_dists")
    for name, dists in (("verb_dists", verb_dists), ("noun_dists", noun_dists)):
        if not isinstance(dists, list) or len(dists) != n:
            raise MalformedMessageError(
                f"recognize response field {name} must hold {n} vectors"
            )
        for j, vec in enumerate(dists):
            if not isinstance(vec, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool)
                for x in vec
            ):
                raise MalformedMessageError(
                    f"recognize response {name}[{j}] is not a numeric vector"
                )
            validate_distribution(vec, f"window {window_start} {name}[{j}]")
    return WindowDistributions(
        window_start=window_start,
        verb_dists=[[float(x) for x in vec] for vec in verb_dists],
        noun_dists=[[float(x) for x in vec] for vec in noun_dists],
    )
