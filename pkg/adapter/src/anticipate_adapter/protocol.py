"""Line-JSON wire protocol: framing, parsing, and validation.

One JSON object per line, UTF-8, sorted keys, compact separators,
non-ASCII text unescaped, floats serialized by repr, frames capped at
16 MiB in both directions. Requests carry an integer ``id`` echoed by
the response; a response is either ``{"id", "ok": true, ...payload}`` or
``{"id", "ok": false, "error": {"code", "message"}}``.

This module is deliberately self-contained so the adapter shares no
code with any client; the protocol itself is the only contract.
"""

from __future__ import annotations

import json
from typing import BinaryIO, Iterator

MAX_FRAME_BYTES = 16 * 1024 * 1024

MALFORMED_MESSAGE = "MALFORMED_MESSAGE"
UNKNOWN_KIND = "UNKNOWN_KIND"
FRAME_TOO_LARGE = "FRAME_TOO_LARGE"
MODEL_LOAD = "MODEL_LOAD"
OOM = "OOM"
GENERATION_FAILED = "GENERATION_FAILED"


class ProtocolError(Exception):
    """A per-request failure that becomes an error response."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code


def canonical_json(obj) -> str:
    return json.dumps(
        obj,
        ensure_ascii=False,
        sort_keys=True,
        separators=(",", ":"),
        allow_nan=False,
    )


def frame(obj: dict) -> bytes:
    data = canonical_json(obj).encode("utf-8") + b"\n"
    if len(data) > MAX_FRAME_BYTES:
        raise ProtocolError(
            FRAME_TOO_LARGE, f"frame of {len(data)} bytes exceeds 16 MiB"
        )
    return data


def ok_frame(request_id: int, payload: dict) -> bytes:
    return frame({"id": request_id, "ok": True, **payload})


def error_frame(request_id: int, code: str, message: str) -> bytes:
    return frame(
        {"id": request_id, "ok": False, "error": {"code": code, "message": message}}
    )


def _field(fields: dict, name: str, types, kind: str):
    if name not in fields:
        raise ProtocolError(MALFORMED_MESSAGE, f"{kind}: missing field {name!r}")
    value = fields[name]
    if isinstance(value, bool) or not isinstance(value, types):
        raise ProtocolError(
            MALFORMED_MESSAGE, f"{kind}: field {name!r} has a bad type"
        )
    return value


def request_payload(kind: str, fields: dict) -> dict:
    """The canonical id-less payload of a validated request."""
    if kind == "recognize":
        return {
            "kind": kind,
            "video_id": _field(fields, "video_id", str, kind),
            "window_start": _field(fields, "window_start", int, kind),
            "n": _field(fields, "n", int, kind),
        }
    if kind == "caption":
        return {
            "kind": kind,
            "video_id": _field(fields, "video_id", str, kind),
            "timestamp_s": float(
                _field(fields, "timestamp_s", (int, float), kind)
            ),
            "conditional_text": _field(fields, "conditional_text", str, kind),
        }
    if kind == "complete":
        return {
            "kind": kind,
            "prompt_text": _field(fields, "prompt_text", str, kind),
            "max_output_tokens": _field(fields, "max_output_tokens", int, kind),
            "sampling_seed": _field(fields, "sampling_seed", int, kind),
        }
    if kind == "embed":
        return {"kind": kind, "text": _field(fields, "text", str, kind)}
    raise ProtocolError(UNKNOWN_KIND, f"unknown request kind {kind!r}")


def parse_request(line: bytes) -> tuple[int, dict]:
    """(request id, canonical payload) of one frame; raises ProtocolError."""
    if len(line) > MAX_FRAME_BYTES:
        raise ProtocolError(FRAME_TOO_LARGE, "frame exceeds 16 MiB")
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(MALFORMED_MESSAGE, f"bad frame: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError(MALFORMED_MESSAGE, "frame is not an object")
    request_id = obj.get("id")
    if isinstance(request_id, bool) or not isinstance(request_id, int):
        raise ProtocolError(MALFORMED_MESSAGE, "frame needs an integer id")
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise ProtocolError(MALFORMED_MESSAGE, "frame needs a kind string")
    return request_id, request_payload(kind, obj)


def best_effort_id(line: bytes) -> int:
    """The frame's id when one can be recovered, else -1."""
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return -1
    if isinstance(obj, dict):
        request_id = obj.get("id")
        if isinstance(request_id, int) and not isinstance(request_id, bool):
            return request_id
    return -1


def read_frames(stream: BinaryIO) -> Iterator[tuple[bytes, bool]]:
    """Yield (line, oversized) pairs; oversized lines are drained."""
    while True:
        line = stream.readline(MAX_FRAME_BYTES + 2)
        if not line:
            return
        if len(line) > MAX_FRAME_BYTES and not line.endswith(b"\n"):
            while True:
                rest = stream.readline(MAX_FRAME_BYTES)
                if not rest or rest.endswith(b"\n"):
                    break
            yield line, True
        else:
            yield line, False
