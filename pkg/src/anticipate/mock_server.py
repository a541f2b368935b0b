"""Standalone scripted backend process speaking the wire protocol.

Loads a fixture file and answers requests over stdio (default) or a TCP
socket.  Malformed input lines never kill the server: they are answered
with an error response carrying id -1 (or the frame's id when one could
be recovered).  Used as the `exec:` backend in tests and demos.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from typing import BinaryIO, Iterator

from .backend import (
    FIXTURE_MISS_CODE,
    MAX_FRAME_BYTES,
    BackendResponse,
    IncomingRequest,
    MockBackend,
    _payload_to_response,
    error_response,
    frame_response,
    parse_message,
)
from .errors import (
    FixtureMissError,
    FrameTooLargeError,
    MalformedMessageError,
    UnknownKindError,
    ValidationError,
)


def _read_frames(stream: BinaryIO) -> Iterator[tuple[bytes, bool]]:
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


def _best_effort_id(line: bytes) -> int:
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return -1
    if isinstance(obj, dict):
        request_id = obj.get("id")
        if isinstance(request_id, int) and not isinstance(request_id, bool):
            return request_id
    return -1


def answer_line(mock: MockBackend, line: bytes, oversized: bool) -> BackendResponse:
    if oversized:
        return error_response(-1, "FRAME_TOO_LARGE", "frame exceeds 16 MiB")
    try:
        message = parse_message(line)
    except FrameTooLargeError as exc:
        return error_response(_best_effort_id(line), "FRAME_TOO_LARGE", str(exc))
    except UnknownKindError as exc:
        return error_response(_best_effort_id(line), "UNKNOWN_KIND", str(exc))
    except MalformedMessageError as exc:
        return error_response(_best_effort_id(line), "MALFORMED_MESSAGE", str(exc))
    if not isinstance(message, IncomingRequest):
        return error_response(
            message.request_id, "MALFORMED_MESSAGE", "expected a request frame"
        )
    try:
        payload = mock.lookup(message.request)
    except FixtureMissError as exc:
        return error_response(message.request_id, FIXTURE_MISS_CODE, str(exc))
    return _payload_to_response(message.request_id, payload)


def serve_stream(mock: MockBackend, reader: BinaryIO, writer: BinaryIO) -> None:
    for line, oversized in _read_frames(reader):
        writer.write(frame_response(answer_line(mock, line, oversized)))
        writer.flush()


def serve_tcp(mock: MockBackend, host: str, port: int) -> None:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind((host, port))
        server.listen(1)
        bound_host, bound_port = server.getsockname()
        print(f"listening on {bound_host}:{bound_port}", file=sys.stderr, flush=True)
        while True:
            conn, _ = server.accept()
            with conn:
                reader = conn.makefile("rb")
                writer = conn.makefile("wb")
                try:
                    serve_stream(mock, reader, writer)
                except (OSError, BrokenPipeError):
                    pass


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="scripted wire-protocol backend answering from a fixture"
    )
    parser.add_argument("fixture", help="fixture file of request/response records")
    parser.add_argument(
        "--tcp",
        metavar="HOST:PORT",
        help="serve on a TCP socket instead of stdio (port 0 picks a free one)",
    )
    args = parser.parse_args(argv)
    try:
        mock = MockBackend.from_file(args.fixture)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.tcp:
        host, sep, port_text = args.tcp.rpartition(":")
        try:
            port = int(port_text)
        except ValueError:
            print(f"error: bad port in {args.tcp!r}", file=sys.stderr)
            return 1
        if not sep or not host:
            print(f"error: --tcp needs host:port, got {args.tcp!r}", file=sys.stderr)
            return 1
        try:
            serve_tcp(mock, host, port)
        except KeyboardInterrupt:
            pass
        return 0
    serve_stream(mock, sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
