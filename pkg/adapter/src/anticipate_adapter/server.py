"""Backend server speaking the line-JSON protocol over stdio or TCP.

Requests are served strictly one at a time in arrival order. A request
that fails gets an error response (MODEL_LOAD when its model cannot be
built, OOM on memory exhaustion, GENERATION_FAILED on any other model
fault) and the process keeps serving. With ``--record``, every parsed
request and its response are appended to an in-memory log that is
written as a replayable fixture file when the input stream closes.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path
from typing import BinaryIO

from .config import AdapterConfig, AdapterConfigError, load_adapter_config
from .models import ModelError, build_model
from .protocol import (
    FRAME_TOO_LARGE,
    GENERATION_FAILED,
    MODEL_LOAD,
    OOM,
    ProtocolError,
    best_effort_id,
    canonical_json,
    error_frame,
    ok_frame,
    parse_request,
    read_frames,
)

_ROLE_BY_KIND = {
    "recognize": "recognizer",
    "caption": "captioner",
    "complete": "llm",
    "embed": "embedder",
}


class AdapterServer:
    """Dispatches validated requests to lazily built models."""

    def __init__(self, config: AdapterConfig, record_path: Path | None = None) -> None:
        self._config = config
        self._models: dict[str, object] = {}
        self._record_path = record_path
        self._recorded: dict[str, dict] = {}

    def _model(self, kind: str):
        role = _ROLE_BY_KIND[kind]
        if role not in self._models:
            spec = getattr(self._config, role)
            if spec is None:
                raise ProtocolError(MODEL_LOAD, f"no {role} model is configured")
            try:
                self._models[role] = build_model(role, spec)
            except ModelError as exc:
                raise ProtocolError(MODEL_LOAD, str(exc)) from exc
        return self._models[role]

    def _answer(self, payload: dict) -> dict:
        kind = payload["kind"]
        model = self._model(kind)
        try:
            if kind == "recognize":
                verb_dists, noun_dists = model.recognize(
                    payload["video_id"], payload["window_start"], payload["n"]
                )
                return {"verb_dists": verb_dists, "noun_dists": noun_dists}
            if kind == "caption":
                text = model.caption(
                    payload["video_id"],
                    payload["timestamp_s"],
                    payload["conditional_text"],
                )
                return {"caption": text}
            if kind == "complete":
                text = model.complete(
                    payload["prompt_text"],
                    payload["max_output_tokens"],
                    payload["sampling_seed"],
                )
                return {"completion": text}
            verbs = model.embed(payload["text"])
            return {"embedding": [float(value) for value in verbs]}
        except MemoryError as exc:
            raise ProtocolError(OOM, f"{kind}: {exc}") from exc
        except ProtocolError:
            raise
        except Exception as exc:
            raise ProtocolError(GENERATION_FAILED, f"{kind}: {exc}") from exc

    def _record(self, payload: dict, response: dict) -> None:
        if self._record_path is None:
            return
        key = canonical_json(payload)
        if key not in self._recorded:
            self._recorded[key] = {"request": payload, "response": response}

    def handle_line(self, line: bytes, oversized: bool) -> bytes:
        if oversized:
            return error_frame(-1, FRAME_TOO_LARGE, "request frame exceeds 16 MiB")
        try:
            request_id, payload = parse_request(line.rstrip(b"\n"))
        except ProtocolError as exc:
            return error_frame(best_effort_id(line), exc.code, str(exc))
        try:
            response = self._answer(payload)
        except ProtocolError as exc:
            self._record(payload, {"error": {"code": exc.code, "message": str(exc)}})
            return error_frame(request_id, exc.code, str(exc))
        self._record(payload, response)
        try:
            return ok_frame(request_id, response)
        except ProtocolError as exc:
            return error_frame(request_id, exc.code, str(exc))

    def serve(self, reader: BinaryIO, writer: BinaryIO) -> None:
        for line, oversized in read_frames(reader):
            writer.write(self.handle_line(line, oversized))
            writer.flush()

    def flush_record(self) -> None:
        if self._record_path is None:
            return
        entries = list(self._recorded.values())
        text = json.dumps(entries, ensure_ascii=False, sort_keys=True, indent=2)
        self._record_path.write_text(text + "\n", encoding="utf-8")


def serve_stdio(server: AdapterServer) -> None:
    try:
        server.serve(sys.stdin.buffer, sys.stdout.buffer)
    finally:
        server.flush_record()


def serve_tcp(server: AdapterServer, host: str, port: int) -> None:
    listener = socket.create_server((host, port))
    try:
        while True:
            conn, _ = listener.accept()
            with conn:
                reader = conn.makefile("rb")
                writer = conn.makefile("wb")
                server.serve(reader, writer)
    finally:
        listener.close()
        server.flush_record()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="anticipate-adapter",
        description="serve caption/embed/complete/recognize requests over line-JSON",
    )
    parser.add_argument("--config", required=True, help="adapter config JSON file")
    parser.add_argument(
        "--record", default=None, help="write served traffic here as a fixture"
    )
    parser.add_argument(
        "--tcp",
        default=None,
        metavar="HOST:PORT",
        help="listen on TCP instead of serving stdio",
    )
    args = parser.parse_args(argv)

    try:
        config = load_adapter_config(Path(args.config))
    except AdapterConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    record_path = Path(args.record) if args.record else None
    server = AdapterServer(config, record_path)
    if args.tcp is not None:
        host, _, port_text = args.tcp.rpartition(":")
        try:
            port = int(port_text)
        except ValueError:
            print(f"error: bad --tcp address {args.tcp!r}", file=sys.stderr)
            return 1
        serve_tcp(server, host or "127.0.0.1", port)
    else:
        serve_stdio(server)
    return 0


if __name__ == "__main__":
    sys.exit(main())
