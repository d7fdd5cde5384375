"""Teacher wire protocol: u32 little-endian length prefix, then a UTF-8 JSON object.

Requests::

    {"type": "hello"}
    {"type": "predict", "mode": "soft" | "hard", "samples": [[[f64, ...], ...], ...]}

Responses::

    {"type": "hello", "protocol": 1, "series_len": T, "channels": D_in, "classes": K}
    {"type": "predict", "mode": "soft", "labels": [[p_0, ..., p_K-1], ...]}
    {"type": "predict", "mode": "hard", "labels": [c, ...]}
    {"type": "error", "error": {"code": ..., "message": ...}}

Floats travel as their shortest round-trip decimal form, so values decode
bit-identically on the other side.
"""
from __future__ import annotations

import json
import struct

from django.conf import settings

from apps.cpfm.exceptions import TransportError

PROTOCOL_VERSION = 1
DEFAULT_MAX_FRAME_BYTES = 64 * 1024 * 1024

MSG_HELLO = 'hello'
MSG_PREDICT = 'predict'
MSG_ERROR = 'error'
ALLOWED_TYPES = frozenset({MSG_HELLO, MSG_PREDICT})

MODE_SOFT = 'soft'
MODE_HARD = 'hard'
MODES = (MODE_SOFT, MODE_HARD)

BAD_FRAME = 'bad_frame'
BAD_JSON = 'bad_json'
VALIDATION_ERROR = 'validation_error'
FORBIDDEN = 'forbidden'
UNKNOWN_TYPE = 'unknown_type'

_LENGTH = struct.Struct('<I')
_DRAIN_CHUNK = 1 << 16


class FrameError(Exception):
    """A frame could not be read; ``recoverable`` means the stream is still aligned."""

    def __init__(self, message: str, recoverable: bool):
        super().__init__(message)
        self.recoverable = recoverable


def max_frame_bytes() -> int:
    return int(getattr(settings, 'CPFM_MAX_FRAME_BYTES', DEFAULT_MAX_FRAME_BYTES))


def encode_body(message: dict) -> bytes:
    return json.dumps(message, sort_keys=True, separators=(',', ':'), allow_nan=False).encode('utf-8')


def encode_frame(message: dict) -> bytes:
    body = encode_body(message)
    return _LENGTH.pack(len(body)) + body


def decode_body(body: bytes) -> dict:
    """Parse a frame body; raises ValueError when it is not a JSON object."""
    message = json.loads(body.decode('utf-8'))
    if not isinstance(message, dict):
        raise ValueError('frame body must be a JSON object')
    return message


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b''.join(chunks)


def read_frame(stream, limit: int | None = None) -> bytes | None:
    """Read one frame body from a binary stream; None on a clean end of stream.

    Oversized frames are drained so the next frame can still be read, then
    reported as a recoverable ``FrameError``.
    """
    limit = max_frame_bytes() if limit is None else limit
    head = _read_exact(stream, _LENGTH.size)
    if not head:
        return None
    if len(head) < _LENGTH.size:
        raise FrameError('connection closed inside a length prefix', recoverable=False)
    (length,) = _LENGTH.unpack(head)
    if length > limit:
        remaining = length
        while remaining:
            chunk = stream.read(min(remaining, _DRAIN_CHUNK))
            if not chunk:
                raise FrameError(f'frame of {length} bytes exceeds limit {limit}', recoverable=False)
            remaining -= len(chunk)
        raise FrameError(f'frame of {length} bytes exceeds limit {limit}', recoverable=True)
    body = _read_exact(stream, length)
    if len(body) < length:
        raise FrameError(f'connection closed after {len(body)} of {length} bytes', recoverable=False)
    return body


def error_message(code: str, message: str) -> dict:
    return {'type': MSG_ERROR, 'error': {'code': code, 'message': message}}


def hello_request() -> dict:
    return {'type': MSG_HELLO}


def predict_request(samples, mode: str = MODE_SOFT) -> dict:
    return {'type': MSG_PREDICT, 'mode': mode, 'samples': samples}


def send_and_receive(sock, message: dict) -> dict:
    """One request/response exchange on a connected socket."""
    sock.sendall(encode_frame(message))
    with sock.makefile('rb') as stream:
        try:
            body = read_frame(stream)
        except FrameError as exc:
            raise TransportError(str(exc)) from exc
    if body is None:
        raise TransportError('teacher closed the connection without replying')
    try:
        return decode_body(body)
    except ValueError as exc:
        raise TransportError(f'teacher sent an unreadable frame: {exc}') from exc
