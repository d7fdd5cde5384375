"""Prediction-only teacher service over a sequential TCP accept loop."""
from __future__ import annotations

import logging
import socketserver
import threading
from collections import Counter

import numpy as np

from apps.cpfm.teacher_service import protocol
from apps.cpfm.teacher_service.predictor import SourcePredictor

logger = logging.getLogger(__name__)


class PredictionEndpoint:
    """Maps request messages to responses; never returns anything but labels and shapes."""

    def __init__(self, predictor: SourcePredictor):
        self.predictor = predictor
        self.counters = Counter()

    def reject(self, code: str, message: str) -> dict:
        self.counters['errors'] += 1
        if code == protocol.FORBIDDEN:
            self.counters['forbidden'] += 1
        return protocol.error_message(code, message)

    def handle_bytes(self, body: bytes) -> dict:
        try:
            message = protocol.decode_body(body)
        except (UnicodeDecodeError, ValueError) as exc:
            return self.reject(protocol.BAD_JSON, f'frame body is not a JSON object: {exc}')
        return self.handle(message)

    def handle(self, message: dict) -> dict:
        kind = message.get('type') if isinstance(message, dict) else None
        if not isinstance(kind, str):
            return self.reject(protocol.UNKNOWN_TYPE, 'message has no string "type" field')
        if kind not in protocol.ALLOWED_TYPES:
            return self.reject(protocol.FORBIDDEN, f'message type {kind!r} is not served')
        if kind == protocol.MSG_HELLO:
            self.counters['hello'] += 1
            return {
                'type': protocol.MSG_HELLO,
                'protocol': protocol.PROTOCOL_VERSION,
                'series_len': self.predictor.series_len,
                'channels': self.predictor.channels,
                'classes': self.predictor.classes,
            }
        return self._predict(message)

    def _predict(self, message: dict) -> dict:
        mode = message.get('mode', protocol.MODE_SOFT)
        if mode not in protocol.MODES:
            return self.reject(protocol.VALIDATION_ERROR, f'mode must be one of {list(protocol.MODES)}')
        samples = message.get('samples')
        if not isinstance(samples, list):
            return self.reject(protocol.VALIDATION_ERROR, '"samples" must be a list of T x D_in arrays')
        expected = (self.predictor.series_len, self.predictor.channels)
        try:
            x = np.asarray(samples, dtype=np.float64)
        except (TypeError, ValueError):
            return self.reject(protocol.VALIDATION_ERROR, 'samples are not a rectangular numeric array')
        if len(samples) == 0:
            x = np.zeros((0,) + expected)
        if x.ndim != 3 or x.shape[1:] != expected:
            return self.reject(protocol.VALIDATION_ERROR, f'each sample must be {expected[0]} x {expected[1]}')
        if not np.all(np.isfinite(x)):
            return self.reject(protocol.VALIDATION_ERROR, 'samples contain non-finite values')

        self.counters['predict'] += 1
        self.counters['samples'] += len(x)
        probs = self.predictor.predict_proba(x)
        if mode == protocol.MODE_HARD:
            labels = [int(c) for c in np.argmax(probs, axis=-1)]
        else:
            labels = probs.tolist()
        return {'type': protocol.MSG_PREDICT, 'mode': mode, 'labels': labels}


class _FrameHandler(socketserver.StreamRequestHandler):
    def handle(self):
        endpoint: PredictionEndpoint = self.server.endpoint
        while True:
            try:
                body = protocol.read_frame(self.rfile, self.server.max_frame_bytes)
            except protocol.FrameError as exc:
                if not exc.recoverable:
                    logger.warning('dropping connection: %s', exc)
                    return
                response = endpoint.reject(protocol.BAD_FRAME, str(exc))
            else:
                if body is None:
                    return
                response = endpoint.handle_bytes(body)
            try:
                self.wfile.write(protocol.encode_frame(response))
                self.wfile.flush()
            except OSError:
                return

    def finish(self):
        super().finish()
        logger.info('teacher connection closed; totals %s', dict(self.server.endpoint.counters))


class TeacherService(socketserver.TCPServer):
    """Handles one connection at a time; port 0 picks a free port."""

    allow_reuse_address = True

    def __init__(self, predictor: SourcePredictor, address: tuple[str, int], max_frame_bytes: int | None = None):
        self.endpoint = PredictionEndpoint(predictor)
        self.max_frame_bytes = protocol.max_frame_bytes() if max_frame_bytes is None else max_frame_bytes
        super().__init__(address, _FrameHandler)

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f'{host}:{port}'

    @property
    def counters(self) -> Counter:
        return self.endpoint.counters

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, name=f'teacher-{self.address}', daemon=True)
        thread.start()
        return thread

    def stop(self) -> None:
        self.shutdown()
        self.server_close()


def serve(predictor: SourcePredictor, address: tuple[str, int], background: bool = False) -> TeacherService:
    service = TeacherService(predictor, address)
    logger.info('teacher service listening on %s', service.address)
    if background:
        service.start_background()
    return service
