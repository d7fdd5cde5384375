from __future__ import annotations

from apps.cpfm.teacher_service import protocol
from apps.cpfm.teacher_service.client import BaseTeacherClient
from apps.cpfm.teacher_service.predictor import SourcePredictor
from apps.cpfm.teacher_service.server import PredictionEndpoint


class LocalTeacher(BaseTeacherClient):
    """In-process teacher: same messages and encoding as the socket path, no socket."""

    def __init__(self, predictor: SourcePredictor, name: str = 'local'):
        super().__init__()
        self.endpoint = PredictionEndpoint(predictor)
        self.address = name

    def _call(self, message: dict) -> dict:
        response = self.endpoint.handle_bytes(protocol.encode_body(message))
        return protocol.decode_body(protocol.encode_body(response))
