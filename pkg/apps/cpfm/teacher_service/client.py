from __future__ import annotations

import logging
import socket
import time

import numpy as np
from django.conf import settings

from apps.cpfm.exceptions import ConfigError, ContractError, ForbiddenError, TransportError
from apps.cpfm.pseudo_labels import check_simplex
from apps.cpfm.teacher_service import protocol

logger = logging.getLogger(__name__)


def parse_address(address: str) -> tuple[str, int]:
    host, sep, port = str(address).rpartition(':')
    if not sep or not host:
        raise ConfigError(f'teacher address must be host:port, got {address!r}')
    try:
        port_number = int(port)
    except ValueError:
        raise ConfigError(f'teacher port must be an integer, got {port!r}') from None
    if not 0 <= port_number <= 65535:
        raise ConfigError(f'teacher port out of range: {port_number}')
    return host, port_number


class BaseTeacherClient:
    """Prediction-only view of a teacher; subclasses supply the transport."""

    def __init__(self):
        self._handshake: dict | None = None

    def _call(self, message: dict) -> dict:
        raise NotImplementedError

    def _request(self, message: dict, expected_type: str) -> dict:
        response = self._call(message)
        if response.get('type') == protocol.MSG_ERROR:
            error = response.get('error') or {}
            code, text = error.get('code', 'error'), error.get('message', '')
            if code == protocol.FORBIDDEN:
                raise ForbiddenError(text)
            raise ContractError(f'teacher rejected the request ({code}): {text}', code=code)
        if response.get('type') != expected_type:
            raise ContractError(f'teacher answered {response.get("type")!r} to a {expected_type!r} request')
        return response

    def hello(self) -> dict:
        if self._handshake is None:
            response = self._request(protocol.hello_request(), protocol.MSG_HELLO)
            self._handshake = {key: int(response[key]) for key in ('series_len', 'channels', 'classes')}
        return dict(self._handshake)

    @property
    def shape(self) -> tuple[int, int, int]:
        hs = self.hello()
        return hs['series_len'], hs['channels'], hs['classes']

    def predict(self, batch, mode: str = protocol.MODE_SOFT) -> np.ndarray:
        """Soft labels (n, K) or hard labels (n,) for ``batch`` (n, T, D_in)."""
        if mode not in protocol.MODES:
            raise ContractError(f'mode must be one of {list(protocol.MODES)}, got {mode!r}')
        series_len, channels, classes = self.shape
        x = np.asarray(batch, dtype=np.float64)
        if len(x) == 0:
            return np.zeros((0, classes)) if mode == protocol.MODE_SOFT else np.zeros(0, dtype=np.int64)
        if x.ndim != 3 or x.shape[1:] != (series_len, channels):
            raise ContractError(f'batch shape {x.shape} does not match teacher input {series_len}x{channels}')
        response = self._request(protocol.predict_request(x.tolist(), mode), protocol.MSG_PREDICT)
        labels = np.asarray(response.get('labels'))
        if mode == protocol.MODE_HARD:
            if labels.shape != (len(x),):
                raise ContractError(f'teacher returned {labels.shape} hard labels for {len(x)} samples')
            return labels.astype(np.int64)
        labels = labels.astype(np.float64)
        if labels.shape != (len(x), classes):
            raise ContractError(f'teacher returned soft labels of shape {labels.shape}')
        check_simplex(labels, what='teacher soft labels')
        return labels

    def close(self) -> None:
        pass


class TeacherClient(BaseTeacherClient):
    """TCP client; each request opens a short-lived connection."""

    def __init__(
        self,
        address: str | None = None,
        retries: int | None = None,
        backoff: float | None = None,
        timeout: float | None = None,
    ):
        super().__init__()
        self.address = address or settings.CPFM_TEACHER_ADDR
        self.host, self.port = parse_address(self.address)
        self.retries = settings.CPFM_CLIENT_RETRIES if retries is None else retries
        self.backoff = settings.CPFM_CLIENT_BACKOFF if backoff is None else backoff
        self.timeout = settings.CPFM_CLIENT_TIMEOUT if timeout is None else timeout

    def _call(self, message: dict) -> dict:
        delay = self.backoff
        for attempt in range(self.retries + 1):
            try:
                with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
                    return protocol.send_and_receive(sock, message)
            except (OSError, TransportError) as exc:
                if attempt == self.retries:
                    raise TransportError(
                        f'teacher at {self.address} unreachable after {attempt + 1} attempts: {exc}'
                    ) from exc
                logger.warning('teacher %s attempt %d failed (%s); retrying in %.2fs', self.address, attempt + 1, exc, delay)
                time.sleep(delay)
                delay *= 2


def client_predict(address: str, batch, mode: str = protocol.MODE_SOFT) -> np.ndarray:
    return TeacherClient(address).predict(batch, mode)
