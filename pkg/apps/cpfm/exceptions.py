"""Errors raised across the CPFM package.

Every error carries a stable ``code`` so callers (management commands, the
teacher wire protocol, the JSON API) can report it without parsing messages.
"""
from __future__ import annotations


class CPFMError(Exception):
    code = 'cpfm_error'

    def __init__(self, message: str = '', **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        body = {'code': self.code, 'message': self.message}
        if self.details:
            body['details'] = self.details
        return body


class DimensionError(CPFMError):
    code = 'dimension_error'


class ConfigError(CPFMError):
    code = 'config_error'


class ContractError(CPFMError):
    code = 'contract_error'


class DataError(CPFMError):
    code = 'data_error'


class FormatError(CPFMError):
    """Binary file could not be parsed; ``offset`` is the byte where it failed."""

    code = 'format_error'

    def __init__(self, message: str, offset: int):
        super().__init__(f'{message} (at byte {offset})', offset=offset)
        self.offset = offset


class TransportError(CPFMError):
    code = 'transport_error'


class ForbiddenError(CPFMError):
    code = 'forbidden'
