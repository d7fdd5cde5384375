from apps.cpfm.teacher_service.client import BaseTeacherClient, TeacherClient, client_predict, parse_address
from apps.cpfm.teacher_service.local import LocalTeacher
from apps.cpfm.teacher_service.predictor import SourcePredictor
from apps.cpfm.teacher_service.server import PredictionEndpoint, TeacherService, serve

__all__ = [
    'BaseTeacherClient',
    'LocalTeacher',
    'PredictionEndpoint',
    'SourcePredictor',
    'TeacherClient',
    'TeacherService',
    'client_predict',
    'parse_address',
    'serve',
]
