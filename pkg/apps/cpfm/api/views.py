from __future__ import annotations

from django.http import JsonResponse
from django.views.decorators.http import require_GET

from apps.cpfm.api.serializers import run_to_dict
from apps.cpfm.models import Run

DEFAULT_LIMIT = 50
MAX_LIMIT = 500


def _json_error(code: str, message: str, status: int = 400, **extra):
    body = {'error': {'code': code, 'message': message}}
    if extra:
        body['error']['details'] = extra
    return JsonResponse(body, status=status)


@require_GET
def runs_collection(request):
    qs = Run.objects.all()
    kind = request.GET.get('kind')
    if kind:
        if kind not in dict(Run.KIND_CHOICES):
            return _json_error('validation_error', f'unknown run kind {kind!r}', kind=kind)
        qs = qs.filter(kind=kind)
    try:
        limit = int(request.GET.get('limit', DEFAULT_LIMIT))
    except ValueError:
        return _json_error('validation_error', 'limit must be an integer')
    limit = max(1, min(limit, MAX_LIMIT))
    total = qs.count()
    runs = [run_to_dict(r) for r in qs[:limit]]
    return JsonResponse({'data': runs, 'meta': {'count': len(runs), 'total': total, 'limit': limit}})


@require_GET
def run_detail(request, pk: int):
    try:
        run = Run.objects.get(pk=pk)
    except Run.DoesNotExist:
        return _json_error('not_found', f'run {pk} does not exist', status=404)
    return JsonResponse({'data': run_to_dict(run, detail=True), 'meta': {}})
