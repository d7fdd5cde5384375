from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.cpfm.exceptions import CPFMError
from apps.cpfm.teacher_service import SourcePredictor, parse_address, serve


class Command(BaseCommand):
    help = 'Serve a source checkpoint as a black-box teacher (hello / predict only).'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='source checkpoint')
        parser.add_argument('--addr', default=None, help='host:port (default: CPFM_TEACHER_ADDR)')

    def handle(self, *args, **options):
        try:
            predictor = SourcePredictor.from_checkpoint(options['checkpoint'])
            service = serve(predictor, parse_address(options['addr'] or settings.CPFM_TEACHER_ADDR))
        except CPFMError as exc:
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f'cannot listen: {exc}') from exc
        self.stdout.write(self.style.SUCCESS(f'Teacher listening on {service.address}'))
        try:
            service.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            service.server_close()
            self.stdout.write(f'Served {dict(service.counters)}')
