from django.apps import AppConfig


class CpfmConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.cpfm'
    verbose_name = 'CPFM adaptation runs'
