#!/usr/bin/env python
"""Entry point for the CPFM harness.

Harness subcommands: gen_data, train_source, serve_teacher, adapt, eval,
suite, ablate, dump_embeddings, report. Tests: ``manage.py test apps.cpfm``.
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'core.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the requirements (pip install -r requirements.txt) "
            "into the active environment."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
