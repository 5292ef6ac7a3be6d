#!/usr/bin/env python
"""Django's command-line utility, doubling as the ``pfrnet`` CLI."""
import os
import sys

# CLI spellings that are not valid Python module names
COMMAND_ALIASES = {
    'sweep-lambda': 'sweep_lambda',
    'self-check': 'self_check',
}


def main():
    """Run administrative and PFRNet harness tasks."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'camo_detection.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    argv = list(sys.argv)
    if len(argv) > 1:
        argv[1] = COMMAND_ALIASES.get(argv[1], argv[1])
    execute_from_command_line(argv)


if __name__ == '__main__':
    main()
