"""Shared argument handling for the harness commands."""
import json
from pathlib import Path

from django.core.management.base import CommandError

from pfrnet.config import load_config
from pfrnet.exceptions import PFRNetError


def add_config_arguments(parser):
    parser.add_argument('--config', help='Flat key = value config file (default: the desk profile)')
    parser.add_argument(
        '--override', action='append', default=[], metavar='KEY=VALUE',
        help='Override one config value; may be repeated',
    )


def config_from_options(options):
    try:
        return load_config(options.get('config'), options.get('override'))
    except PFRNetError as exc:
        raise CommandError(str(exc)) from exc


def split_list(text):
    return [item.strip() for item in text.split(',') if item.strip()]


def write_rows(rows, table, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / 'table.json').write_text(json.dumps(rows, indent=2))
    (out / 'table.txt').write_text(table + '\n')
