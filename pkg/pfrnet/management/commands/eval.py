from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from pfrnet.evaluation import evaluate_many, write_reports
from pfrnet.exceptions import PFRNetError


class Command(BaseCommand):
    help = 'Evaluate a checkpoint on one or more Imgs/GT datasets (S-alpha, E-phi, weighted F, MAE).'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True)
        parser.add_argument('--data', action='append', required=True, help='Dataset root; may be repeated')
        parser.add_argument('--out', help='Output directory (default: <run dir>/predictions)')

    def handle(self, *args, **options):
        checkpoint = Path(options['checkpoint'])
        out = Path(options['out']) if options['out'] else checkpoint.parent / 'predictions'
        try:
            reports = evaluate_many(checkpoint, options['data'], out_dir=out)
        except PFRNetError as exc:
            raise CommandError(str(exc)) from exc

        _, table = write_reports(reports, out)
        self.stdout.write(table)
        self.stdout.write(self.style.SUCCESS(f'Reports written to {out}'))
