from django.core.management.base import BaseCommand, CommandError

from pfrnet.metrics import format_table
from pfrnet.sweeps import DEFAULT_LAMBDAS, sweep_lambda

from ._options import add_config_arguments, config_from_options, split_list, write_rows


class Command(BaseCommand):
    help = 'Train and evaluate one run per lambda value (CLI name: sweep-lambda).'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        parser.add_argument(
            '--values', default=','.join(str(v) for v in DEFAULT_LAMBDAS),
            help='Comma-separated lambda values',
        )
        parser.add_argument('--parallel', action='store_true', help='Run rows in separate processes')
        parser.add_argument('--workers', type=int)
        parser.add_argument('--out', help='Also write table.json and table.txt here')

    def handle(self, *args, **options):
        try:
            values = [float(v) for v in split_list(options['values'])]
        except ValueError as exc:
            raise CommandError(f'Invalid --values: {exc}') from exc
        if not values:
            raise CommandError('--values is empty')
        config = config_from_options(options)

        rows = sweep_lambda(config, values, parallel=options['parallel'], workers=options['workers'])
        table = format_table(rows, ('lambda', 'dataset'))
        self.stdout.write(table)
        failed = [row for row in rows if row['error']]
        for row in failed:
            self.stderr.write(f'lambda={row["lambda"]}: {row["error"]}')
        if options['out']:
            write_rows(rows, table, options['out'])
        if failed and len(failed) == len(rows):
            raise CommandError('Every sweep row failed')
