from django.core.management.base import BaseCommand, CommandError

from pfrnet.metrics import format_table
from pfrnet.network import AblationVariant
from pfrnet.sweeps import run_ablation

from ._options import add_config_arguments, config_from_options, split_list, write_rows


class Command(BaseCommand):
    help = 'Train and evaluate the module ablation variants A-E.'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        parser.add_argument('--variants', default='A,B,C,D,E', help='Comma-separated letters or names')
        parser.add_argument('--parallel', action='store_true')
        parser.add_argument('--workers', type=int)
        parser.add_argument('--out', help='Also write table.json and table.txt here')

    def handle(self, *args, **options):
        try:
            variants = [AblationVariant.parse(v) for v in split_list(options['variants'])]
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        config = config_from_options(options)

        rows = run_ablation(config, variants, parallel=options['parallel'], workers=options['workers'])
        table = format_table(rows, ('letter', 'variant', 'dataset'))
        self.stdout.write(table)
        failed = [row for row in rows if row['error']]
        for row in failed:
            self.stderr.write(f'{row["letter"]} ({row["variant"]}): {row["error"]}')
        if options['out']:
            write_rows(rows, table, options['out'])
        if failed and len(failed) == len(rows):
            raise CommandError('Every ablation row failed')
