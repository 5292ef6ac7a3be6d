from django.core.management.base import BaseCommand, CommandError

from pfrnet.exceptions import PFRNetError
from pfrnet.training import train

from ._options import add_config_arguments, config_from_options


class Command(BaseCommand):
    help = 'Train PFRNet from a config file; artifacts go to a fresh run directory.'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        parser.add_argument('--resume', help='Continue from this checkpoint (in its run directory)')
        parser.add_argument('--run-dir', help='Write into this directory instead of a new one under RUN_ROOT')

    def handle(self, *args, **options):
        config = config_from_options(options)
        self.stdout.write(f'Training {config.variant} ({config.profile} profile, lambda={config.lam})')
        try:
            result = train(config, run_dir=options['run_dir'], resume=options['resume'])
        except PFRNetError as exc:
            raise CommandError(str(exc)) from exc

        losses = result.log.losses
        if losses:
            self.stdout.write(f'Steps: {len(losses)}, first loss {losses[0]:.4f}, last loss {losses[-1]:.4f}')
        self.stdout.write(f'Run directory: {result.run_dir}')
        self.stdout.write(self.style.SUCCESS(f'Checkpoint written to {result.checkpoint}'))
