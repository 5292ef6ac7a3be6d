from django.core.management.base import BaseCommand, CommandError

from pfrnet.self_check import CHECKS, run_self_check


class Command(BaseCommand):
    help = 'Run the invariant battery (shapes, attention, losses, metrics, schedule); CLI name: self-check.'

    def add_arguments(self, parser):
        parser.add_argument(
            '--only', action='append', choices=[name for name, _ in CHECKS],
            help='Run only this check; may be repeated',
        )

    def handle(self, *args, **options):
        results = run_self_check(options['only'])
        for result in results:
            line = f'{result.name:<22} {result.seconds:6.2f}s  {result.detail}'
            if result.passed:
                self.stdout.write(self.style.SUCCESS(f'PASS  {line}'))
            else:
                self.stdout.write(self.style.ERROR(f'FAIL  {line}'))

        failures = sum(not result.passed for result in results)
        if failures:
            raise CommandError(f'{failures} of {len(results)} checks failed')
        self.stdout.write(self.style.SUCCESS(f'All {len(results)} checks passed'))
