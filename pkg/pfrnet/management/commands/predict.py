from django.core.management.base import BaseCommand, CommandError

from pfrnet.evaluation import load_frozen, predict_file
from pfrnet.exceptions import PFRNetError


class Command(BaseCommand):
    help = 'Write the camouflage map of one image as an 8-bit grayscale PNG.'

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True)
        parser.add_argument('--image', required=True)
        parser.add_argument('--out', required=True)

    def handle(self, *args, **options):
        try:
            model, resolution = load_frozen(options['checkpoint'])
            path = predict_file(model, options['image'], options['out'], resolution)
        except PFRNetError as exc:
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f'Could not read {options["image"]}: {exc}') from exc
        self.stdout.write(self.style.SUCCESS(f'Prediction written to {path}'))
