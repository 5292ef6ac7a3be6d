from django.apps import AppConfig


class PfrnetConfig(AppConfig):
    name = 'pfrnet'
    verbose_name = 'PFRNet camouflaged object detection'
