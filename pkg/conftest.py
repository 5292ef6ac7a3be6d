import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'camo_detection.settings')
django.setup()
