"""
WSGI entry point for serving the camouflage-map API.

Point ``PFRNET_CHECKPOINT`` at a trained checkpoint before starting the
server; ``/api/predict/`` answers 503 until one is configured.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'camo_detection.settings')

application = get_wsgi_application()
