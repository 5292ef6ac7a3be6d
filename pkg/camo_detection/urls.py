"""
URL configuration for the camo_detection project.

Only the PFRNet inference API is routed; training and evaluation are
management commands (see ``manage.py help``).
"""
from django.urls import path, include

urlpatterns = [
    path('api/', include('pfrnet.urls')),
]
