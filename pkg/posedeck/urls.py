"""
URL configuration for posedeck project.

The admin lists stored experiment runs; the bench API exposes them over
REST and lets staff start new runs.
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('api/bench/', include('bench.urls')),
]
