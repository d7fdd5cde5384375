"""
URL configuration for the CPFM project.

    admin/  Django admin over stored runs
    api/    read-only JSON view of run reports
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('api/', include('apps.cpfm.api.urls')),
]
