from django.urls import path

from apps.cpfm.api import views

urlpatterns = [
    path('runs/', views.runs_collection, name='api_runs'),
    path('runs/<int:pk>/', views.run_detail, name='api_run_detail'),
]
