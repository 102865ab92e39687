from django.apps import AppConfig


class TheoryConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.theory'
    verbose_name = 'Inexact SGD bounds'
