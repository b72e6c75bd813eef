from django.apps import AppConfig


class SpinbosonConfig(AppConfig):
    name = 'spinboson'
    default_auto_field = 'django.db.models.BigAutoField'
