from django.apps import AppConfig


class CodecAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'codec'
