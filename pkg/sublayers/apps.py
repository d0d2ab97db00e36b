from django.apps import AppConfig


class SublayersConfig(AppConfig):
    name = "sublayers"
