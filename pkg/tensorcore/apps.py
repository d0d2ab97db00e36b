from django.apps import AppConfig


class TensorcoreConfig(AppConfig):
    name = "tensorcore"
