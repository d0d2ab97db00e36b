from django.apps import AppConfig


class ConstructorConfig(AppConfig):
    name = "constructor"
