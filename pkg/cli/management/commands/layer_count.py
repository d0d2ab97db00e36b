from cli.management.base import RunCommand


class Command(RunCommand):
    help = "Compares measured sublayer counts with their closed forms."
    command = "layer-count"
