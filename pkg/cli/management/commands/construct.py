from cli.management.base import RunCommand


class Command(RunCommand):
    help = "Builds the modified Transformer memorizing a target and writes it as JSON."
    command = "construct"
