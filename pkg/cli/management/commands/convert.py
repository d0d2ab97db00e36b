from cli.management.base import RunCommand


class Command(RunCommand):
    help = "Anneals the modified network and tabulates the sup error per step."
    command = "convert"
