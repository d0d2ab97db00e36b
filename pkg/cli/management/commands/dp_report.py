from cli.management.base import RunCommand


class Command(RunCommand):
    help = "Estimates the d_p distance between target and network."
    command = "dp-report"
