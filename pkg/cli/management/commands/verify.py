from cli.management.base import RunCommand


class Command(RunCommand):
    help = "Runs verification suites and writes JSON and CSV reports."
    command = "verify"
