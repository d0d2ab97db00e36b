import logging

import sentry_sdk
from django.core.management import BaseCommand, CommandError

from cli.config import load_config
from cli.runner import exit_status_for, run
from seq2seq_univ.consts import EXIT_OK
from seq2seq_univ.exceptions import Seq2SeqUnivError

logger = logging.getLogger(__name__)

OVERRIDES = (
    "delta",
    "d",
    "n",
    "target",
    "seed",
    "suite",
    "output",
    "mode",
    "budget",
    "lam",
    "eps",
)


class RunCommand(BaseCommand):
    """Shared flags and error handling of the construction commands."""

    command = None

    def add_arguments(self, parser):
        parser.add_argument(
            "--config", type=str, help="TOML or JSON run config, flags override it."
        )
        parser.add_argument("--delta", type=str, help='Grid resolution as "1/q".')
        parser.add_argument("--d", type=int, help="Embedding dimension.")
        parser.add_argument("--n", type=int, help="Sequence length.")
        parser.add_argument(
            "--target",
            type=str,
            help="Builtin target name or path to a target JSON file.",
        )
        parser.add_argument("--seed", type=int, help="Seed for targets and sampling.")
        parser.add_argument("--suite", type=str, help="Verification suite or all.")
        parser.add_argument("--output", type=str, help="Output directory.")
        parser.add_argument(
            "--mode", type=str, choices=("exact", "float"), help="Arithmetic mode."
        )
        parser.add_argument("--budget", type=int, help="Sublayer budget.")
        parser.add_argument(
            "--lam",
            type=float,
            nargs="+",
            help="Softmax temperatures of the conversion schedule.",
        )
        parser.add_argument(
            "--eps",
            type=str,
            nargs="+",
            help='Activation bands of the conversion schedule, e.g. "1/100".',
        )

    def handle(self, *args, **options):
        overrides = {key: options.get(key) for key in OVERRIDES}
        try:
            config = load_config(
                options.get("config"), command=self.command, **overrides
            )
            result = run(config)
        except Seq2SeqUnivError as e:
            logger.exception("%s failed", self.command)
            raise CommandError(f"{e.code}: {e}", returncode=exit_status_for(e))
        except Exception as e:
            sentry_sdk.capture_exception(e)
            raise

        for name in result.files:
            self.stdout.write(f"Wrote {name}")
        for key, value in result.summary.items():
            self.stdout.write(f"{key}: {value}")
        if result.status != EXIT_OK:
            raise CommandError(
                f"{self.command} found unexpected outcomes.", returncode=result.status
            )
        self.stdout.write(self.style.SUCCESS(f"{self.command} done."))
