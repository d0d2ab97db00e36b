import csv
import io
import json
import logging
import os
from typing import Iterable, List, Sequence

from seq2seq_univ import __version__
from verifier.reports import plain

logger = logging.getLogger(__name__)


def dumps_json(document) -> str:
    """Sorted, indented UTF-8 JSON; equal documents give equal bytes."""
    return (
        json.dumps(plain(document), indent=2, sort_keys=True, ensure_ascii=False)
        + "\n"
    )


def dumps_csv(header: Sequence[str], rows: Iterable[dict]) -> str:
    with io.StringIO() as buffer:
        writer = csv.DictWriter(buffer, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: plain(value) for key, value in row.items()})
        return buffer.getvalue()


def with_provenance(config, document: dict) -> dict:
    return dict(document, config=config.as_dict(), version=__version__)


class OutputWriter:
    """Writes the files of one run into its output directory."""

    def __init__(self, directory: str):
        self.directory = directory
        self.written: List[str] = []

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def write_text(self, name: str, text: str) -> str:
        os.makedirs(self.directory, exist_ok=True)
        path = self.path(name)
        with open(path, "w", encoding="utf-8", newline="") as fp:
            fp.write(text)
        logger.info("Wrote %s", path)
        self.written.append(name)
        return path

    def write_json(self, name: str, document) -> str:
        return self.write_text(name, dumps_json(document))

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[dict]) -> str:
        return self.write_text(name, dumps_csv(header, rows))
