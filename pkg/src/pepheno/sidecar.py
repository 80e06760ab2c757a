"""Reference classifier sidecar speaking the adapter wire protocol.

Serves the rule baseline behind the same boundary a real model process
would sit behind, so the external transport can be exercised end to end:

    python -m pepheno.sidecar               # pipe mode: JSONL on stdin/stdout
    python -m pepheno.sidecar --http :8901  # HTTP mode: POST /classify

Request {"id": ..., "text": ...} -> response {"id": ..., "label":
"positive"|"negative", "confidence": 0.0-1.0}.
"""

from __future__ import annotations

import argparse
import json
import sys

from .classifier import baseline_classify
from .corpus import BinaryLabel
from .terms import TermTable, load_terms


def classify_record(record: dict, terms: TermTable) -> dict:
    label, confidence = baseline_classify(str(record.get("text", "")), terms)
    return {
        "id": record["id"],
        "label": "positive" if label == BinaryLabel.POSITIVE else "negative",
        "confidence": confidence,
    }


def run_pipe(terms: TermTable, stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        record = json.loads(line)
        stdout.write(json.dumps(classify_record(record, terms)) + "\n")
        stdout.flush()
    return 0


def create_sidecar_app(terms: TermTable):
    from fastapi import FastAPI

    app = FastAPI(title="pepheno baseline sidecar")

    @app.post("/classify")
    def classify(batch: list[dict]) -> list[dict]:
        return [classify_record(record, terms) for record in batch]

    return app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pepheno-sidecar", description=__doc__)
    parser.add_argument("--terms", help="term table YAML (default: packaged)")
    parser.add_argument("--http", metavar="[HOST]:PORT",
                        help="serve HTTP instead of reading stdin")
    args = parser.parse_args(argv)
    terms = load_terms(args.terms)
    if args.http:
        host, _, port = args.http.rpartition(":")
        import uvicorn

        uvicorn.run(create_sidecar_app(terms), host=host or "127.0.0.1",
                    port=int(port), log_level="warning")
        return 0
    return run_pipe(terms)


if __name__ == "__main__":
    sys.exit(main())
