#!/usr/bin/env python3
"""Bootstrap a demo deployment: train a checkpoint if none exists, then
serve the HTTP API (and the webapp build directory when given)."""

import argparse
from pathlib import Path

from chronorisk.cli import dispatch
from chronorisk.service import Server, ServiceConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8700)
    parser.add_argument("--user", default="clinician")
    parser.add_argument("--password", default="change-me")
    parser.add_argument("--static", default="",
                        help="directory with the built webapp, if any")
    args = parser.parse_args()

    base = Path(args.workdir)
    base.mkdir(parents=True, exist_ok=True)
    cohort = base / "cohort.jsonl"
    ckpt = base / "model.ckpt"
    if not ckpt.exists():
        for step in (
            ("gen", "--config", "default", "--out", str(cohort),
             "--n", "1000", "--seed", "0"),
            ("train", "--cohort", str(cohort), "--out", str(ckpt),
             "--seed", "0", "--epochs", "6"),
        ):
            code = dispatch(list(step))
            if code != 0:
                return code

    config = ServiceConfig(
        host=args.host, port=args.port, checkpoint=str(ckpt),
        store=str(base / "clinic.log"), user=args.user,
        password=args.password, static_dir=args.static)
    server = Server(config)
    print(f"serving on {server.base_url}  (user {config.user})", flush=True)
    server.run()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
