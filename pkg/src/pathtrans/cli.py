"""Command-line client for the scenario runner.

``pathtrans run <config.json> [--out report.json] [--csv sweep.csv]`` executes
one scenario (in-process by default, or against a running service with
``--server URL``) and prints the JSON report.  ``pathtrans catalog`` lists the
preset fields, ``pathtrans serve`` starts the HTTP service.

Exit codes: 0 success, 2 config error, 3 gate failure, 4 numerical singularity.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runner

_ERROR_EXIT = {"config": runner.EXIT_CONFIG, "gate": runner.EXIT_GATE,
               "singularity": runner.EXIT_SINGULAR}


def _emit(report: dict, out_path: Path | None) -> None:
    text = runner.report_to_json(report)
    if out_path is not None:
        out_path.write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _config_error(message: str, location: str, out_path: Path | None) -> int:
    report = {"error": {"kind": "config", "message": message, "location": location}}
    _emit(report, out_path)
    return runner.EXIT_CONFIG


def _run_remote(server: str, config: dict) -> tuple[dict, int]:
    import httpx

    resp = httpx.post(server.rstrip("/") + "/run", json=config, timeout=300.0)
    report = resp.json()
    if resp.status_code == 200:
        return report, runner.EXIT_OK
    kind = report.get("error", {}).get("kind", "config")
    return report, _ERROR_EXIT.get(kind, runner.EXIT_CONFIG)


def _cmd_run(args) -> int:
    out_path: Path | None = args.out
    csv_path: Path | None = args.csv
    try:
        raw = Path(args.config).read_text(encoding="utf-8")
    except OSError as e:
        return _config_error(f"cannot read config: {e}", str(args.config), out_path)
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as e:
        return _config_error(f"config is not valid JSON: {e}", str(args.config), out_path)

    if isinstance(config, dict):
        output = config.get("output", {})
        if isinstance(output, dict):
            if out_path is None and output.get("json"):
                out_path = Path(output["json"])
            if csv_path is None and output.get("csv"):
                csv_path = Path(output["csv"])

    if csv_path is not None and (not isinstance(config, dict) or config.get("scenario") != "ab_sweep"):
        return _config_error("CSV output is only available for the ab_sweep scenario",
                             "output.csv", out_path)

    if args.server:
        report, code = _run_remote(args.server, config)
    else:
        report, code = runner.execute(config)
    _emit(report, out_path)
    if code == runner.EXIT_OK and csv_path is not None:
        csv_path.write_text(runner.csv_for_sweep(report), encoding="utf-8")
    return code


def _cmd_catalog(args) -> int:
    if args.server:
        import httpx

        resp = httpx.get(args.server.rstrip("/") + "/catalog", timeout=60.0)
        resp.raise_for_status()
        sys.stdout.write(resp.json()["listing"])
        return 0
    sys.stdout.write(runner.list_catalog())
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("pathtrans.service:app", host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathtrans", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario config and print the JSON report")
    run_p.add_argument("config", help="path to the JSON scenario config")
    run_p.add_argument("--out", type=Path, default=None, help="also write the report here")
    run_p.add_argument("--csv", type=Path, default=None, help="write sweep rows as CSV (ab_sweep only)")
    run_p.add_argument("--server", default=None, help="run against a service at this base URL")
    run_p.set_defaults(func=_cmd_run)

    cat_p = sub.add_parser("catalog", help="list the preset coefficient fields")
    cat_p.add_argument("--server", default=None, help="query a running service instead")
    cat_p.set_defaults(func=_cmd_catalog)

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
