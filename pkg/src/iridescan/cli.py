"""Command-line interface: offline analysis, spool/sync, review, server.

Exit codes: 0 success, 1 validation or command error, 2 I/O or network
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .client import (
    AnalyzeInputError,
    ApiClient,
    AuthFailure,
    LocalSpool,
    ReviewError,
    ReviewSession,
    SyncError,
    download_bundle,
    load_model,
    load_params,
    run_analyze,
    sync_spool,
    write_outputs,
)
from .domain import (
    BoundingBox,
    DefectAnnotation,
    PipelineParams,
    parse_timestamp,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iridescan")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the backend server")
    serve.add_argument("--config", help="JSON config file")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--data-dir")
    serve.add_argument("--webui-dir")

    login = sub.add_parser("login", help="obtain an access token")
    login.add_argument("--server", required=True)
    login.add_argument("--username", required=True)
    login.add_argument("--password", required=True)

    analyze = sub.add_parser("analyze", help="offline analysis of PPM frames")
    analyze.add_argument("--input", required=True, help="directory of .ppm frames")
    analyze.add_argument("--params", help="PipelineParams JSON file")
    analyze.add_argument("--model", help="trained model JSON file")
    analyze.add_argument("--out", required=True, help="annotations output file")
    analyze.add_argument("--alert-log", help="per-frame alert log (default: OUT.alerts)")
    analyze.add_argument(
        "--timestamp",
        help="RFC 3339 stamp for produced annotations (default: epoch, reproducible)",
    )

    spool = sub.add_parser("spool", help="manage the local spool")
    spool_sub = spool.add_subparsers(dest="spool_command", required=True)
    spool_add = spool_sub.add_parser("add", help="stage an inspection for upload")
    spool_add.add_argument("--spool", required=True)
    spool_add.add_argument("--title", required=True)
    spool_add.add_argument("--frames", required=True, help="directory of .ppm frames")
    spool_add.add_argument("--depth", help="opaque depth blob file")
    spool_add.add_argument("--annotations", help="analyze output file to attach")
    spool_add.add_argument("--tags", nargs="*", default=[])
    spool_add.add_argument("--created-at", help="RFC 3339 creation stamp")
    spool_add.add_argument("--id", dest="inspection_id", help="explicit inspection id")
    spool_list = spool_sub.add_parser("list", help="list spool entries")
    spool_list.add_argument("--spool", required=True)

    sync = sub.add_parser("sync", help="upload pending spool entries")
    sync.add_argument("--server", required=True)
    sync.add_argument("--token", required=True)
    sync.add_argument("--spool", required=True)

    download = sub.add_parser("download", help="download a bundle for review")
    download.add_argument("--server", required=True)
    download.add_argument("--token", required=True)
    download.add_argument("--inspection", required=True)
    download.add_argument("--dest", required=True)

    review = sub.add_parser("review", help="edit a downloaded bundle")
    review.add_argument("bundle_dir")
    review_sub = review.add_subparsers(dest="review_command", required=True)
    add_defect = review_sub.add_parser("add-defect")
    add_defect.add_argument("--frame", type=int, required=True)
    add_defect.add_argument("--class", dest="class_name", required=True)
    add_defect.add_argument("--box", required=True, help="x_min,y_min,x_max,y_max")
    add_defect.add_argument("--params", help="PipelineParams JSON file")
    delete_defect = review_sub.add_parser("delete-defect")
    delete_defect.add_argument("index", type=int)
    review_sub.add_parser("save")
    review_sub.add_parser("restore-original")
    review_sub.add_parser("list")
    push = review_sub.add_parser("push")
    push.add_argument("--server", required=True)
    push.add_argument("--token", required=True)

    return parser


def _params_from(path: str | None) -> PipelineParams:
    return load_params(Path(path)) if path else PipelineParams()


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app
    from .config import load_config
    from .services import AppContext

    config = load_config(args.config)
    overrides = {}
    if args.host:
        overrides["host"] = args.host
    if args.port:
        overrides["port"] = args.port
    if args.data_dir:
        overrides["data_dir"] = Path(args.data_dir)
    if args.webui_dir:
        overrides["webui_dir"] = Path(args.webui_dir)
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    ctx = AppContext(
        config.data_dir, token_lifetime_seconds=config.token_lifetime_seconds
    )
    app = create_app(ctx, webui_dir=config.webui_dir)
    uvicorn.run(app, host=config.host, port=config.port)
    return EXIT_OK


def cmd_login(args) -> int:
    response = httpx.post(
        args.server.rstrip("/") + "/api/auth/login",
        json={"username": args.username, "password": args.password},
    )
    if response.status_code != 200:
        print(response.text, file=sys.stderr)
        return EXIT_IO
    print(response.json()["token"])
    return EXIT_OK


def cmd_analyze(args) -> int:
    params = _params_from(args.params)
    model = load_model(Path(args.model)) if args.model else None
    kwargs = {}
    if args.timestamp:
        kwargs["timestamp"] = parse_timestamp(args.timestamp)
    result = run_analyze(Path(args.input), params, model, **kwargs)
    write_outputs(
        result, Path(args.out), Path(args.alert_log) if args.alert_log else None
    )
    alerted = sum(1 for a in result["alerts"] if a["alert"])
    print(
        f"analyzed {result['frame_count']} frames: {alerted} alerts, "
        f"{len(result['proposals'])} proposals, {len(result['annotations'])} annotations"
    )
    return EXIT_OK


def cmd_spool_add(args) -> int:
    frames_dir = Path(args.frames)
    frame_paths = sorted(frames_dir.glob("*.ppm"))
    if not frame_paths:
        print(f"no .ppm frames in {frames_dir}", file=sys.stderr)
        return EXIT_VALIDATION
    annotations = ()
    if args.annotations:
        doc = json.loads(Path(args.annotations).read_text())
        annotations = tuple(DefectAnnotation.from_dict(a) for a in doc["annotations"])
    spool = LocalSpool(Path(args.spool))
    inspection_id = spool.add_inspection(
        title=args.title,
        frame_payloads=[p.read_bytes() for p in frame_paths],
        depth_payload=Path(args.depth).read_bytes() if args.depth else None,
        annotations=annotations,
        tags=tuple(args.tags),
        created_at=parse_timestamp(args.created_at) if args.created_at else None,
        inspection_id=args.inspection_id,
    )
    print(inspection_id)
    return EXIT_OK


def cmd_spool_list(args) -> int:
    for inspection_id, state in LocalSpool(Path(args.spool)).list_entries():
        print(f"{inspection_id}\t{state}")
    return EXIT_OK


def cmd_sync(args) -> int:
    client = ApiClient(args.server, args.token)
    try:
        report = sync_spool(LocalSpool(Path(args.spool)), client)
    finally:
        client.close()
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_download(args) -> int:
    client = ApiClient(args.server, args.token)
    try:
        report = download_bundle(client, args.inspection, Path(args.dest))
    finally:
        client.close()
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_review(args) -> int:
    session = ReviewSession(Path(args.bundle_dir))
    if args.review_command == "add-defect":
        parts = args.box.split(",")
        if len(parts) != 4:
            print("--box must be x_min,y_min,x_max,y_max", file=sys.stderr)
            return EXIT_VALIDATION
        box = BoundingBox(*(int(p) for p in parts))
        added = session.add_defect(
            args.frame, args.class_name, box, _params_from(args.params)
        )
        print(json.dumps(added, indent=2))
    elif args.review_command == "delete-defect":
        removed = session.delete_defect(args.index)
        print(json.dumps(removed, indent=2))
    elif args.review_command == "save":
        session.save()
        print("saved")
    elif args.review_command == "restore-original":
        session.restore_original()
        print("restored")
    elif args.review_command == "list":
        for i, annotation in enumerate(session.current()["annotations"]):
            det = annotation["detection"]
            print(
                f"{i}\tframe={annotation['frame_index']}\t{det['class']}\t"
                f"score={det['score']:.2f}\tsource={annotation['source']}"
            )
    elif args.review_command == "push":
        client = ApiClient(args.server, args.token)
        try:
            revision = session.push(client)
        finally:
            client.close()
        print(f"pushed, revision {revision}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "login":
            return cmd_login(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "spool":
            if args.spool_command == "add":
                return cmd_spool_add(args)
            return cmd_spool_list(args)
        if args.command == "sync":
            return cmd_sync(args)
        if args.command == "download":
            return cmd_download(args)
        if args.command == "review":
            return cmd_review(args)
        return EXIT_VALIDATION
    except (ReviewError, AnalyzeInputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (AuthFailure, SyncError, httpx.HTTPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
