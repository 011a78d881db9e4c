"""Regenerate the frontend test fixtures from a seeded backend.

Run from the repository root with the backend package installed:

    python frontend/scripts/make_fixtures.py

Writes real API response payloads into frontend/tests/fixtures/ so the UI
snapshot tests assert against exactly what the server emits.
"""

import json
import sys
import tempfile
from datetime import datetime, timedelta, timezone
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))

from fastapi.testclient import TestClient

from iridescan import imaging
from iridescan.api import create_app
from iridescan.domain import (
    BoundingBox,
    DefectAnnotation,
    DefectClass,
    Detection,
    PipelineParams,
)
from iridescan.services import AppContext

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
NOW = datetime(2026, 8, 10, 12, 0, 0, tzinfo=timezone.utc)


def gray_ppm(width, height, level):
    import numpy as np

    arr = np.full((height, width, 3), level, dtype=np.uint8)
    return imaging.write_ppm(imaging.array_to_frame(arr))


def annotation(frame_index, name, source, days_ago, score=0.87):
    return DefectAnnotation(
        frame_index=frame_index,
        detection=Detection(
            BoundingBox(4, 6, 20, 18), DefectClass(name), score
        ),
        source=source,
        params=PipelineParams(flattener_window=7, rainbow_threshold=0.4),
        created_at=NOW - timedelta(days=days_ago),
    )


def main():
    with tempfile.TemporaryDirectory() as tmp:
        ctx = AppContext(tmp, clock=lambda: NOW, bootstrap_admin_password="pw")
        app = create_app(ctx, run_worker=False)
        with TestClient(app) as client:
            token = client.post(
                "/api/auth/login", json={"username": "admin", "password": "pw"}
            ).json()["token"]
            headers = {"Authorization": f"Bearer {token}"}

            seeds = [
                ("north line weld 4", 30, [("Junction", "automatic", 20)], False),
                ("delta loop joint", 65, [("Misaligned Junction", "manual", 50),
                                          ("Junction", "automatic", 40)], False),
                ("bypass segment", 120, [("Junction", "manual", 100)], False),
                ("fresh capture", 2, [("Junction", "automatic", 1),
                                      ("Junction", "manual", 1)], True),
            ]
            for title, age_days, defects, locked in seeds:
                created = ctx.entrypoint.create_inspection(
                    title, created_at=NOW - timedelta(days=age_days)
                )
                withframes = ctx.entrypoint.upload_frames(
                    created.id,
                    [gray_ppm(24, 24, 90 + i) for i in range(3)],
                )
                payload = [
                    annotation(i % 3, name, source, days)
                    for i, (name, source, days) in enumerate(defects)
                ]
                updated = ctx.entrypoint.put_defects(
                    created.id, payload, withframes.revision
                )
                if locked:
                    from dataclasses import replace

                    ctx.entrypoint._save(
                        replace(updated, locked=True), updated.revision
                    )

            FIXTURES.mkdir(parents=True, exist_ok=True)
            statistics = client.get("/api/statistics", headers=headers).json()
            (FIXTURES / "statistics.json").write_text(
                json.dumps(statistics, indent=2, sort_keys=True)
            )
            library = client.get(
                "/api/inspections?page=1&page_size=20", headers=headers
            ).json()
            (FIXTURES / "library.json").write_text(
                json.dumps(library, indent=2, sort_keys=True)
            )
            first_unlocked = next(i for i in library["items"] if not i["locked"])
            (FIXTURES / "inspection.json").write_text(
                json.dumps(first_unlocked, indent=2, sort_keys=True)
            )
            print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
