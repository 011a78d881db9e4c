"""Offline inspection analysis: the three field blocks run locally.

Per frame: illumination flattening, rainbow scoring (an alert line is
emitted when the frame score reaches the configured threshold), region
proposal, and, when a model file is given, defect classification.

The run is fully deterministic: the annotation timestamp defaults to the
Unix epoch so repeated runs over the same inputs are byte-identical; pass
an explicit timestamp when wall-clock stamps are wanted.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .. import detect, imaging
from ..domain import (
    DefectAnnotation,
    PipelineParams,
    SOURCE_AUTOMATIC,
    canonical_bytes,
    format_timestamp,
)

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class AnalyzeInputError(Exception):
    """An input frame or the model file could not be read."""


def load_params(path: Path) -> PipelineParams:
    import json

    try:
        return PipelineParams.from_dict(json.loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise AnalyzeInputError(f"cannot read params file {path}: {exc}") from None


def load_model(path: Path) -> detect.HistogramModel:
    import json

    try:
        return detect.HistogramModel.from_dict(json.loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise AnalyzeInputError(f"cannot read model file {path}: {exc}") from None


def list_input_frames(input_dir: Path) -> list[Path]:
    paths = sorted(Path(input_dir).glob("*.ppm"))
    if not paths:
        raise AnalyzeInputError(f"no .ppm frames in {input_dir}")
    return paths


def run_analyze(
    input_dir: Path,
    params: PipelineParams,
    model: detect.HistogramModel | None = None,
    timestamp: datetime = EPOCH,
) -> dict:
    """Analyze numbered PPM frames; returns the output document."""
    alerts = []
    proposals_out = []
    annotations = []
    frame_paths = list_input_frames(input_dir)
    for frame_index, path in enumerate(frame_paths):
        try:
            frame = imaging.read_ppm(path.read_bytes())
        except (OSError, ValueError) as exc:
            raise AnalyzeInputError(f"unreadable frame {path}: {exc}") from None
        imaging.flatten(frame, params.flattener_window)  # illumination pre-step
        mask = imaging.rainbow_mask(frame, params.flattener_window)
        score = imaging.frame_rainbow_score(mask)
        alerts.append(
            {
                "frame_index": frame_index,
                "file": path.name,
                "score": score,
                "alert": score >= params.rainbow_threshold,
            }
        )
        for proposal in imaging.propose_regions(
            mask, params.rainbow_threshold, params.min_region_area
        ):
            proposals_out.append(
                {
                    "frame_index": frame_index,
                    "box": proposal.box.to_dict(),
                    "mean_score": proposal.mean_score,
                    "area": proposal.area,
                }
            )
        if model is not None:
            for detection in detect.predict_with_model(model, frame):
                annotations.append(
                    DefectAnnotation(
                        frame_index=frame_index,
                        detection=detection,
                        source=SOURCE_AUTOMATIC,
                        params=params,
                        created_at=timestamp,
                    ).to_dict()
                )
    return {
        "params": params.to_dict(),
        "frame_count": len(frame_paths),
        "generated_at": format_timestamp(timestamp),
        "alerts": alerts,
        "proposals": proposals_out,
        "annotations": annotations,
    }


def write_outputs(result: dict, out_path: Path, alert_log_path: Path | None = None) -> None:
    out_path = Path(out_path)
    out_path.write_bytes(canonical_bytes(result))
    if alert_log_path is None:
        alert_log_path = out_path.with_suffix(out_path.suffix + ".alerts")
    lines = [
        f"frame={a['frame_index']:05d} file={a['file']} score={a['score']!r} "
        f"alert={'yes' if a['alert'] else 'no'}"
        for a in result["alerts"]
    ]
    Path(alert_log_path).write_text("\n".join(lines) + "\n")
