import json
from dataclasses import replace
from datetime import datetime, timezone

import pytest

from iridescan.domain import (
    BoundingBox,
    DefectAnnotation,
    DefectClass,
    Detection,
    Frame,
    Inspection,
    PipelineParams,
    canonical_dumps,
    format_timestamp,
    parse_timestamp,
    validate_inspection,
)

TS = datetime(2026, 3, 14, 9, 26, 53, tzinfo=timezone.utc)


def make_annotation(frame_index=0, score=0.75, source="manual", box=None):
    return DefectAnnotation(
        frame_index=frame_index,
        detection=Detection(
            box=box or BoundingBox(1, 2, 5, 9),
            cls=DefectClass("Junction"),
            score=score,
        ),
        source=source,
        params=PipelineParams(),
        created_at=TS,
    )


def make_inspection(**overrides):
    base = Inspection(
        id="insp-1",
        title="weld pass 4",
        created_at=TS,
        frame_refs=("blob-a", "blob-b", "blob-c"),
        annotations=(make_annotation(),),
        tags=("north-line",),
        revision=3,
    )
    return replace(base, **overrides) if overrides else base


class TestTimestamps:
    def test_round_trip_seconds(self):
        assert parse_timestamp(format_timestamp(TS)) == TS

    def test_round_trip_microseconds(self):
        ts = TS.replace(microsecond=125000)
        assert parse_timestamp(format_timestamp(ts)) == ts

    def test_z_suffix(self):
        assert format_timestamp(TS).endswith("Z")
        assert parse_timestamp("2026-03-14T09:26:53Z") == TS

    def test_naive_treated_as_utc(self):
        assert format_timestamp(TS.replace(tzinfo=None)) == format_timestamp(TS)


class TestSerializationRoundTrip:
    def test_bounding_box(self):
        box = BoundingBox(0, 1, 10, 20)
        assert BoundingBox.from_dict(box.to_dict()) == box

    def test_detection(self):
        det = Detection(BoundingBox(0, 0, 4, 4), DefectClass("Junction"), 0.5)
        assert Detection.from_dict(det.to_dict()) == det
        assert det.to_dict()["class"] == "Junction"

    def test_params(self):
        params = PipelineParams(7, 0.25, 9, 0.4)
        assert PipelineParams.from_dict(params.to_dict()) == params

    def test_annotation(self):
        ann = make_annotation()
        assert DefectAnnotation.from_dict(ann.to_dict()) == ann

    def test_inspection(self):
        insp = make_inspection()
        assert Inspection.from_dict(insp.to_dict()) == insp

    def test_frame(self):
        frame = Frame(2, 1, bytes([1, 2, 3, 250, 251, 252]))
        assert Frame.from_dict(frame.to_dict()) == frame

    def test_canonical_json_is_stable(self):
        insp = make_inspection()
        text = canonical_dumps(insp.to_dict())
        again = canonical_dumps(Inspection.from_dict(json.loads(text)).to_dict())
        assert text == again


class TestFrameStructure:
    def test_pixel_count_must_match(self):
        with pytest.raises(ValueError):
            Frame(2, 2, bytes(11))

    def test_dimensions_positive(self):
        with pytest.raises(ValueError):
            Frame(0, 1, b"")

    def test_at(self):
        frame = Frame(2, 2, bytes(range(12)))
        assert frame.at(1, 1) == (9, 10, 11)


class TestValidateInspection:
    def test_well_formed(self):
        assert validate_inspection(make_inspection()) == []

    def test_frame_index_at_count_is_out_of_range(self):
        insp = make_inspection(annotations=(make_annotation(frame_index=3),))
        violations = validate_inspection(insp)
        assert any("frame_index out of range" in v for v in violations)

    def test_score_above_one(self):
        insp = make_inspection(annotations=(make_annotation(score=1.5),))
        violations = validate_inspection(insp)
        assert any("score out of [0,1]" in v for v in violations)

    def test_each_single_mutation_is_caught(self):
        bad_box = BoundingBox(5, 2, 5, 9)  # empty in x
        cases = [
            make_inspection(id=""),
            make_inspection(revision=-1),
            make_inspection(annotations=(make_annotation(frame_index=-1),)),
            make_inspection(annotations=(make_annotation(score=-0.1),)),
            make_inspection(annotations=(make_annotation(source="guess"),)),
            make_inspection(annotations=(make_annotation(box=bad_box),)),
            make_inspection(
                annotations=(
                    replace(make_annotation(), params=PipelineParams(flattener_window=4)),
                )
            ),
            make_inspection(
                annotations=(
                    replace(make_annotation(), params=PipelineParams(rainbow_threshold=1.5)),
                )
            ),
            make_inspection(
                annotations=(
                    replace(make_annotation(), params=PipelineParams(min_region_area=0)),
                )
            ),
        ]
        for case in cases:
            assert validate_inspection(case), f"mutation not caught: {case}"

    def test_bundle_dict_excludes_server_fields(self):
        bundle = make_inspection().to_bundle_dict()
        assert "locked" not in bundle and "revision" not in bundle
