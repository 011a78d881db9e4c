// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import type { Annotation, Inspection } from "../src/api.js";
import {
  addManualDefect,
  buildSaveRequest,
  deleteDefect,
  initialState,
  overlaysForFrame,
} from "../src/pages/timeline.js";

import inspectionFixture from "./fixtures/inspection.json";

const INSPECTION = inspectionFixture as unknown as Inspection;

const PARAMS = {
  flattener_window: 7,
  rainbow_threshold: 0.4,
  min_region_area: 25,
  nms_iou_threshold: 0.5,
};

describe("timeline state", () => {
  it("overlays cover exactly the current frame", () => {
    const state = initialState(INSPECTION);
    for (let frame = 0; frame < INSPECTION.frame_refs.length; frame++) {
      const overlays = overlaysForFrame({ ...state, frameIndex: frame });
      const expected = INSPECTION.annotations.filter(
        (a: Annotation) => a.frame_index === frame,
      );
      expect(overlays.map((o) => o.annotation)).toEqual(expected);
    }
  });

  it("tagging a defect attaches the params snapshot and manual source", () => {
    const state = initialState(INSPECTION);
    const tagged = addManualDefect(
      { ...state, frameIndex: 1 },
      "Misaligned Junction",
      { x_min: 2, y_min: 3, x_max: 10, y_max: 12 },
      PARAMS,
      "2026-08-10T12:00:00Z",
    );
    const added = tagged.working[tagged.working.length - 1];
    expect(added.source).toBe("manual");
    expect(added.params).toEqual(PARAMS);
    expect(added.frame_index).toBe(1);
    expect(added.screenshot_ref).toBe(INSPECTION.frame_refs[1]);
    expect(tagged.dirty).toBe(true);
  });

  it("saving issues put_defects with the expected revision and snapshots", () => {
    let state = initialState(INSPECTION);
    state = addManualDefect(
      state,
      "Junction",
      { x_min: 0, y_min: 0, x_max: 5, y_max: 5 },
      PARAMS,
      "2026-08-10T12:00:00Z",
    );
    const request = buildSaveRequest(state);
    expect(request.expected_revision).toBe(INSPECTION.revision);
    expect(request.annotations.length).toBe(INSPECTION.annotations.length + 1);
    for (const annotation of request.annotations) {
      expect(annotation.params).toBeDefined();
      expect(Object.keys(annotation.params).sort()).toEqual([
        "flattener_window",
        "min_region_area",
        "nms_iou_threshold",
        "rainbow_threshold",
      ]);
    }
  });

  it("delete removes exactly one annotation and marks the state dirty", () => {
    const state = initialState(INSPECTION);
    const after = deleteDefect(state, 0);
    expect(after.working.length).toBe(state.working.length - 1);
    expect(after.working).toEqual(state.working.slice(1));
    expect(after.dirty).toBe(true);
  });

  it("add then delete restores the original list", () => {
    const state = initialState(INSPECTION);
    const added = addManualDefect(
      state,
      "Junction",
      { x_min: 0, y_min: 0, x_max: 4, y_max: 4 },
      PARAMS,
      "2026-08-10T12:00:00Z",
    );
    const reverted = deleteDefect(added, added.working.length - 1);
    expect(reverted.working).toEqual(state.working);
  });
});
