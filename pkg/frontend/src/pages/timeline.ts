/**
 * Frame timeline with defect overlays: the semi-automatic annotation page.
 *
 * Overlays show annotations of exactly the current frame, color-coded by
 * source, each with its confidence percentage. Selecting a defect fills
 * the parameter panel with the pipeline snapshot it was saved under.
 *
 * Editing happens on a local working list; "save" uploads the whole list
 * through put_defects with the expected revision (a conflict surfaces a
 * reload-and-retry prompt), "restore" re-fetches the server copy, undoing
 * every local change.
 */

import type { Annotation, ApiClient, Box, Inspection, PipelineParams } from "../api.js";
import { ApiError } from "../api.js";
import { clear, el, formatPercent } from "../dom.js";
import { decodePpm } from "../ppm.js";

export interface TimelineState {
  inspection: Inspection;
  frameIndex: number;
  working: Annotation[];
  selected: number | null;
  dirty: boolean;
}

export function initialState(inspection: Inspection): TimelineState {
  return {
    inspection,
    frameIndex: 0,
    working: [...inspection.annotations],
    selected: inspection.annotations.length ? 0 : null,
    dirty: false,
  };
}

/** Annotations shown on the current frame, as (working index, annotation). */
export function overlaysForFrame(
  state: TimelineState,
): { index: number; annotation: Annotation }[] {
  return state.working
    .map((annotation, index) => ({ index, annotation }))
    .filter(({ annotation }) => annotation.frame_index === state.frameIndex);
}

export function addManualDefect(
  state: TimelineState,
  className: string,
  box: Box,
  params: PipelineParams,
  createdAt: string,
): TimelineState {
  const annotation: Annotation = {
    frame_index: state.frameIndex,
    detection: { box, class: className, score: 1.0 },
    source: "manual",
    params,
    screenshot_ref: state.inspection.frame_refs[state.frameIndex] ?? null,
    created_at: createdAt,
  };
  return {
    ...state,
    working: [...state.working, annotation],
    selected: state.working.length,
    dirty: true,
  };
}

export function deleteDefect(state: TimelineState, index: number): TimelineState {
  const working = state.working.filter((_, i) => i !== index);
  return { ...state, working, selected: null, dirty: true };
}

export function buildSaveRequest(state: TimelineState): {
  annotations: Annotation[];
  expected_revision: number;
} {
  return {
    annotations: state.working,
    expected_revision: state.inspection.revision,
  };
}

const SOURCE_COLORS: Record<string, string> = {
  manual: "#e8871e",
  automatic: "#2aa6b8",
};

export class TimelinePage {
  state: TimelineState;

  constructor(
    private api: ApiClient,
    private container: HTMLElement,
    inspection: Inspection,
    private defectClasses: string[],
    private notify: (message: string) => void = () => {},
  ) {
    this.state = initialState(inspection);
  }

  async render(): Promise<void> {
    const { state } = this;
    clear(this.container);
    this.container.append(
      el("h2", { text: `Timeline · ${state.inspection.title}` }),
    );

    const frameCount = state.inspection.frame_refs.length;
    const stage = el("div", { class: "stage" });
    const canvas = el("canvas", { class: "frame-canvas" });
    const overlayLayer = el("div", { class: "overlays" });
    stage.append(canvas, overlayLayer);
    this.container.append(stage);

    if (frameCount > 0) {
      await this.drawFrame(canvas);
    } else {
      stage.append(el("p", { class: "empty", text: "no frames uploaded" }));
    }
    this.renderOverlays(overlayLayer, canvas);

    // timeline scrubber
    const scrubber = el("div", { class: "timeline-bar" });
    scrubber.append(
      el("button", {
        text: "previous frame",
        onclick: () => this.jump(state.frameIndex - 1),
      }),
      el("input", {
        type: "range",
        min: "0",
        max: String(Math.max(0, frameCount - 1)),
        value: String(state.frameIndex),
        oninput: (event) =>
          this.jump(parseInt((event.target as HTMLInputElement).value, 10)),
      }),
      el("button", {
        text: "next frame",
        onclick: () => this.jump(state.frameIndex + 1),
      }),
      el("span", {
        class: "frame-label",
        text: ` frame ${state.frameIndex + 1} / ${frameCount}`,
      }),
    );
    this.container.append(scrubber);

    this.container.append(this.defectListPanel());
    this.container.append(this.paramsPanel());
    this.container.append(this.addDefectForm());
    this.container.append(this.actionBar());
  }

  private async drawFrame(canvas: HTMLCanvasElement): Promise<void> {
    try {
      const buffer = await this.api.getFrame(
        this.state.inspection.id,
        this.state.frameIndex,
      );
      const decoded = decodePpm(buffer);
      canvas.width = decoded.width;
      canvas.height = decoded.height;
      const context = canvas.getContext("2d");
      if (context) {
        context.putImageData(
          new ImageData(decoded.rgba, decoded.width, decoded.height),
          0,
          0,
        );
      }
    } catch (error) {
      this.notify(`frame load failed: ${(error as Error).message}`);
    }
  }

  private renderOverlays(layer: HTMLElement, canvas: HTMLCanvasElement): void {
    clear(layer);
    const width = canvas.width || 1;
    const height = canvas.height || 1;
    for (const { index, annotation } of overlaysForFrame(this.state)) {
      const box = annotation.detection.box;
      const style =
        `left:${(100 * box.x_min) / width}%;` +
        `top:${(100 * box.y_min) / height}%;` +
        `width:${(100 * (box.x_max - box.x_min)) / width}%;` +
        `height:${(100 * (box.y_max - box.y_min)) / height}%;` +
        `border-color:${SOURCE_COLORS[annotation.source] ?? "#999"}`;
      layer.append(
        el(
          "div",
          {
            class: `overlay source-${annotation.source}` +
              (index === this.state.selected ? " selected" : ""),
            style,
            onclick: () => {
              this.state = { ...this.state, selected: index };
              void this.render();
            },
          },
          el("span", {
            class: "overlay-label",
            text: `${annotation.detection.class} ${formatPercent(annotation.detection.score)}`,
          }),
        ),
      );
    }
  }

  private defectListPanel(): HTMLElement {
    const panel = el("div", { class: "defect-list" }, el("h3", { text: "Defects" }));
    const list = el("ul", {});
    this.state.working.forEach((annotation, index) => {
      const row = el(
        "li",
        {
          class:
            `defect source-${annotation.source}` +
            (index === this.state.selected ? " selected" : ""),
        },
        el("button", {
          class: "defect-open",
          text:
            `frame ${annotation.frame_index + 1} · ${annotation.detection.class} · ` +
            `${formatPercent(annotation.detection.score)} · ${annotation.source}`,
          onclick: () => {
            this.state = {
              ...this.state,
              selected: index,
              frameIndex: annotation.frame_index,
            };
            void this.render();
          },
        }),
        el("button", {
          class: "defect-delete",
          text: "delete",
          onclick: () => {
            this.state = deleteDefect(this.state, index);
            void this.render();
          },
        }),
      );
      list.append(row);
    });
    if (!this.state.working.length) {
      list.append(el("li", { class: "empty", text: "no defects" }));
    }
    panel.append(list);
    return panel;
  }

  private paramsPanel(): HTMLElement {
    const panel = el("div", { class: "params-panel" }, el("h3", { text: "Parameters" }));
    const selected =
      this.state.selected !== null ? this.state.working[this.state.selected] : null;
    if (!selected) {
      panel.append(el("p", { class: "empty", text: "select a defect to see its snapshot" }));
      return panel;
    }
    const params = selected.params;
    const rows: [string, string][] = [
      ["flattener window", String(params.flattener_window)],
      ["rainbow threshold", String(params.rainbow_threshold)],
      ["min region area", String(params.min_region_area)],
      ["NMS IoU threshold", String(params.nms_iou_threshold)],
    ];
    const table = el("table", { class: "params-table" });
    for (const [label, value] of rows) {
      table.append(
        el("tr", {}, el("td", { text: label }), el("td", { class: "value", text: value })),
      );
    }
    panel.append(table);
    return panel;
  }

  private addDefectForm(): HTMLElement {
    const classSelect = el("select", { class: "class-select" });
    for (const name of this.defectClasses) {
      classSelect.append(el("option", { value: name, text: name }));
    }
    const boxInput = el("input", {
      type: "text",
      class: "box-input",
      placeholder: "x_min,y_min,x_max,y_max",
    });
    return el(
      "div",
      { class: "add-defect" },
      el("h3", { text: "Tag defect on this frame" }),
      classSelect,
      boxInput,
      el("button", {
        text: "tag defect",
        class: "tag-button",
        onclick: () => {
          const parts = boxInput.value.split(",").map((p) => parseInt(p.trim(), 10));
          if (parts.length !== 4 || parts.some((n) => !Number.isFinite(n))) {
            this.notify("box must be x_min,y_min,x_max,y_max");
            return;
          }
          const [x_min, y_min, x_max, y_max] = parts;
          this.state = addManualDefect(
            this.state,
            classSelect.value,
            { x_min, y_min, x_max, y_max },
            // manual tags carry the operator's current pipeline parameters
            this.currentParams(),
            new Date().toISOString().replace(/\.\d+Z$/, "Z"),
          );
          void this.render();
        },
      }),
    );
  }

  private currentParams(): PipelineParams {
    const selected =
      this.state.selected !== null ? this.state.working[this.state.selected] : null;
    return (
      selected?.params ?? {
        flattener_window: 15,
        rainbow_threshold: 0.5,
        min_region_area: 25,
        nms_iou_threshold: 0.5,
      }
    );
  }

  private actionBar(): HTMLElement {
    return el(
      "div",
      { class: "actions" },
      el("button", {
        class: "save-button",
        text: this.state.dirty ? "save defect list *" : "save defect list",
        onclick: () => void this.save(),
      }),
      el("button", {
        class: "restore-button",
        text: "restore original",
        onclick: () => void this.restore(),
      }),
    );
  }

  async save(): Promise<void> {
    const request = buildSaveRequest(this.state);
    try {
      const { revision } = await this.api.putDefects(
        this.state.inspection.id,
        request.annotations,
        request.expected_revision,
      );
      this.state = {
        ...this.state,
        inspection: { ...this.state.inspection, revision },
        dirty: false,
      };
      this.notify("defect list saved");
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.notify(
          `someone else changed this inspection (revision ${error.currentRevision}); ` +
            "reload and retry",
        );
      } else {
        this.notify(`save failed: ${(error as Error).message}`);
      }
    }
    await this.render();
  }

  async restore(): Promise<void> {
    const fresh = await this.api.getInspection(this.state.inspection.id);
    this.state = { ...initialState(fresh), frameIndex: this.state.frameIndex };
    this.notify("restored the server defect list");
    await this.render();
  }

  jump(frameIndex: number): void {
    const count = this.state.inspection.frame_refs.length;
    if (frameIndex < 0 || frameIndex >= count) return;
    this.state = { ...this.state, frameIndex };
    void this.render();
  }
}
