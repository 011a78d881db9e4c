/** Tags editor: per-inspection tag lists plus the distinct-tag overview. */

import type { ApiClient, InspectionPage } from "../api.js";
import { clear, el } from "../dom.js";

export class TagsPage {
  constructor(
    private api: ApiClient,
    private container: HTMLElement,
    private notify: (message: string) => void = () => {},
  ) {}

  async render(): Promise<void> {
    const [page, tags] = await Promise.all([
      this.api.listInspections(1, 100),
      this.api.listTags(),
    ]);
    clear(this.container);
    this.container.append(el("h2", { text: "Tags" }));
    this.container.append(
      el("p", {
        class: "all-tags",
        text: tags.tags.length ? `in use: ${tags.tags.join(", ")}` : "no tags yet",
      }),
    );
    this.container.append(this.editor(page));
  }

  private editor(page: InspectionPage): HTMLElement {
    const table = el("table", { class: "tags-table" });
    table.append(
      el("tr", {}, el("th", { text: "inspection" }), el("th", { text: "tags" }),
         el("th", { text: "" })),
    );
    for (const inspection of page.items) {
      const input = el("input", {
        type: "text",
        value: inspection.tags.join(", "),
        ...(inspection.locked ? { disabled: "true" } : {}),
      });
      const save = el("button", {
        text: "save tags",
        ...(inspection.locked ? { disabled: "true" } : {}),
        onclick: () => {
          const tags = input.value
            .split(",")
            .map((t) => t.trim())
            .filter(Boolean);
          void this.api
            .tagInspection(inspection.id, tags, inspection.revision)
            .then(() => this.render())
            .catch((error) => this.notify(`tagging failed: ${error.message}`));
        },
      });
      table.append(
        el(
          "tr",
          { class: inspection.locked ? "locked" : "" },
          el("td", { text: inspection.title }),
          el("td", {}, input),
          el("td", {}, save),
        ),
      );
    }
    return table;
  }
}
