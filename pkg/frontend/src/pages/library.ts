/**
 * Inspections library: newest first, paginated.
 *
 * A locked inspection (analysis still pending) renders as a non-clickable
 * row: no click handler, no link, aria-disabled. Unlocked rows open the
 * timeline.
 */

import type { Inspection, InspectionPage } from "../api.js";
import { clear, el, formatTimestamp } from "../dom.js";

export interface LibraryHandlers {
  open: (inspectionId: string) => void;
  goToPage: (page: number) => void;
}

export function libraryRow(
  inspection: Inspection,
  handlers: LibraryHandlers,
): HTMLElement {
  const summary = `${inspection.frame_refs.length} frames · ` +
    `${inspection.annotations.length} defects`;
  const tags = inspection.tags.length ? `tags: ${inspection.tags.join(", ")}` : "";
  if (inspection.locked) {
    return el(
      "li",
      { class: "inspection locked", "aria-disabled": "true" },
      el("span", { class: "title", text: inspection.title }),
      el("span", { class: "meta", text: `${summary} · analysis running` }),
      el("span", { class: "lock-badge", text: "locked" }),
    );
  }
  return el(
    "li",
    {
      class: "inspection unlocked",
      role: "button",
      tabindex: "0",
      onclick: () => handlers.open(inspection.id),
    },
    el("span", { class: "title", text: inspection.title }),
    el("span", {
      class: "meta",
      text: `${summary} · ${formatTimestamp(inspection.created_at)} ${tags}`,
    }),
  );
}

export function renderLibrary(
  container: HTMLElement,
  page: InspectionPage,
  handlers: LibraryHandlers,
): void {
  clear(container);
  container.append(el("h2", { text: "Inspections Library" }));
  const list = el("ul", { class: "library" });
  for (const inspection of page.items) {
    list.append(libraryRow(inspection, handlers));
  }
  if (!page.items.length) {
    list.append(el("li", { class: "empty", text: "no inspections yet" }));
  }
  container.append(list);

  const lastPage = Math.max(1, Math.ceil(page.total / page.page_size));
  const pager = el("div", { class: "pager" });
  pager.append(
    el("button", {
      text: "previous",
      ...(page.page <= 1 ? { disabled: "true" } : {}),
      onclick: () => handlers.goToPage(page.page - 1),
    }),
    el("span", { text: ` page ${page.page} / ${lastPage} (${page.total} total) ` }),
    el("button", {
      text: "next",
      ...(page.page >= lastPage ? { disabled: "true" } : {}),
      onclick: () => handlers.goToPage(page.page + 1),
    }),
  );
  container.append(pager);
}
