/**
 * Statistics page: top defect classes (trailing 90 days) and the monthly
 * defect rate (12 trailing months), drawn as inline SVG charts.
 *
 * The chart data mappers are identities over the endpoint payload: every
 * bar and point is traceable to exactly one response field.
 */

import type { StatisticsPayload } from "../api.js";
import { clear, el } from "../dom.js";

export interface BarDatum {
  label: string;
  value: number;
}

export function topDefectsChartData(payload: StatisticsPayload): BarDatum[] {
  return payload.top_defects.map((row) => ({ label: row.class, value: row.count }));
}

export function monthlyRateChartData(payload: StatisticsPayload): BarDatum[] {
  return payload.monthly_defect_rate.map((row) => ({
    label: row.month,
    value: row.rate,
  }));
}

const SVG_NS = "http://www.w3.org/2000/svg";

function barChart(
  data: BarDatum[],
  options: { width?: number; height?: number; maxValue?: number; format?: (v: number) => string },
): SVGSVGElement {
  const width = options.width ?? 520;
  const height = options.height ?? 180;
  const format = options.format ?? ((v: number) => String(v));
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "chart");
  if (!data.length) return svg;
  const max = options.maxValue ?? Math.max(...data.map((d) => d.value), 1e-9);
  const barWidth = width / data.length;
  data.forEach((datum, i) => {
    const barHeight = max > 0 ? ((height - 40) * datum.value) / max : 0;
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(i * barWidth + 4));
    rect.setAttribute("y", String(height - 24 - barHeight));
    rect.setAttribute("width", String(Math.max(barWidth - 8, 2)));
    rect.setAttribute("height", String(Math.max(barHeight, 0)));
    rect.setAttribute("class", "bar");
    rect.setAttribute("data-label", datum.label);
    rect.setAttribute("data-value", String(datum.value));
    svg.append(rect);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(i * barWidth + barWidth / 2));
    label.setAttribute("y", String(height - 10));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("class", "bar-label");
    label.textContent = datum.label;
    svg.append(label);

    const value = document.createElementNS(SVG_NS, "text");
    value.setAttribute("x", String(i * barWidth + barWidth / 2));
    value.setAttribute("y", String(Math.max(height - 28 - barHeight, 12)));
    value.setAttribute("text-anchor", "middle");
    value.setAttribute("class", "bar-value");
    value.textContent = format(datum.value);
    svg.append(value);
  });
  return svg;
}

export function renderStatistics(
  container: HTMLElement,
  payload: StatisticsPayload,
  onFilterChange: (source: "" | "manual" | "automatic") => void,
  activeSource: "" | "manual" | "automatic" = "",
): void {
  clear(container);
  container.append(el("h2", { text: "Statistics" }));

  const filter = el("select", {
    class: "source-filter",
    onchange: (event) =>
      onFilterChange((event.target as HTMLSelectElement).value as "" | "manual" | "automatic"),
  });
  for (const [value, text] of [
    ["", "all annotations"],
    ["manual", "manual only"],
    ["automatic", "automatic only"],
  ] as const) {
    const option = el("option", { value, text });
    if (value === activeSource) option.setAttribute("selected", "selected");
    filter.append(option);
  }
  container.append(el("div", { class: "filter-bar" }, "source: ", filter));

  const top = el("section", { class: "top-defects" });
  top.append(el("h3", { text: "Top defects · last 90 days" }));
  const topData = topDefectsChartData(payload);
  top.append(
    topData.length
      ? barChart(topData, {})
      : el("p", { class: "empty", text: "no defects in the window" }),
  );
  container.append(top);

  const monthly = el("section", { class: "monthly-rate" });
  monthly.append(el("h3", { text: "Inspections with defects · monthly, last 12 months" }));
  monthly.append(
    barChart(monthlyRateChartData(payload), {
      maxValue: 1,
      format: (v) => `${Math.round(v * 100)}%`,
    }),
  );
  container.append(monthly);
}
