/**
 * ML system page: dataset wizard, model versions with activation, and the
 * jobs queue with cancellation.
 *
 * Retrain and activation controls render only for admins (the server
 * enforces the same rule regardless).
 */

import type { ApiClient, DatasetSummary, JobInfo, ModelVersion, UserInfo } from "../api.js";
import { clear, el, formatPercent, formatTimestamp } from "../dom.js";
import { isAdmin } from "../session.js";

export function jobRow(job: JobInfo, onCancel: (id: string) => void): HTMLElement {
  const cancellable = job.state === "queued" || job.state === "running";
  const row = el(
    "tr",
    { class: `job state-${job.state}` },
    el("td", { text: job.id }),
    el("td", { text: job.kind }),
    el("td", { class: "state", text: job.state }),
    el("td", { text: job.error ?? job.result_ref ?? "" }),
  );
  const actions = el("td", {});
  if (cancellable) {
    actions.append(
      el("button", { class: "cancel-job", text: "cancel", onclick: () => onCancel(job.id) }),
    );
  }
  row.append(actions);
  return row;
}

export class MlPage {
  constructor(
    private api: ApiClient,
    private container: HTMLElement,
    private user: UserInfo | null,
    private notify: (message: string) => void = () => {},
  ) {}

  async render(): Promise<void> {
    const [datasets, models, jobs] = await Promise.all([
      this.api.listDatasets(),
      this.api.listModels(),
      this.api.listJobs(),
    ]);
    clear(this.container);
    this.container.append(el("h2", { text: "ML system" }));
    this.container.append(this.datasetSection(datasets));
    this.container.append(this.modelSection(models));
    this.container.append(this.jobsSection(jobs));
  }

  private datasetSection(datasets: DatasetSummary[]): HTMLElement {
    const section = el("section", { class: "datasets" }, el("h3", { text: "Datasets" }));
    const table = el("table", { class: "dataset-table" });
    table.append(
      el(
        "tr",
        {},
        el("th", { text: "name" }),
        el("th", { text: "classes" }),
        el("th", { text: "images" }),
        el("th", { text: "split" }),
        el("th", { text: "" }),
      ),
    );
    for (const dataset of datasets) {
      const split =
        dataset.train_count != null
          ? `${dataset.train_count} train / ${dataset.test_count} test`
          : "unsplit";
      const actions = el("td", {});
      if (isAdmin(this.user) && dataset.train_count != null) {
        actions.append(
          el("button", {
            class: "retrain",
            text: "retrain",
            onclick: () => void this.retrain(dataset.id),
          }),
        );
      }
      table.append(
        el(
          "tr",
          { class: "dataset" },
          el("td", { text: dataset.name }),
          el("td", { text: dataset.classes.join(", ") }),
          el("td", { text: String(dataset.image_count) }),
          el("td", { text: split }),
          actions,
        ),
      );
    }
    section.append(table);

    // wizard step 1: create a named dataset with its class list
    const nameInput = el("input", { type: "text", placeholder: "dataset name" });
    const classesInput = el("input", {
      type: "text",
      placeholder: "classes, comma separated",
    });
    section.append(
      el(
        "div",
        { class: "wizard" },
        el("h4", { text: "New dataset" }),
        nameInput,
        classesInput,
        el("button", {
          text: "create",
          class: "create-dataset",
          onclick: () => {
            const classes = classesInput.value
              .split(",")
              .map((c) => c.trim())
              .filter(Boolean);
            void this.api
              .createDataset(nameInput.value.trim(), classes)
              .then(() => this.render())
              .catch((error) => this.notify(`create failed: ${error.message}`));
          },
        }),
      ),
    );
    return section;
  }

  private async retrain(datasetId: string): Promise<void> {
    try {
      const job = await this.api.startRetrain(datasetId);
      this.notify(`retrain queued as ${job.id}`);
    } catch (error) {
      this.notify(`retrain failed: ${(error as Error).message}`);
    }
    await this.render();
  }

  private modelSection(models: ModelVersion[]): HTMLElement {
    const section = el("section", { class: "models" }, el("h3", { text: "Model versions" }));
    const table = el("table", { class: "model-table" });
    table.append(
      el(
        "tr",
        {},
        el("th", { text: "version" }),
        el("th", { text: "created" }),
        el("th", { text: "accuracy" }),
        el("th", { text: "mAP" }),
        el("th", { text: "active" }),
        el("th", { text: "" }),
      ),
    );
    for (const model of models) {
      const actions = el("td", {});
      if (isAdmin(this.user) && !model.active) {
        actions.append(
          el("button", {
            class: "activate",
            text: "activate",
            onclick: () =>
              void this.api
                .activateModel(model.id)
                .then(() => this.render())
                .catch((error) => this.notify(`activate failed: ${error.message}`)),
          }),
        );
      }
      table.append(
        el(
          "tr",
          { class: model.active ? "model active" : "model" },
          el("td", { text: `${model.family} v${model.version}` }),
          el("td", { text: formatTimestamp(model.created_at) }),
          el("td", {
            text: model.metrics ? formatPercent(model.metrics.accuracy) : "—",
          }),
          el("td", {
            text: model.metrics ? model.metrics.map_score.toFixed(3) : "—",
          }),
          el("td", { text: model.active ? "yes" : "" }),
          actions,
        ),
      );
    }
    section.append(table);
    return section;
  }

  private jobsSection(jobs: JobInfo[]): HTMLElement {
    const section = el("section", { class: "jobs" }, el("h3", { text: "Jobs queue" }));
    const table = el("table", { class: "job-table" });
    table.append(
      el(
        "tr",
        {},
        el("th", { text: "id" }),
        el("th", { text: "kind" }),
        el("th", { text: "state" }),
        el("th", { text: "result / error" }),
        el("th", { text: "" }),
      ),
    );
    for (const job of jobs) {
      table.append(
        jobRow(job, (id) => {
          void this.api
            .cancelJob(id)
            .then(() => this.render())
            .catch((error) => this.notify(`cancel failed: ${error.message}`));
        }),
      );
    }
    section.append(table);
    section.append(
      el("button", { class: "refresh-jobs", text: "refresh", onclick: () => void this.render() }),
    );
    return section;
  }
}
