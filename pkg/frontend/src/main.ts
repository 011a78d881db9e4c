/**
 * Application bootstrap: session restore, navigation, hash routing.
 *
 * Routes: #/library (default), #/timeline/<id>, #/statistics, #/ml,
 * #/tags, #/users, #/login. A 401 from any API call clears the session
 * and redirects to login.
 */

import { ApiClient, ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import { renderLibrary } from "./pages/library.js";
import { renderLogin } from "./pages/login.js";
import { MlPage } from "./pages/ml.js";
import { renderStatistics } from "./pages/statistics.js";
import { TagsPage } from "./pages/tags.js";
import { TimelinePage } from "./pages/timeline.js";
import { UsersPage } from "./pages/users.js";
import { clearSession, isAdmin, storedToken, storedUser } from "./session.js";

const api = new ApiClient("", storedToken());

function notify(message: string): void {
  const bar = document.getElementById("notice");
  if (bar) {
    bar.textContent = message;
    bar.classList.add("visible");
    setTimeout(() => bar.classList.remove("visible"), 6000);
  }
}

function navigate(hash: string): void {
  window.location.hash = hash;
}

function renderNav(container: HTMLElement): void {
  const user = storedUser();
  clear(container);
  const links: [string, string][] = [
    ["#/library", "Library"],
    ["#/statistics", "Statistics"],
    ["#/ml", "ML system"],
    ["#/tags", "Tags"],
  ];
  if (isAdmin(user)) links.push(["#/users", "Users"]);
  for (const [href, label] of links) {
    container.append(el("a", { href, class: "nav-link", text: label }));
  }
  if (user) {
    container.append(
      el("span", { class: "whoami", text: `${user.username} (${user.role})` }),
      el("button", {
        class: "logout",
        text: "log out",
        onclick: () => {
          void api.logout().catch(() => {});
          clearSession();
          api.token = null;
          navigate("#/login");
        },
      }),
    );
  }
}

async function route(): Promise<void> {
  const main = document.getElementById("main");
  const nav = document.getElementById("nav");
  if (!main || !nav) return;
  renderNav(nav);
  const hash = window.location.hash || "#/library";
  if (!storedToken() && hash !== "#/login") {
    navigate("#/login");
    return;
  }
  try {
    if (hash === "#/login") {
      renderLogin(main, api, () => navigate("#/library"));
    } else if (hash.startsWith("#/timeline/")) {
      const inspectionId = hash.slice("#/timeline/".length);
      const [inspection, classes] = await Promise.all([
        api.getInspection(inspectionId),
        api.getDefectClasses(),
      ]);
      await new TimelinePage(api, main, inspection, classes.classes, notify).render();
    } else if (hash.startsWith("#/statistics")) {
      const source = hash.includes("source=manual")
        ? "manual"
        : hash.includes("source=automatic")
          ? "automatic"
          : "";
      const payload = await api.statistics(source === "" ? undefined : source);
      renderStatistics(
        main,
        payload,
        (next) => navigate(next ? `#/statistics?source=${next}` : "#/statistics"),
        source,
      );
    } else if (hash === "#/ml") {
      await new MlPage(api, main, storedUser(), notify).render();
    } else if (hash === "#/tags") {
      await new TagsPage(api, main, notify).render();
    } else if (hash === "#/users") {
      await new UsersPage(api, main, notify).render();
    } else {
      const match = hash.match(/#\/library(?:\/page\/(\d+))?/);
      const page = match?.[1] ? parseInt(match[1], 10) : 1;
      const payload = await api.listInspections(page, 20);
      renderLibrary(main, payload, {
        open: (id) => navigate(`#/timeline/${id}`),
        goToPage: (next) => navigate(`#/library/page/${next}`),
      });
    }
  } catch (error) {
    if (error instanceof ApiError && error.status === 401) {
      clearSession();
      api.token = null;
      navigate("#/login");
      return;
    }
    clear(main).append(
      el("p", { class: "error", text: `error: ${(error as Error).message}` }),
    );
  }
}

window.addEventListener("hashchange", () => void route());
window.addEventListener("DOMContentLoaded", () => void route());
