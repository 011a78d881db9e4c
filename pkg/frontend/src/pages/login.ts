/** Login form; a successful login stores the session and redirects. */

import type { ApiClient } from "../api.js";
import { clear, el } from "../dom.js";
import { saveSession } from "../session.js";

export function renderLogin(
  container: HTMLElement,
  api: ApiClient,
  onLoggedIn: () => void,
): void {
  clear(container);
  const username = el("input", { type: "text", placeholder: "username", class: "username" });
  const password = el("input", { type: "password", placeholder: "password", class: "password" });
  const message = el("p", { class: "login-message" });
  container.append(
    el(
      "div",
      { class: "login-box" },
      el("h2", { text: "Sign in" }),
      username,
      password,
      el("button", {
        text: "log in",
        class: "login-button",
        onclick: () => {
          void api
            .login(username.value.trim(), password.value)
            .then((record) => {
              saveSession(record.token, {
                username: record.username,
                role: record.role,
              });
              onLoggedIn();
            })
            .catch((error) => {
              message.textContent = `login failed: ${error.message}`;
            });
        },
      }),
      message,
    ),
  );
}
