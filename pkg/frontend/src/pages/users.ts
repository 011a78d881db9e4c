/** User administration (admin only): create users, change roles/passwords. */

import type { ApiClient, UserInfo } from "../api.js";
import { clear, el } from "../dom.js";

export class UsersPage {
  constructor(
    private api: ApiClient,
    private container: HTMLElement,
    private notify: (message: string) => void = () => {},
  ) {}

  async render(): Promise<void> {
    const users = await this.api.listUsers();
    clear(this.container);
    this.container.append(el("h2", { text: "Users" }));
    this.container.append(this.table(users));
    this.container.append(this.createForm());
  }

  private table(users: UserInfo[]): HTMLElement {
    const table = el("table", { class: "users-table" });
    table.append(
      el("tr", {}, el("th", { text: "username" }), el("th", { text: "role" }),
         el("th", { text: "" })),
    );
    for (const user of users) {
      const roleSelect = el("select", {});
      for (const role of ["operator", "admin"]) {
        const option = el("option", { value: role, text: role });
        if (role === user.role) option.setAttribute("selected", "selected");
        roleSelect.append(option);
      }
      const passwordInput = el("input", {
        type: "password",
        placeholder: "new password",
      });
      table.append(
        el(
          "tr",
          {},
          el("td", { text: user.username }),
          el("td", {}, roleSelect),
          el(
            "td",
            {},
            el("button", {
              text: "set role",
              onclick: () =>
                void this.api
                  .setUserRole(user.username, roleSelect.value)
                  .then(() => this.render())
                  .catch((error) => this.notify(`role change failed: ${error.message}`)),
            }),
            passwordInput,
            el("button", {
              text: "set password",
              onclick: () =>
                void this.api
                  .setUserPassword(user.username, passwordInput.value)
                  .then(() => this.notify(`password changed for ${user.username}`))
                  .catch((error) => this.notify(`password change failed: ${error.message}`)),
            }),
          ),
        ),
      );
    }
    return table;
  }

  private createForm(): HTMLElement {
    const username = el("input", { type: "text", placeholder: "username" });
    const password = el("input", { type: "password", placeholder: "password" });
    const role = el("select", {});
    role.append(el("option", { value: "operator", text: "operator" }));
    role.append(el("option", { value: "admin", text: "admin" }));
    return el(
      "div",
      { class: "create-user" },
      el("h3", { text: "Register user" }),
      username,
      password,
      role,
      el("button", {
        text: "create",
        onclick: () =>
          void this.api
            .createUser(username.value.trim(), password.value, role.value)
            .then(() => this.render())
            .catch((error) => this.notify(`create failed: ${error.message}`)),
      }),
    );
  }
}
