/** Login page. A successful login stores the bearer token and moves on to
 * the patient list. */

import { ApiError } from "../api";
import { clearPage, isAbort, type AppContext } from "../app";
import { storeToken } from "../state";
import { renderErrorBanner } from "../views/banner";

export function renderLoginPage(app: AppContext): void {
  const page = clearPage(app, "Sign in");

  const form = document.createElement("form");
  form.className = "login-form";
  form.innerHTML = `
    <label>User
      <input name="user" type="text" autocomplete="username" required>
    </label>
    <label>Password
      <input name="pass" type="password" autocomplete="current-password" required>
    </label>
    <button type="submit">Sign in</button>
  `;
  const status = document.createElement("div");
  status.className = "form-status";
  page.append(form, status);

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const user = String(data.get("user") ?? "");
    const pass = String(data.get("pass") ?? "");
    try {
      await app.api.login(user, pass);
      storeToken(app.state, app.api.token);
      app.router.navigate("/patients");
    } catch (err) {
      if (isAbort(err)) return;
      const message = err instanceof ApiError ? err.message : String(err);
      renderErrorBanner(status, `login failed: ${message}`);
    }
  });
}
