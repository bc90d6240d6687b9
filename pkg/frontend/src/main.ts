/** Application shell: navigation bar, route table, and the auth guard.
 * All work runs on the UI thread; every page call is async and carries the
 * router's abort signal so navigation cancels it. */

import { ApiClient } from "./api";
import type { AppContext } from "./app";
import { renderAlertsPage } from "./pages/alerts";
import { renderHorizonsPage } from "./pages/horizons";
import { renderLoginPage } from "./pages/login";
import { renderPatientDetailPage, renderPatientListPage } from "./pages/patients";
import { renderPredictPage } from "./pages/predict";
import { Router } from "./router";
import { initialState, storeToken } from "./state";
import "./style.css";

const NAV_LINKS: [string, string][] = [
  ["/patients", "Patients"],
  ["/predict", "Predict"],
  ["/alerts", "Alerts"],
  ["/horizons", "Horizons"],
];

export function mountApp(host: HTMLElement): AppContext {
  const state = initialState();
  const api = new ApiClient();
  api.token = state.token;

  const router = new Router(() => api.token !== null);

  host.replaceChildren();
  const header = document.createElement("header");
  const title = document.createElement("h1");
  title.textContent = "Chronic disease risk";
  const nav = document.createElement("nav");
  for (const [path, label] of NAV_LINKS) {
    const link = document.createElement("a");
    link.href = path;
    link.textContent = label;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      router.navigate(path);
    });
    nav.appendChild(link);
  }
  const logout = document.createElement("button");
  logout.className = "logout";
  logout.textContent = "Sign out";
  logout.addEventListener("click", () => {
    api.token = null;
    storeToken(state, null);
    router.navigate("/login");
  });
  nav.appendChild(logout);
  header.append(title, nav);

  const root = document.createElement("main");
  host.append(header, root);

  const app: AppContext = { api, state, router, root };

  router
    .add("/login", () => renderLoginPage(app), { isPublic: true })
    .add("/", () => router.navigate("/patients"))
    .add("/index.html", () => router.navigate("/patients"))
    .add("/patients", (ctx) => renderPatientListPage(app, ctx))
    .add("/patients/:id", (ctx) => renderPatientDetailPage(app, ctx))
    .add("/predict", (ctx) => renderPredictPage(app, ctx))
    .add("/alerts", (ctx) => renderAlertsPage(app, ctx))
    .add("/horizons", (ctx) => renderHorizonsPage(app, ctx));
  router.notFound = () => router.navigate("/patients");

  router.start();
  return app;
}

const host = document.getElementById("app");
if (host) mountApp(host);
