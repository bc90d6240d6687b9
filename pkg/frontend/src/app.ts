/** Shared wiring handed to every page. */

import type { ApiClient } from "./api";
import type { Router } from "./router";
import type { ViewState } from "./state";

export interface AppContext {
  api: ApiClient;
  state: ViewState;
  router: Router;
  /** Page content container; pages replace its children. */
  root: HTMLElement;
}

export function clearPage(app: AppContext, title: string): HTMLElement {
  app.root.replaceChildren();
  const page = document.createElement("section");
  page.className = "page";
  const heading = document.createElement("h2");
  heading.textContent = title;
  page.appendChild(heading);
  app.root.appendChild(page);
  return page;
}

/** True for the AbortError raised when navigation cancels a page. */
export function isAbort(err: unknown): boolean {
  return (err as Error)?.name === "AbortError";
}
