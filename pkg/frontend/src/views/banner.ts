/** Inline error banner shown in place of a view that cannot render. */

export function renderErrorBanner(container: HTMLElement, message: string): void {
  container.replaceChildren();
  const banner = document.createElement("div");
  banner.className = "error-banner";
  banner.setAttribute("role", "alert");
  banner.textContent = message;
  container.appendChild(banner);
}
