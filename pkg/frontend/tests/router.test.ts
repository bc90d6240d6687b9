import { beforeEach, describe, expect, it, vi } from "vitest";

import { Router, type RouteContext } from "../src/router";

beforeEach(() => {
  history.replaceState(null, "", "/");
});

describe("Router", () => {
  it("dispatches to the matching route with extracted params", () => {
    const seen: RouteContext[] = [];
    const router = new Router(() => true);
    router.add("/patients/:id", (ctx) => { seen.push(ctx); });
    router.dispatch("/patients/P42");
    expect(seen).toHaveLength(1);
    expect(seen[0].params.id).toBe("P42");
  });

  it("redirects unauthenticated navigation to the login page", () => {
    let loginRendered = false;
    let patientsRendered = false;
    const router = new Router(() => false);
    router.add("/login", () => { loginRendered = true; }, { isPublic: true });
    router.add("/patients", () => { patientsRendered = true; });
    router.navigate("/patients");
    expect(loginRendered).toBe(true);
    expect(patientsRendered).toBe(false);
    expect(location.pathname).toBe("/login");
  });

  it("lets authenticated navigation through", () => {
    let rendered = false;
    const router = new Router(() => true);
    router.add("/login", () => {}, { isPublic: true });
    router.add("/patients", () => { rendered = true; });
    router.navigate("/patients");
    expect(rendered).toBe(true);
    expect(location.pathname).toBe("/patients");
  });

  it("guards every non-public route", () => {
    const reached: string[] = [];
    const router = new Router(() => false);
    router.add("/login", () => { reached.push("login"); }, { isPublic: true });
    for (const path of ["/patients", "/predict", "/alerts", "/horizons"]) {
      router.add(path, () => { reached.push(path); });
    }
    for (const path of ["/patients", "/predict", "/alerts", "/horizons"]) {
      router.navigate(path);
    }
    expect(reached).toEqual(["login", "login", "login", "login"]);
  });

  it("aborts the previous page's signal on navigation", () => {
    const router = new Router(() => true);
    let first: AbortSignal | null = null;
    let second: AbortSignal | null = null;
    router.add("/a", (ctx) => { first = ctx.signal; });
    router.add("/b", (ctx) => { second = ctx.signal; });
    router.navigate("/a");
    expect(first!.aborted).toBe(false);
    router.navigate("/b");
    expect(first!.aborted).toBe(true);
    expect(second!.aborted).toBe(false);
  });

  it("swallows AbortError from a cancelled page", async () => {
    const error = vi.spyOn(console, "error").mockImplementation(() => {});
    const router = new Router(() => true);
    router.add("/a", async () => {
      const err = new Error("stopped");
      err.name = "AbortError";
      throw err;
    });
    router.add("/b", () => {});
    router.navigate("/a");
    router.navigate("/b");
    await Promise.resolve();
    await Promise.resolve();
    expect(error).not.toHaveBeenCalled();
    error.mockRestore();
  });

  it("logs other page failures", async () => {
    const error = vi.spyOn(console, "error").mockImplementation(() => {});
    const router = new Router(() => true);
    router.add("/a", async () => { throw new Error("boom"); });
    router.navigate("/a");
    await vi.waitFor(() => expect(error).toHaveBeenCalled());
    error.mockRestore();
  });

  it("falls back to notFound for unknown paths", () => {
    const router = new Router(() => true);
    let fallback = "";
    router.notFound = (ctx) => { fallback = ctx.path; };
    router.dispatch("/nope");
    expect(fallback).toBe("/nope");
  });

  it("responds to history popstate events once started", () => {
    const reached: string[] = [];
    const router = new Router(() => true);
    router.add("/", (ctx) => { reached.push(ctx.path); });
    router.add("/a", (ctx) => { reached.push(ctx.path); });
    router.start();
    router.navigate("/a");
    history.back();
    window.dispatchEvent(new PopStateEvent("popstate"));
    expect(reached[0]).toBe("/");
    expect(reached[1]).toBe("/a");
  });
});
