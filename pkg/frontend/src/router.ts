/** History-based router with an auth guard. Navigating away aborts the
 * outgoing page's signal so in-flight fetches and poll loops stop; pages
 * must thread ctx.signal through every async call they start. */

export interface RouteContext {
  path: string;
  params: Record<string, string>;
  signal: AbortSignal;
}

export type RouteHandler = (ctx: RouteContext) => void | Promise<void>;

interface Route {
  pattern: RegExp;
  handler: RouteHandler;
  isPublic: boolean;
}

function compilePattern(pattern: string): RegExp {
  const source = pattern
    .split("/")
    .map((part) =>
      part.startsWith(":")
        ? `(?<${part.slice(1)}>[^/]+)`
        : part.replace(/[.*+?^${}()|[\]\\]/g, "\\$&"))
    .join("/");
  return new RegExp(`^${source}$`);
}

export class Router {
  private routes: Route[] = [];
  private controller: AbortController | null = null;
  notFound: RouteHandler = () => {};

  constructor(
    private isAuthenticated: () => boolean,
    readonly loginPath: string = "/login",
  ) {}

  add(pattern: string, handler: RouteHandler, opts: { isPublic?: boolean } = {}): this {
    this.routes.push({
      pattern: compilePattern(pattern),
      handler,
      isPublic: opts.isPublic ?? false,
    });
    return this;
  }

  start(): void {
    window.addEventListener("popstate", () => this.dispatch(location.pathname));
    this.dispatch(location.pathname);
  }

  navigate(path: string): void {
    if (location.pathname !== path) history.pushState(null, "", path);
    this.dispatch(path);
  }

  dispatch(path: string): void {
    this.controller?.abort();
    this.controller = new AbortController();
    const signal = this.controller.signal;

    for (const route of this.routes) {
      const match = path.match(route.pattern);
      if (!match) continue;
      if (!route.isPublic && !this.isAuthenticated()) {
        history.replaceState(null, "", this.loginPath);
        this.dispatch(this.loginPath);
        return;
      }
      this.run(route.handler, { path, params: match.groups ?? {}, signal });
      return;
    }
    this.run(this.notFound, { path, params: {}, signal });
  }

  /** Starts the handler synchronously; only rejections are deferred. */
  private run(handler: RouteHandler, ctx: RouteContext): void {
    const report = (err: unknown) => {
      if ((err as Error)?.name !== "AbortError") {
        console.error(`route ${ctx.path} failed:`, err);
      }
    };
    try {
      const out = handler(ctx);
      if (out instanceof Promise) out.catch(report);
    } catch (err) {
      report(err);
    }
  }
}
