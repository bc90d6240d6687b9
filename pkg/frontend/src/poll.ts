/** Prediction job polling. The delay between polls doubles from 500 ms up
 * to an 8 s cap, and the loop stops as soon as the job reaches a terminal
 * state or the caller aborts. */

import type { ApiClient } from "./api";
import type { Job } from "./types";

export const INITIAL_DELAY_MS = 500;
export const MAX_DELAY_MS = 8000;

export const TERMINAL_STATES: ReadonlySet<string> = new Set(["done", "failed"]);

export function nextDelay(previousMs: number): number {
  return Math.min(previousMs * 2, MAX_DELAY_MS);
}

function abortError(): Error {
  const err = new Error("polling aborted");
  err.name = "AbortError";
  return err;
}

/** Resolve after ms, or reject with AbortError as soon as signal fires. */
export function sleep(ms: number, signal?: AbortSignal): Promise<void> {
  return new Promise((resolve, reject) => {
    if (signal?.aborted) {
      reject(abortError());
      return;
    }
    const onAbort = () => {
      clearTimeout(id);
      reject(abortError());
    };
    const id = setTimeout(() => {
      signal?.removeEventListener("abort", onAbort);
      resolve();
    }, ms);
    signal?.addEventListener("abort", onAbort, { once: true });
  });
}

export interface PollOptions {
  signal?: AbortSignal;
  /** Called with every fetched job, terminal or not. */
  onUpdate?: (job: Job) => void;
  /** Injection point for tests; defaults to the abortable sleep above. */
  wait?: (ms: number, signal?: AbortSignal) => Promise<void>;
}

export async function pollJob(
  client: ApiClient,
  jobId: string,
  options: PollOptions = {},
): Promise<Job> {
  const wait = options.wait ?? sleep;
  let delay = INITIAL_DELAY_MS;
  for (;;) {
    if (options.signal?.aborted) throw abortError();
    const job = await client.getJob(jobId, options.signal);
    options.onUpdate?.(job);
    if (TERMINAL_STATES.has(job.state)) return job;
    await wait(delay, options.signal);
    delay = nextDelay(delay);
  }
}
