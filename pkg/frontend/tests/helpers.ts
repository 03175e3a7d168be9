import type { FetchLike } from "../src/api.js";

export interface LoggedRequest {
  method: string;
  url: string;
  body: unknown;
}

type Handler = (method: string, url: string, body: unknown) =>
  { status: number; payload?: unknown } | undefined;

/** Scripted fetch stand-in: first matching handler wins, requests logged. */
export class FakeServer {
  requests: LoggedRequest[] = [];
  private handlers: Handler[] = [];

  on(handler: Handler): void {
    this.handlers.push(handler);
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    this.requests.push({ method, url, body });
    for (const handler of this.handlers) {
      const result = handler(method, url, body);
      if (result) {
        return new Response(
          result.payload === undefined ? null : JSON.stringify(result.payload),
          {
            status: result.status,
            headers: { "Content-Type": "application/json" },
          },
        );
      }
    }
    return new Response("not found", { status: 404 });
  };
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

export function chip(root: HTMLElement, index: number): HTMLElement {
  const found = root.querySelector(`.token[data-index="${index}"]`);
  if (!found) {
    throw new Error(`no token chip with index ${index}`);
  }
  return found as HTMLElement;
}

export function selectRange(root: HTMLElement, start: number, end: number): void {
  chip(root, start).dispatchEvent(new Event("mousedown", { bubbles: true }));
  chip(root, end).dispatchEvent(new Event("mouseup", { bubbles: true }));
}
