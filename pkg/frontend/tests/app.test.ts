import { beforeEach, describe, expect, it } from "vitest";

import { AgentApi } from "../src/api.js";
import { ChatApp } from "../src/app.js";

function scriptedApi(): AgentApi {
  let counter = 0;
  const fetchFn = async (url: string, init?: RequestInit) => {
    if (url.endsWith("/sessions") && init?.method === "POST") {
      counter += 1;
      return Response.json(
        { session_id: `session-${counter}`, student_id: "s1", phase: "Idle" },
        { status: 201 },
      );
    }
    if (url.includes("/messages")) {
      return Response.json({
        say: "How can I help you?",
        displays: [],
        phase_after: "AwaitingCommand",
        effects: [],
        rejected: false,
      });
    }
    throw new Error(`unexpected request: ${url}`);
  };
  return new AgentApi("http://svc", fetchFn);
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app")!;
});

describe("ChatApp", () => {
  it("starting again yields a new session and archives the old chat in a tab", async () => {
    const app = new ChatApp(root, scriptedApi(), "s1");
    await app.start();
    const firstId = app.state!.sessionId;
    await app.send("hey dona");
    expect(app.state!.messages).toHaveLength(2);

    await app.newSession();
    expect(app.state!.sessionId).not.toBe(firstId);
    expect(app.state!.messages).toEqual([]);
    expect(app.archives).toHaveLength(1);
    expect(app.archives[0].messages).toHaveLength(2);
    expect(root.querySelector(".chat-tabs")!.textContent).toContain("chat 1");
  });

  it("service down at startup shows the banner and no session", async () => {
    const api = new AgentApi("http://svc", async () => {
      throw new TypeError("refused");
    });
    const app = new ChatApp(root, api, "s1");
    await app.start();
    expect(app.state).toBeNull();
    expect(root.querySelector(".error-banner")).not.toBeNull();
  });

  it("second send is ignored while a request is in flight", async () => {
    let resolveFirst: (() => void) | undefined;
    let calls = 0;
    const fetchFn = async (url: string, init?: RequestInit) => {
      if (url.endsWith("/sessions") && init?.method === "POST") {
        return Response.json(
          { session_id: "s", student_id: "s1", phase: "Idle" },
          { status: 201 },
        );
      }
      calls += 1;
      await new Promise<void>((resolve) => {
        resolveFirst = resolve;
      });
      return Response.json({
        say: "ok",
        displays: [],
        phase_after: "AwaitingCommand",
        effects: [],
        rejected: false,
      });
    };
    const app = new ChatApp(root, new AgentApi("http://svc", fetchFn), "s1");
    await app.start();

    const first = app.send("hey dona");
    const second = app.send("list courses");
    resolveFirst?.();
    await Promise.all([first, second]);
    expect(calls).toBe(1);
    expect(app.state!.messages.filter((m) => m.role === "user")).toHaveLength(1);
  });
});
