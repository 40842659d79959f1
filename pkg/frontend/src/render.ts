import { canSend, quickRepliesVisible } from "./state.js";
import type { ArchivedChat, ChatMessage, ChatViewState, DisplayPayload } from "./types.js";

/** DOM renderers. Everything user-controlled goes through textContent, never
 * innerHTML, so transcripts cannot inject markup. */

export interface Handlers {
  onSend: (text: string) => void;
  onQuickReply: (reply: "yes" | "no") => void;
  onLocaleChange: (locale: string) => void;
  onNewSession: () => void;
  onRetry: () => void;
  onSpeech?: () => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderDisplay(doc: Document, display: DisplayPayload): HTMLElement {
  switch (display.kind) {
    case "course_table":
      return renderTable(doc, display, ["code", "title", "credits"]);
    case "prereq_list":
      return renderChecklist(doc, display);
    case "plan":
      return renderPlan(doc, display);
    default:
      return renderTable(doc, display, Object.keys(display.rows[0] ?? {}));
  }
}

function renderTable(doc: Document, display: DisplayPayload, columns: string[]): HTMLElement {
  const wrapper = el(doc, "div", `display display-${display.kind.replace(/_/g, "-")}`);
  const table = el(doc, "table");
  const head = el(doc, "tr");
  for (const column of columns) {
    head.appendChild(el(doc, "th", undefined, column));
  }
  table.appendChild(head);
  for (const row of display.rows) {
    const tr = el(doc, "tr");
    for (const column of columns) {
      tr.appendChild(el(doc, "td", undefined, String(row[column] ?? "")));
    }
    table.appendChild(tr);
  }
  wrapper.appendChild(table);
  return wrapper;
}

function renderChecklist(doc: Document, display: DisplayPayload): HTMLElement {
  const wrapper = el(doc, "div", "display display-prereq-list");
  const list = el(doc, "ul");
  for (const row of display.rows) {
    const satisfied = row.status === "satisfied";
    const item = el(doc, "li", satisfied ? "satisfied" : "missing");
    item.appendChild(el(doc, "span", "check", satisfied ? "✓" : "✗"));
    item.appendChild(el(doc, "span", undefined, ` ${row.code} ${row.title ?? ""}`));
    list.appendChild(item);
  }
  wrapper.appendChild(list);
  return wrapper;
}

function renderPlan(doc: Document, display: DisplayPayload): HTMLElement {
  const wrapper = el(doc, "div", "display display-plan");
  const list = el(doc, "ol");
  for (const row of display.rows) {
    const courses = Array.isArray(row.courses) ? row.courses.join(", ") : String(row.courses);
    const item = el(doc, "li");
    item.appendChild(el(doc, "strong", undefined, String(row.term)));
    item.appendChild(el(doc, "span", undefined, ` ${courses} (${row.credits} credits)`));
    list.appendChild(item);
  }
  wrapper.appendChild(list);
  return wrapper;
}

function renderMessage(doc: Document, message: ChatMessage): HTMLElement {
  const bubble = el(doc, "div", `message ${message.role}`);
  if (message.text) {
    bubble.appendChild(el(doc, "p", "text", message.text));
  }
  for (const display of message.displays) {
    bubble.appendChild(renderDisplay(doc, display));
  }
  return bubble;
}

export function renderApp(
  root: HTMLElement,
  state: ChatViewState | null,
  archives: ArchivedChat[],
  handlers: Handlers,
  options: { speechAvailable?: boolean } = {},
): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  const header = el(doc, "header", "toolbar");
  header.appendChild(el(doc, "h1", undefined, "Dona"));

  const phase = el(doc, "span", "phase-badge", state ? state.phase : "Disconnected");
  header.appendChild(phase);

  const locale = el(doc, "select", "locale-select");
  locale.id = "locale-select";
  for (const value of ["en", "es"]) {
    const option = el(doc, "option", undefined, value);
    option.value = value;
    if (state && state.locale === value) option.selected = true;
    locale.appendChild(option);
  }
  locale.addEventListener("change", () => handlers.onLocaleChange(locale.value));
  header.appendChild(locale);

  const fresh = el(doc, "button", "new-session", "New session");
  fresh.id = "new-session";
  fresh.addEventListener("click", () => handlers.onNewSession());
  header.appendChild(fresh);
  root.appendChild(header);

  if (archives.length > 0) {
    const tabs = el(doc, "nav", "chat-tabs");
    for (const archive of archives) {
      tabs.appendChild(el(doc, "span", "chat-tab", archive.label));
    }
    root.appendChild(tabs);
  }

  if (state?.error || !state) {
    const banner = el(doc, "div", "error-banner");
    banner.appendChild(
      el(doc, "span", undefined, state?.error ?? "Not connected to the agent service."),
    );
    const retry = el(doc, "button", "retry", "Retry");
    retry.addEventListener("click", () => handlers.onRetry());
    banner.appendChild(retry);
    root.appendChild(banner);
  }

  const log = el(doc, "main", "chat-log");
  if (state) {
    for (const message of state.messages) {
      log.appendChild(renderMessage(doc, message));
    }
  }
  root.appendChild(log);

  if (state && quickRepliesVisible(state)) {
    const quick = el(doc, "div", "quick-replies");
    for (const reply of ["yes", "no"] as const) {
      const button = el(doc, "button", `quick-reply ${reply}`, reply === "yes" ? "Yes" : "No");
      button.dataset.reply = reply;
      button.disabled = state.busy;
      button.addEventListener("click", () => handlers.onQuickReply(reply));
      quick.appendChild(button);
    }
    root.appendChild(quick);
  }

  const composer = el(doc, "form", "composer");
  const input = el(doc, "input");
  input.id = "chat-input";
  input.type = "text";
  input.placeholder = state ? "Say something, e.g. 'hey dona'" : "";
  input.disabled = !state || state.busy;
  const send = el(doc, "button", "send", "Send");
  send.id = "send-button";
  send.type = "submit";

  const sync = () => {
    send.disabled = !state || !canSend(state, input.value);
  };
  sync();
  input.addEventListener("input", sync);
  composer.addEventListener("submit", (event) => {
    event.preventDefault();
    if (state && canSend(state, input.value)) {
      handlers.onSend(input.value.trim());
    }
  });
  composer.appendChild(input);
  composer.appendChild(send);

  if (options.speechAvailable && handlers.onSpeech) {
    const mic = el(doc, "button", "mic", "\u{1F399}");
    mic.id = "mic-button";
    mic.type = "button";
    mic.disabled = !state || state.busy;
    mic.addEventListener("click", () => handlers.onSpeech?.());
    composer.appendChild(mic);
  }
  root.appendChild(composer);
}
