import { AgentApi, ApiError } from "./api.js";
import { renderApp } from "./render.js";
import type { SpeechCapture } from "./speech.js";
import {
  initialState,
  withAgentResponse,
  withError,
  withLocale,
  withUserMessage,
} from "./state.js";
import type { ArchivedChat, ChatViewState } from "./types.js";

/** Controller: owns the view state, talks to the service, re-renders.
 * One in-flight request per session; sending is disabled while waiting. */
export class ChatApp {
  state: ChatViewState | null = null;
  archives: ArchivedChat[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly api: AgentApi,
    private readonly studentId: string,
    private readonly speech?: SpeechCapture,
  ) {}

  async start(locale = "en"): Promise<void> {
    try {
      const session = await this.api.createSession(this.studentId, locale);
      this.state = initialState(session, locale);
    } catch (err) {
      this.state = null;
      this.renderWithError(err);
      return;
    }
    this.render();
  }

  async send(text: string): Promise<void> {
    if (!this.state || this.state.busy || !text.trim()) {
      return;
    }
    this.state = withUserMessage(this.state, text.trim());
    this.render();
    try {
      const response = await this.api.sendMessage(this.state.sessionId, text.trim(), {
        lang: this.state.locale,
      });
      this.state = withAgentResponse(this.state, response);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.state = withError(
          this.state,
          "This session has expired. Start a new one to continue.",
        );
      } else {
        this.state = withError(this.state, describe(err));
      }
    }
    this.render();
  }

  async captureSpeech(): Promise<void> {
    if (!this.speech?.supported || !this.state || this.state.busy) {
      return;
    }
    try {
      const heard = await this.speech.capture(this.state.locale);
      if (!heard.text.trim()) {
        return;
      }
      // recognizer confidence rides along so the server-side gate applies
      this.state = withUserMessage(this.state, heard.text.trim());
      this.render();
      const response = await this.api.sendMessage(this.state.sessionId, heard.text.trim(), {
        lang: this.state.locale,
        confidence: heard.confidence,
      });
      this.state = withAgentResponse(this.state, response);
    } catch (err) {
      if (this.state) {
        this.state = withError(this.state, describe(err));
      }
    }
    this.render();
  }

  setLocale(locale: string): void {
    if (this.state) {
      this.state = withLocale(this.state, locale);
      this.render();
    }
  }

  /** Start over; the previous conversation stays readable in a tab. */
  async newSession(): Promise<void> {
    if (this.state && this.state.messages.length > 0) {
      this.archives.push({
        label: `chat ${this.archives.length + 1} (${this.state.sessionId.slice(0, 8)})`,
        messages: this.state.messages,
      });
    }
    await this.start(this.state?.locale ?? "en");
  }

  render(): void {
    renderApp(
      this.root,
      this.state,
      this.archives,
      {
        onSend: (text) => void this.send(text),
        onQuickReply: (reply) => void this.send(reply),
        onLocaleChange: (locale) => this.setLocale(locale),
        onNewSession: () => void this.newSession(),
        onRetry: () => void this.start(this.state?.locale ?? "en"),
        onSpeech: () => void this.captureSpeech(),
      },
      { speechAvailable: this.speech?.supported ?? false },
    );
  }

  private renderWithError(err: unknown): void {
    renderApp(this.root, null, this.archives, {
      onSend: () => undefined,
      onQuickReply: () => undefined,
      onLocaleChange: () => undefined,
      onNewSession: () => void this.newSession(),
      onRetry: () => void this.start(),
    });
    const banner = this.root.querySelector(".error-banner span");
    if (banner) {
      banner.textContent = describe(err);
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return err.status === 0 ? err.message : `${err.code}: ${err.message}`;
  }
  return String(err);
}
