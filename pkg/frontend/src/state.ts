import type {
  ChatMessage,
  ChatViewState,
  MessageResponse,
  SessionInfo,
} from "./types.js";

/** Pure view-state transitions; the controller owns the single mutable slot. */

export function initialState(session: SessionInfo, locale: string): ChatViewState {
  return {
    sessionId: session.session_id,
    studentId: session.student_id,
    phase: session.phase,
    locale,
    messages: [],
    busy: false,
    error: null,
  };
}

export function withUserMessage(state: ChatViewState, text: string): ChatViewState {
  const message: ChatMessage = { role: "user", text, displays: [] };
  return { ...state, messages: [...state.messages, message], busy: true, error: null };
}

export function withAgentResponse(
  state: ChatViewState,
  response: MessageResponse,
): ChatViewState {
  const messages = [...state.messages];
  if (response.say || response.displays.length > 0) {
    messages.push({ role: "agent", text: response.say, displays: response.displays });
  }
  return { ...state, messages, phase: response.phase_after, busy: false };
}

export function withError(state: ChatViewState, error: string): ChatViewState {
  return { ...state, busy: false, error };
}

export function withLocale(state: ChatViewState, locale: string): ChatViewState {
  return { ...state, locale };
}

/** Yes/No quick replies belong to the prerequisite confirmation phase only. */
export function quickRepliesVisible(state: ChatViewState): boolean {
  return state.phase === "AwaitingPrereqConfirmation";
}

export function canSend(state: ChatViewState, draft: string): boolean {
  return !state.busy && draft.trim().length > 0;
}
