/** Wire types mirroring the agent service's published JSON API. */

export interface SessionInfo {
  session_id: string;
  student_id: string;
  phase: string;
}

export type DisplayKind = "course_table" | "prereq_list" | "plan";

export interface DisplayPayload {
  kind: DisplayKind;
  rows: Record<string, unknown>[];
}

export interface Effect {
  kind: string;
  course?: string;
  term?: string;
  program?: string;
}

export interface MessageResponse {
  say: string;
  displays: DisplayPayload[];
  phase_after: string;
  effects: Effect[];
  rejected: boolean;
}

export interface TranscriptTurn {
  speaker: "user" | "agent";
  text: string;
  timestamp: number;
  latency_ms: number | null;
}

export interface Transcript {
  session_id: string;
  turns: TranscriptTurn[];
}

/** Client-side view model. */

export interface ChatMessage {
  role: "user" | "agent";
  text: string;
  displays: DisplayPayload[];
}

export interface ChatViewState {
  sessionId: string;
  studentId: string;
  phase: string;
  locale: string;
  messages: ChatMessage[];
  busy: boolean;
  error: string | null;
}

export interface ArchivedChat {
  label: string;
  messages: ChatMessage[];
}
