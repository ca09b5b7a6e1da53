// Shapes of gateway responses and transcript records.

export type SessionStateName =
  | 'idle'
  | 'planning'
  | 'executing'
  | 'replanning'
  | 'completed'
  | 'refused'
  | 'failed';

export interface TranscriptRecord {
  timestamp: number;
  session_id: string;
  event_type: string;
  payload: Record<string, unknown>;
}

export type StepStatus = 'pending' | 'active' | 'done';

export interface PlanStepView {
  index: number;
  text: string;
  status: StepStatus;
}

export interface SceneEntry {
  label: string;
  x: number;
  y: number;
}

export interface SessionView {
  sessionId: string;
  state: SessionStateName;
  planOrigin: string | null;
  steps: PlanStepView[];
  completed: string[];
  scene: SceneEntry[];
  transcript: TranscriptRecord[];
  guidelines: string;
  refusalMessage: string | null;
  failureReason: string | null;
}

export interface StateResponse {
  session_id: string;
  domain: string;
  state: SessionStateName;
  plan: { origin: string; steps: { index: number; text: string; status: StepStatus }[] } | null;
  cursor: number;
  completed: string[];
  pending_interrupts: number;
  refusal_message: string | null;
  failure_reason: string | null;
  guidelines: string;
}

export interface SceneResponse {
  entries: SceneEntry[];
  rendered: string;
}
