// SessionView reducer: every update comes from a gateway response or a
// transcript record, so a page refresh (GET /state) reproduces exactly what
// the event stream built up.

import type {
  PlanStepView,
  SessionView,
  StateResponse,
  TranscriptRecord,
} from './types';

const TRANSCRIPT_TAIL = 200;

export function emptyView(sessionId: string): SessionView {
  return {
    sessionId,
    state: 'idle',
    planOrigin: null,
    steps: [],
    completed: [],
    scene: [],
    transcript: [],
    guidelines: '',
    refusalMessage: null,
    failureReason: null,
  };
}

export function viewFromState(state: StateResponse): SessionView {
  return {
    sessionId: state.session_id,
    state: state.state,
    planOrigin: state.plan?.origin ?? null,
    steps: (state.plan?.steps ?? []).map((s) => ({ ...s })),
    completed: [...state.completed],
    scene: [],
    transcript: [],
    guidelines: state.guidelines ?? '',
    refusalMessage: state.refusal_message,
    failureReason: state.failure_reason,
  };
}

function freshSteps(texts: string[]): PlanStepView[] {
  return texts.map((text, i) => ({
    index: i + 1,
    text,
    status: i === 0 ? 'active' : 'pending',
  }));
}

/** Apply one transcript record; returns a new view (inputs are not mutated). */
export function applyRecord(view: SessionView, record: TranscriptRecord): SessionView {
  const next: SessionView = {
    ...view,
    steps: view.steps.map((s) => ({ ...s })),
    completed: [...view.completed],
    transcript: [...view.transcript, record].slice(-TRANSCRIPT_TAIL),
  };
  const payload = record.payload as Record<string, any>;
  switch (record.event_type) {
    case 'request':
      next.state = 'planning';
      break;
    case 'plan':
    case 'replanned':
      next.planOrigin = String(payload.origin ?? 'initial');
      next.steps = freshSteps((payload.steps as string[]) ?? []);
      next.state = 'executing';
      break;
    case 'step_started': {
      const text = String(payload.text ?? '');
      for (const step of next.steps) {
        if (step.text === text && step.status !== 'done') step.status = 'active';
      }
      break;
    }
    case 'step_completed': {
      const done = next.steps.findIndex((s) => s.status === 'active');
      if (done >= 0) {
        next.steps[done].status = 'done';
        if (done + 1 < next.steps.length) next.steps[done + 1].status = 'active';
      }
      next.completed.push(String(payload.text ?? ''));
      break;
    }
    case 'completed':
      next.state = 'completed';
      break;
    case 'refused':
      next.state = 'refused';
      next.refusalMessage = String(payload.message ?? '');
      next.steps = next.steps.map((s) =>
        s.status === 'active' ? { ...s, status: 'pending' } : s,
      );
      break;
    case 'failed':
      next.state = 'failed';
      next.failureReason = String(payload.reason ?? '');
      next.steps = next.steps.map((s) =>
        s.status === 'active' ? { ...s, status: 'pending' } : s,
      );
      break;
    case 'interrupt':
    case 'invocation':
    case 'outcome':
      break; // transcript-only records
  }
  return next;
}

/** The fields a page refresh must reproduce exactly (scene and transcript are
 * fetched separately). */
export function comparable(view: SessionView) {
  return {
    state: view.state,
    steps: view.steps.map((s) => ({ text: s.text, status: s.status })),
    completed: [...view.completed],
  };
}
