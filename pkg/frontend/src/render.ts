// DOM rendering: the whole page re-renders from the current SessionView.

import { sceneSvg } from './scene';
import type { SessionView, TranscriptRecord } from './types';

const STATE_COLORS: Record<string, string> = {
  idle: '#64748b',
  planning: '#d97706',
  executing: '#2563eb',
  replanning: '#d97706',
  completed: '#16a34a',
  refused: '#b45309',
  failed: '#dc2626',
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;');
}

function describeRecord(record: TranscriptRecord): string {
  const payload = record.payload as Record<string, any>;
  switch (record.event_type) {
    case 'request':
      return `request: ${payload.text}`;
    case 'plan':
      return `plan (${(payload.steps as string[]).length} steps)`;
    case 'replanned':
      return `replanned (${(payload.steps as string[]).length} steps) for: ${payload.request}`;
    case 'step_started':
      return `step ${payload.index} started: ${payload.text}`;
    case 'invocation':
      return `  call ${payload.name}(${JSON.stringify(payload.arguments)})`;
    case 'outcome':
      return `  ${payload.ok ? 'ok' : 'FAILED'}: ${payload.observation}`;
    case 'step_completed':
      return `step ${payload.index} completed`;
    case 'interrupt':
      return `interrupt queued: ${payload.text}`;
    case 'refused':
      return `refused: ${payload.message}`;
    case 'completed':
      return 'task completed';
    case 'failed':
      return `failed: ${payload.reason}`;
    default:
      return record.event_type;
  }
}

export function render(view: SessionView): void {
  el('session-id').textContent = view.sessionId || '(none)';
  const badge = el('state-badge');
  badge.textContent = view.state;
  badge.style.background = STATE_COLORS[view.state] ?? '#64748b';

  const planList = el('plan-steps');
  if (view.steps.length === 0) {
    planList.innerHTML = '<li class="muted">no plan yet</li>';
  } else {
    planList.innerHTML = view.steps
      .map(
        (s) =>
          `<li class="step ${s.status}"><span class="marker"></span>` +
          `${escapeHtml(s.text)}</li>`,
      )
      .join('');
  }
  el('plan-origin').textContent = view.planOrigin ? `(${view.planOrigin})` : '';

  el('completed-steps').innerHTML =
    view.completed.map((t) => `<li>${escapeHtml(t)}</li>`).join('') ||
    '<li class="muted">nothing yet</li>';

  el('scene-plot').innerHTML = sceneSvg(view.scene);

  el('transcript').innerHTML = view.transcript
    .slice(-40)
    .map((r) => `<div class="record ${r.event_type}">${escapeHtml(describeRecord(r))}</div>`)
    .join('');
  const transcript = el('transcript');
  transcript.scrollTop = transcript.scrollHeight;

  el('guidelines').textContent = view.guidelines;

  const notice = el('notice');
  if (view.state === 'refused' && view.refusalMessage) {
    notice.textContent = view.refusalMessage;
    notice.className = 'notice refused';
  } else if (view.state === 'failed' && view.failureReason) {
    notice.textContent = view.failureReason;
    notice.className = 'notice failed';
  } else {
    notice.textContent = '';
    notice.className = 'notice hidden';
  }
}

export function setConnectionBanner(message: string | null): void {
  const banner = el('connection-banner');
  banner.textContent = message ?? '';
  banner.className = message ? 'banner visible' : 'banner hidden';
}

export function setBusy(busy: boolean): void {
  (el('send-request') as HTMLButtonElement).disabled = busy;
  (el('send-interrupt') as HTMLButtonElement).disabled = busy;
}
