// Page wiring: one session at a time, view driven by the event stream,
// resynced from GET /state on reconnect or refresh.

import { GatewayClient, GatewayError } from './api';
import { render, setBusy, setConnectionBanner } from './render';
import { subscribeEvents } from './sse';
import { applyRecord, emptyView, viewFromState } from './state';
import type { SessionView } from './types';

function $(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

let client = new GatewayClient(defaultBaseUrl());
let view: SessionView = emptyView('');
let abort: AbortController | null = null;

function defaultBaseUrl(): string {
  const saved = new URLSearchParams(window.location.search).get('gateway');
  if (saved) return saved;
  if (window.location.protocol.startsWith('http')) return window.location.origin;
  return 'http://127.0.0.1:8080';
}

async function refreshScene(): Promise<void> {
  if (!view.sessionId) return;
  try {
    const scene = await client.scene(view.sessionId);
    view = { ...view, scene: scene.entries };
    render(view);
  } catch {
    // scene is cosmetic; ignore transient failures
  }
}

async function resync(): Promise<void> {
  const state = await client.state(view.sessionId);
  const transcript = view.transcript;
  view = { ...viewFromState(state), scene: view.scene, transcript };
  render(view);
}

function subscribe(sessionId: string): void {
  abort?.abort();
  abort = new AbortController();
  void subscribeEvents(client.baseUrl, sessionId, {
    signal: abort.signal,
    onRecord: (record) => {
      view = applyRecord(view, record);
      render(view);
      if (
        record.event_type === 'step_completed' ||
        record.event_type === 'replanned' ||
        record.event_type === 'completed' ||
        record.event_type === 'plan'
      ) {
        void refreshScene();
      }
    },
    onReconnect: async () => {
      setConnectionBanner('connection lost, reconnecting...');
      try {
        await resync();
      } catch {
        // gateway still down; keep the banner
      }
    },
    onClose: () => setConnectionBanner(null),
    isDone: () => ['completed', 'refused', 'failed'].includes(view.state),
  }).then(() => setConnectionBanner(null));
}

async function newSession(): Promise<void> {
  const domain = ($('domain') as HTMLSelectElement).value;
  client = new GatewayClient(($('gateway-url') as HTMLInputElement).value.replace(/\/$/, ''));
  try {
    const created = await client.createSession(domain);
    view = emptyView(created.session_id);
    const state = await client.state(created.session_id);
    view = { ...viewFromState(state), transcript: [] };
    render(view);
    setConnectionBanner(null);
    subscribe(created.session_id);
    void refreshScene();
  } catch (err) {
    showError(err);
  }
}

function showError(err: unknown): void {
  const message = err instanceof GatewayError ? err.message : String(err);
  setConnectionBanner(message);
}

async function submit(as: 'request' | 'interrupt'): Promise<void> {
  const input = $('order-text') as HTMLInputElement;
  const text = input.value.trim();
  if (!text || !view.sessionId) return;
  setBusy(true);
  try {
    if (as === 'request') {
      await client.submitRequest(view.sessionId, text);
      input.value = '';
      // fire and forget: step events arrive over the stream while this runs
      void client.runSession(view.sessionId).catch(showError);
    } else {
      await client.interrupt(view.sessionId, text);
      input.value = '';
    }
    setConnectionBanner(null);
  } catch (err) {
    showError(err); // 409/404 shown verbatim
  } finally {
    setBusy(false);
  }
}

function wire(): void {
  ($('gateway-url') as HTMLInputElement).value = client.baseUrl;
  $('new-session').addEventListener('click', () => void newSession());
  $('send-request').addEventListener('click', () => void submit('request'));
  $('send-interrupt').addEventListener('click', () => void submit('interrupt'));
  ($('order-text') as HTMLInputElement).addEventListener('keydown', (event) => {
    if (event.key === 'Enter') {
      void submit(view.state === 'executing' ? 'interrupt' : 'request');
    }
  });
  render(view);
  void newSession();
}

window.addEventListener('DOMContentLoaded', wire);
