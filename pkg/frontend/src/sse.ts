// Server-sent-events consumption over fetch streaming (works in browsers and
// node), with reconnect/backoff and a resync hook for the caller.

import type { TranscriptRecord } from './types';

/** Incremental text/event-stream parser; call feed() with each chunk. */
export function createSSEParser(onRecord: (record: TranscriptRecord) => void) {
  let buffer = '';
  return {
    feed(chunk: string) {
      buffer += chunk;
      let split: number;
      while ((split = buffer.indexOf('\n\n')) >= 0) {
        const block = buffer.slice(0, split);
        buffer = buffer.slice(split + 2);
        const dataLines = block
          .split('\n')
          .filter((line) => line.startsWith('data:'))
          .map((line) => line.slice(5).trimStart());
        if (dataLines.length === 0) continue; // keepalive comment or id-only block
        try {
          onRecord(JSON.parse(dataLines.join('\n')) as TranscriptRecord);
        } catch {
          // tolerate malformed frames rather than killing the stream
        }
      }
    },
  };
}

export interface SubscribeOptions {
  onRecord: (record: TranscriptRecord) => void;
  /** Called before each (re)connect attempt after the first. */
  onReconnect?: (attempt: number) => void | Promise<void>;
  /** Called when the stream closes cleanly (session reached a terminal state). */
  onClose?: () => void;
  /** Stream is considered done when this returns true at stream end. */
  isDone?: () => boolean;
  signal?: AbortSignal;
  maxBackoffMs?: number;
  fetchImpl?: typeof fetch;
}

/**
 * Subscribe to a session's event stream.  The gateway replays the transcript
 * and then follows live events, closing the stream once the session is
 * terminal; an unexpected close triggers reconnect with exponential backoff
 * (the caller resyncs via GET /state in onReconnect).
 */
export async function subscribeEvents(
  baseUrl: string,
  sessionId: string,
  options: SubscribeOptions,
): Promise<void> {
  const fetchImpl = options.fetchImpl ?? fetch;
  const maxBackoff = options.maxBackoffMs ?? 5000;
  let attempt = 0;
  for (;;) {
    if (options.signal?.aborted) return;
    if (attempt > 0) {
      await options.onReconnect?.(attempt);
      const backoff = Math.min(maxBackoff, 250 * 2 ** (attempt - 1));
      await new Promise((resolve) => setTimeout(resolve, backoff));
      if (options.signal?.aborted) return;
    }
    attempt += 1;
    try {
      const response = await fetchImpl(`${baseUrl}/sessions/${sessionId}/events`, {
        signal: options.signal,
        headers: { Accept: 'text/event-stream' },
      });
      if (!response.ok || !response.body) throw new Error(`events: HTTP ${response.status}`);
      const reader = response.body.getReader();
      const decoder = new TextDecoder();
      const parser = createSSEParser(options.onRecord);
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        parser.feed(decoder.decode(value, { stream: true }));
      }
      if (!options.isDone || options.isDone()) {
        options.onClose?.();
        return; // clean end: session is terminal
      }
      // closed early (gateway restart): reconnect
    } catch (err) {
      if (options.signal?.aborted) return;
    }
  }
}
