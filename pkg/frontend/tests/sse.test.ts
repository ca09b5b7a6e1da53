import { describe, expect, it } from 'vitest';

import { createSSEParser } from '../src/sse';
import type { TranscriptRecord } from '../src/types';

function frame(record: object, id?: number): string {
  const idLine = id === undefined ? '' : `id: ${id}\n`;
  return `${idLine}data: ${JSON.stringify(record)}\n\n`;
}

const SAMPLE = { timestamp: 1, session_id: 's', event_type: 'plan', payload: { steps: [] } };

describe('createSSEParser', () => {
  it('parses whole frames', () => {
    const out: TranscriptRecord[] = [];
    const parser = createSSEParser((r) => out.push(r));
    parser.feed(frame(SAMPLE, 1));
    expect(out).toHaveLength(1);
    expect(out[0].event_type).toBe('plan');
  });

  it('handles frames split across arbitrary chunk boundaries', () => {
    const out: TranscriptRecord[] = [];
    const parser = createSSEParser((r) => out.push(r));
    const text = frame(SAMPLE, 1) + frame({ ...SAMPLE, timestamp: 2 }, 2);
    for (let size = 1; size <= 7; size++) {
      out.length = 0;
      const p = createSSEParser((r) => out.push(r));
      for (let i = 0; i < text.length; i += size) p.feed(text.slice(i, i + size));
      expect(out.map((r) => r.timestamp)).toEqual([1, 2]);
    }
    parser.feed(text);
    expect(out.length).toBeGreaterThan(0);
  });

  it('ignores keepalive comments and malformed frames', () => {
    const out: TranscriptRecord[] = [];
    const parser = createSSEParser((r) => out.push(r));
    parser.feed(': keepalive\n\n');
    parser.feed('data: {not json}\n\n');
    parser.feed(frame(SAMPLE));
    expect(out).toHaveLength(1);
  });
});
