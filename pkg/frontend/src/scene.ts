// Top-down 2D scene plot as an SVG string (no imagery, just labeled markers).

import type { SceneEntry } from './types';

const PALETTE = [
  '#2563eb', '#16a34a', '#d97706', '#dc2626', '#7c3aed',
  '#0891b2', '#be185d', '#4d7c0f', '#b45309', '#1e40af',
];

function colorFor(label: string): string {
  let hash = 0;
  for (const ch of label) hash = (hash * 31 + ch.charCodeAt(0)) >>> 0;
  return PALETTE[hash % PALETTE.length];
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/** Render scene entries (robot-frame meters) into a fixed-size SVG plot. */
export function sceneSvg(entries: SceneEntry[], width = 420, height = 320): string {
  const pad = 36;
  const xs = entries.map((e) => e.x);
  const ys = entries.map((e) => e.y);
  const minX = entries.length ? Math.min(...xs) : 0;
  const maxX = entries.length ? Math.max(...xs) : 1;
  const minY = entries.length ? Math.min(...ys) : 0;
  const maxY = entries.length ? Math.max(...ys) : 1;
  const spanX = Math.max(maxX - minX, 0.1);
  const spanY = Math.max(maxY - minY, 0.1);
  const sx = (x: number) => pad + ((x - minX) / spanX) * (width - 2 * pad);
  const sy = (y: number) => height - pad - ((y - minY) / spanY) * (height - 2 * pad);

  const marks = entries
    .map((e) => {
      const cx = sx(e.x).toFixed(1);
      const cy = sy(e.y).toFixed(1);
      const label = escapeXml(e.label);
      const color = colorFor(e.label);
      return (
        `<circle cx="${cx}" cy="${cy}" r="7" fill="${color}" fill-opacity="0.85"/>` +
        `<text x="${cx}" y="${(sy(e.y) - 11).toFixed(1)}" text-anchor="middle" ` +
        `font-size="10" fill="#334155">${label} (${e.x.toFixed(2)}, ${e.y.toFixed(2)})</text>`
      );
    })
    .join('');
  const empty =
    entries.length === 0
      ? `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" fill="#94a3b8">no objects detected</text>`
      : '';
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">` +
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#f8fafc" stroke="#e2e8f0"/>` +
    marks +
    empty +
    `</svg>`
  );
}
