/**
 * Community pane: the pooled load over the next window, straight from
 * MetricsSnapshot / PoolProfileUpdate. Raw aggregate as bars, biased
 * values as a line, cap as a dashed rule, peak bucket marked. Rendered
 * only when a message arrives; nothing is interpolated between snapshots.
 */

import { CommunityState } from './state.js';

export class CommunityPane {
  constructor(private readonly canvas: HTMLCanvasElement) {}

  render(c: CommunityState): void {
    const ctx = this.canvas.getContext('2d')!;
    const w = this.canvas.width;
    const h = this.canvas.height;
    ctx.clearRect(0, 0, w, h);
    const n = c.raw.length;
    if (n === 0 || c.grid === null) {
      ctx.fillStyle = '#9fb0c0';
      ctx.font = '14px system-ui, sans-serif';
      ctx.textAlign = 'center';
      ctx.fillText('waiting for pool data…', w / 2, h / 2);
      return;
    }

    const padL = 44;
    const padB = 22;
    const padT = 12;
    const plotW = w - padL - 8;
    const plotH = h - padT - padB;
    const top = Math.max(c.peakW, c.capW ?? 0, ...c.biased, 1) * 1.1;
    const y = (v: number) => padT + plotH - (v / top) * plotH;
    const x = (i: number) => padL + (i / n) * plotW;
    const barW = plotW / n;

    // raw aggregate bars
    for (let i = 0; i < n; i++) {
      ctx.fillStyle = i === c.peakBucket && c.peakW > 0 ? '#ffb300' : '#4c7dac';
      ctx.fillRect(x(i) + 1, y(c.raw[i]), barW - 2, padT + plotH - y(c.raw[i]));
    }

    // biased line
    ctx.beginPath();
    for (let i = 0; i < n; i++) {
      const px = x(i) + barW / 2;
      const py = y(c.biased[i]);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    ctx.lineWidth = 2;
    ctx.strokeStyle = '#a3be8c';
    ctx.stroke();

    // cap rule
    if (c.capW !== null) {
      ctx.beginPath();
      ctx.setLineDash([8, 5]);
      ctx.moveTo(padL, y(c.capW));
      ctx.lineTo(w - 8, y(c.capW));
      ctx.lineWidth = 2;
      ctx.strokeStyle = '#d0342c';
      ctx.stroke();
      ctx.setLineDash([]);
    }

    // axes labels
    ctx.fillStyle = '#9fb0c0';
    ctx.font = '11px system-ui, sans-serif';
    ctx.textAlign = 'left';
    ctx.fillText(`${Math.round(top)} W`, 2, padT + 8);
    ctx.fillText('now', padL, h - 6);
    ctx.textAlign = 'right';
    const horizonMin = (c.grid.horizon_s / 60).toFixed(0);
    ctx.fillText(`+${horizonMin} min`, w - 8, h - 6);
    ctx.textAlign = 'center';
    ctx.fillText(
      `peak ${c.peakW} W · load factor ${c.loadFactor.toFixed(2)} · ${c.memberCount} households`,
      w / 2,
      h - 6,
    );
  }
}
