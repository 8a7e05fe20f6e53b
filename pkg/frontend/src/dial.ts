/**
 * The kettle pane: a draggable dial standing in for the rotating base.
 *
 * Browsers have no force feedback, so friction is rendered instead of
 * felt: pointer drags are damped by the echoed friction value and the rim
 * ramps from calm green to loaded red. The over-cap state draws a warning
 * ring. The needle only ever moves when the backend echoes the new angle.
 */

import { controlLine } from './protocol.js';
import { postControl } from './net.js';
import { DialState } from './state.js';

const TAU = Math.PI * 2;

function frictionColor(f: number, overCap: boolean): string {
  if (overCap) return '#d0342c';
  const hue = 120 - Math.round(f * 110); // green -> orange/red
  return `hsl(${hue}, 75%, 45%)`;
}

export class DialPane {
  private dragging = false;
  private lastPointerAngle = 0;
  private ghostAngle: number | null = null;
  private sendTimer: number | null = null;
  private pendingAngle: number | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly getState: () => DialState,
  ) {
    canvas.addEventListener('pointerdown', (ev) => this.dragStart(ev));
    canvas.addEventListener('pointermove', (ev) => this.dragMove(ev));
    canvas.addEventListener('pointerup', (ev) => this.dragEnd(ev));
    canvas.addEventListener('pointercancel', (ev) => this.dragEnd(ev));
  }

  private pointerAngle(ev: PointerEvent): number {
    const rect = this.canvas.getBoundingClientRect();
    const x = ev.clientX - rect.left - rect.width / 2;
    const y = ev.clientY - rect.top - rect.height / 2;
    return ((Math.atan2(y, x) + TAU + Math.PI / 2) % TAU) * (360 / TAU);
  }

  private dragStart(ev: PointerEvent): void {
    this.dragging = true;
    this.canvas.setPointerCapture(ev.pointerId);
    this.lastPointerAngle = this.pointerAngle(ev);
    this.ghostAngle = this.getState().angleDeg;
  }

  private dragMove(ev: PointerEvent): void {
    if (!this.dragging || this.ghostAngle === null) return;
    const angle = this.pointerAngle(ev);
    let delta = angle - this.lastPointerAngle;
    if (delta > 180) delta -= 360;
    if (delta < -180) delta += 360;
    this.lastPointerAngle = angle;
    // rendered resistance: the heavier the slot, the stiffer the dial
    const damping = 1 - 0.85 * this.getState().friction;
    this.ghostAngle = Math.min(360, Math.max(0, this.ghostAngle + delta * damping));
    this.queueRotate(this.ghostAngle);
    this.render();
  }

  private dragEnd(ev: PointerEvent): void {
    if (!this.dragging) return;
    this.dragging = false;
    this.canvas.releasePointerCapture(ev.pointerId);
    if (this.ghostAngle !== null) this.queueRotate(this.ghostAngle, true);
    this.ghostAngle = null;
  }

  /** Throttle Rotate commands to ~30/s; the echo drives the needle. */
  private queueRotate(angle: number, flush = false): void {
    this.pendingAngle = angle;
    if (flush && this.sendTimer !== null) {
      clearTimeout(this.sendTimer);
      this.sendTimer = null;
    }
    if (this.sendTimer === null) {
      const send = () => {
        this.sendTimer = null;
        if (this.pendingAngle === null) return;
        const a = Math.round(this.pendingAngle * 10) / 10;
        this.pendingAngle = null;
        void postControl(controlLine('Rotate', { angle_deg: a }));
      };
      if (flush) send();
      else this.sendTimer = window.setTimeout(send, 33);
    }
  }

  render(): void {
    const s = this.getState();
    const ctx = this.canvas.getContext('2d')!;
    const w = this.canvas.width;
    const h = this.canvas.height;
    const cx = w / 2;
    const cy = h / 2;
    const radius = Math.min(w, h) / 2 - 18;
    ctx.clearRect(0, 0, w, h);

    // friction rim
    ctx.beginPath();
    ctx.arc(cx, cy, radius, 0, TAU);
    ctx.lineWidth = 10;
    ctx.strokeStyle = frictionColor(s.friction, s.overCap);
    ctx.stroke();

    // over-cap warning ring
    if (s.overCap) {
      ctx.beginPath();
      ctx.arc(cx, cy, radius + 9, 0, TAU);
      ctx.lineWidth = 4;
      ctx.setLineDash([6, 6]);
      ctx.strokeStyle = '#d0342c';
      ctx.stroke();
      ctx.setLineDash([]);
    }

    // LED ring, one segment per bucket
    const n = s.led.length;
    for (let i = 0; i < n; i++) {
      const a0 = -Math.PI / 2 + (i / n) * TAU + 0.012;
      const a1 = -Math.PI / 2 + ((i + 1) / n) * TAU - 0.012;
      ctx.beginPath();
      ctx.arc(cx, cy, radius - 14, a0, a1);
      ctx.lineWidth = 7;
      ctx.strokeStyle = s.led[i] ? '#ffb300' : '#2e3440';
      ctx.stroke();
    }

    // needle at the echoed angle (or the drag ghost while dragging)
    const shown = this.ghostAngle ?? s.angleDeg;
    const needle = -Math.PI / 2 + (shown / 360) * TAU;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + Math.cos(needle) * (radius - 26), cy + Math.sin(needle) * (radius - 26));
    ctx.lineWidth = 4;
    ctx.strokeStyle = this.ghostAngle !== null ? '#8899aa' : '#eceff4';
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(cx, cy, 7, 0, TAU);
    ctx.fillStyle = s.heating ? '#ff6b35' : '#eceff4';
    ctx.fill();

    // offset label (echoed, never recomputed here)
    ctx.fillStyle = '#eceff4';
    ctx.font = '600 22px system-ui, sans-serif';
    ctx.textAlign = 'center';
    ctx.fillText(`+${s.offsetLabel}`, cx, cy + radius / 2);
    ctx.font = '13px system-ui, sans-serif';
    ctx.fillStyle = '#9fb0c0';
    ctx.fillText(
      s.heating ? 'heating' : s.booking ? 'booked' : `friction ${s.friction.toFixed(2)}`,
      cx,
      cy + radius / 2 + 20,
    );
  }
}

export function pressButton(): void {
  void postControl(controlLine('Press'));
}

export function abortButton(): void {
  void postControl(controlLine('Abort'));
}
