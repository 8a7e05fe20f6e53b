/**
 * Dashboard acceptance: replay a recorded control-channel session
 * (frontend/tests/fixtures/session.txt, produced by a real scripted run)
 * and check that the dashboard shows exactly what the kettle echoed, and
 * that a booking made through the control channel appears in the
 * community graph by the very next snapshot.
 */

import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import { decodeLine } from '../src/protocol.js';
import { applyMessage, initialState } from '../src/state.js';

const FIXTURE = join(__dirname, 'fixtures', 'session.txt');
const DEMO = 'kettle000';

function sessionLines(): string[] {
  return readFileSync(FIXTURE, 'utf-8').split('\n').filter((l) => l.length > 0);
}

describe('dashboard fidelity over a scripted session', () => {
  it('dial state equals every control-channel echo exactly', () => {
    const state = initialState(DEMO);
    let echoes = 0;
    for (const line of sessionLines()) {
      const msg = decodeLine(line);
      applyMessage(state, msg);
      if (msg.kind === 'FrictionEcho' && msg.sender === DEMO) {
        echoes += 1;
        const p = msg.payload as Record<string, number>;
        expect(state.dial.angleDeg).toBe(p.angle_deg);
        expect(state.dial.offsetS).toBe(p.offset_s);
        expect(state.dial.friction).toBe(p.friction);
        const m = Math.floor(p.offset_s / 60);
        const s = p.offset_s % 60;
        expect(state.dial.offsetLabel).toBe(`${m}:${String(s).padStart(2, '0')}`);
      }
    }
    expect(echoes).toBeGreaterThanOrEqual(3);
  });

  it('a booking made through the UI lands in the community graph within one snapshot', () => {
    const state = initialState(DEMO);
    let booked: { start_abs_s: number; duration_s: number; power_w: number } | null =
      null;
    let rawBeforeBooking: number[] | null = null;
    for (const line of sessionLines()) {
      const msg = decodeLine(line);
      if (msg.kind === 'KettleStatus'
          && (msg.payload as any).appliance_id === DEMO
          && (msg.payload as any).booking !== null
          && booked === null) {
        booked = (msg.payload as any).booking;
        rawBeforeBooking = [...state.community.raw];
        applyMessage(state, msg);
        continue;
      }
      applyMessage(state, msg);
      if (booked !== null && msg.kind === 'MetricsSnapshot') {
        // the first snapshot after the booking: load visible at its buckets
        const grid = state.community.grid!;
        const first = Math.floor((booked.start_abs_s - grid.origin) / grid.bucket_s);
        const last = first + booked.duration_s / grid.bucket_s;
        for (let b = first; b < last; b++) {
          const before = rawBeforeBooking![b] ?? 0;
          expect(state.community.raw[b]).toBe(before + booked.power_w);
        }
        return;
      }
    }
    throw new Error('fixture had no snapshot after the booking');
  });

  it('LED ring in the status matches the booked buckets', () => {
    const state = initialState(DEMO);
    for (const line of sessionLines()) {
      applyMessage(state, decodeLine(line));
    }
    const booking = state.dial.booking!;
    expect(booking).not.toBeNull();
    const grid = state.community.grid!;
    const first = (booking.start_abs_s - state.dial.origin) / grid.bucket_s;
    const count = booking.duration_s / grid.bucket_s;
    state.dial.led.forEach((lit, i) => {
      expect(lit).toBe(i >= first && i < first + count);
    });
  });
});
