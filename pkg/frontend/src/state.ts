/**
 * Session state reducers.
 *
 * The dashboard is deliberately stateless about scheduling: every number
 * rendered (angle, offset, friction, load) is copied out of backend
 * messages. Nothing here recomputes an offset from an angle or a friction
 * from a profile; the kettle agent already did that and we echo it.
 */

import { decodeLine, Message, SequenceTracker } from './protocol.js';

export interface GridInfo {
  origin: number;
  horizon_s: number;
  bucket_s: number;
}

export interface BookingInfo {
  booking_id: string;
  appliance_id: string;
  start_abs_s: number;
  duration_s: number;
  power_w: number;
}

export interface DialState {
  angleDeg: number;
  offsetS: number;
  friction: number;
  overCap: boolean;
  offsetLabel: string;
  led: boolean[];
  booking: BookingInfo | null;
  heating: boolean;
  origin: number;
  pending: boolean;
  lastError: string | null;
}

export interface CommunityState {
  grid: GridInfo | null;
  raw: number[];
  biased: number[];
  capW: number | null;
  memberCount: number;
  peakW: number;
  peakBucket: number;
  loadFactor: number;
  snapshotCount: number;
  updateCount: number;
}

export type ConnectionState = 'connecting' | 'live' | 'offline';

export interface SessionState {
  kettleId: string;
  connection: ConnectionState;
  missedUpdates: number;
  dial: DialState;
  community: CommunityState;
}

export function formatOffset(offsetS: number): string {
  const m = Math.floor(offsetS / 60);
  const s = offsetS % 60;
  return `${m}:${s.toString().padStart(2, '0')}`;
}

export function initialState(kettleId: string): SessionState {
  return {
    kettleId,
    connection: 'connecting',
    missedUpdates: 0,
    dial: {
      angleDeg: 0,
      offsetS: 0,
      friction: 0,
      overCap: false,
      offsetLabel: formatOffset(0),
      led: [],
      booking: null,
      heating: false,
      origin: 0,
      pending: false,
      lastError: null,
    },
    community: {
      grid: null,
      raw: [],
      biased: [],
      capW: null,
      memberCount: 0,
      peakW: 0,
      peakBucket: 0,
      loadFactor: 0,
      snapshotCount: 0,
      updateCount: 0,
    },
  };
}

const poolSeqs = new WeakMap<SessionState, SequenceTracker>();

/** Forget seq history, e.g. after a reconnect to a restarted backend. */
export function resetSequences(state: SessionState): void {
  poolSeqs.delete(state);
}

export function applyMessage(state: SessionState, msg: Message): SessionState {
  const p = msg.payload as Record<string, any>;
  switch (msg.kind) {
    case 'FrictionEcho': {
      if (msg.sender !== state.kettleId) break;
      state.dial.angleDeg = p.angle_deg;
      state.dial.offsetS = p.offset_s;
      state.dial.friction = p.friction;
      state.dial.overCap = p.over_cap;
      state.dial.offsetLabel = formatOffset(p.offset_s);
      break;
    }
    case 'KettleStatus': {
      if (p.appliance_id !== state.kettleId) break;
      state.dial.angleDeg = p.angle_deg;
      state.dial.booking = p.booking;
      state.dial.heating = p.heating;
      state.dial.led = p.led;
      state.dial.origin = p.origin;
      // status always follows an ack or reject; the button is live again
      state.dial.pending = false;
      break;
    }
    case 'BookingAck': {
      if (p.appliance_id !== state.kettleId) break;
      state.dial.pending = false;
      state.dial.lastError = null;
      break;
    }
    case 'BookingReject': {
      if (p.appliance_id !== state.kettleId) break;
      state.dial.pending = false;
      state.dial.lastError = p.reason;
      break;
    }
    case 'PoolProfileUpdate': {
      let tracker = poolSeqs.get(state);
      if (!tracker) {
        tracker = new SequenceTracker();
        poolSeqs.set(state, tracker);
      }
      const { missed, stale } = tracker.observe('pool-broadcast', p.broadcast_seq);
      if (stale) break;
      state.missedUpdates += missed;
      state.community.grid = p.grid;
      state.community.raw = p.raw;
      state.community.biased = (p.biased_milli as number[]).map((b) => b / 1000);
      state.community.capW = p.cap_w;
      state.community.updateCount += 1;
      break;
    }
    case 'MetricsSnapshot': {
      state.community.grid = p.grid;
      state.community.raw = p.raw;
      state.community.biased = (p.biased_milli as number[]).map((b) => b / 1000);
      state.community.capW = p.cap_w;
      state.community.memberCount = p.member_count;
      state.community.peakW = p.peak_w;
      state.community.peakBucket = p.peak_bucket;
      state.community.loadFactor = p.load_factor;
      state.community.snapshotCount += 1;
      break;
    }
    default:
      break; // other traffic is not ours to interpret
  }
  return state;
}

export function applyLine(state: SessionState, line: string): SessionState {
  return applyMessage(state, decodeLine(line));
}
